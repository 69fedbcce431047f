use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sampler_lab::analysis::{
    autocorrelation, fit_power_law, fit_spectral_slope, kl_from_uniform, periodogram,
};
use sampler_lab::distributions::{generate_patchy_environment, log_sum_exp};
use sampler_lab::samplers::{
    metropolis_acceptance, run_mc3, run_rwm, swap_log_acceptance, Mc3Options, SwapPolicy,
    TemperatureLadder,
};
use sampler_lab::{Point, PowerLawOptions, ProposalSpec, Target};

fn finite() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn log_sum_exp_bounds(terms in prop::collection::vec(-800.0..800.0f64, 1..30)) {
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = log_sum_exp(&terms);
        prop_assert!(v >= m - 1e-12);
        prop_assert!(v <= m + (terms.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn environments_satisfy_invariants(seed in any::<u64>(), n in 1usize..25, r in 0.1..50.0f64, dim in 1usize..5) {
        let env = generate_patchy_environment(n, r, dim, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(env.n_modes(), n);
        prop_assert!(env.means().iter().all(|m| m.dim() == dim && m.iter().all(|c| c.abs() <= r)));
        prop_assert!((env.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_mode_matches_brute_force(seed in any::<u64>(), x in finite(), y in finite()) {
        let env = generate_patchy_environment(15, 9.0, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let p = Point::from(vec![x / 50.0, y / 50.0]);
        let k = env.nearest_mode(&p).unwrap();
        let d = |j: usize| p.squared_distance(&env.means()[j]);
        for j in 0..env.n_modes() {
            prop_assert!(d(k) < d(j) || (d(k) == d(j) && k <= j));
        }
    }

    #[test]
    fn acceptances_are_probabilities(
        a in -1e6..1e6f64,
        b in -1e6..1e6f64,
        ti in 1.0..1e3f64,
        tj in 1.0..1e3f64,
    ) {
        let p = metropolis_acceptance(a, b, ti);
        prop_assert!((0.0..=1.0).contains(&p));
        let s = swap_log_acceptance(a, b, ti, tj).exp();
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn swap_pairwise_property(a in -1e6..1e6f64, b in -1e6..1e6f64, ti in 1.0..50.0f64, tj in 1.0..50.0f64) {
        // Exchanging which state sits at which temperature flips the sign of the log ratio.
        let fwd = swap_log_acceptance(a, b, ti, tj).exp();
        let rev = swap_log_acceptance(b, a, ti, tj).exp();
        prop_assert!(fwd == 1.0 || rev == 1.0);
    }

    #[test]
    fn power_law_fit_is_scale_invariant(
        seed in any::<u64>(),
        scale in 0.01..100.0f64,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powf(-0.8)).collect();
        let scaled: Vec<f64> = d.iter().map(|v| v * scale).collect();
        let opts = PowerLawOptions::default();
        let (a, b) = (fit_power_law(&d, &opts).unwrap(), fit_power_law(&scaled, &opts).unwrap());
        prop_assert!((a.mu_hat - b.mu_hat).abs() < 1e-9, "{} vs {}", a.mu_hat, b.mu_hat);
    }

    #[test]
    fn spectral_fit_ignores_offsets(
        series in prop::collection::vec(-10.0..10.0f64, 64..300),
        offset in -1e3..1e3f64,
    ) {
        let shifted: Vec<f64> = series.iter().map(|v| v + offset).collect();
        let p = periodogram(&series).unwrap();
        prop_assert!(p.iter().all(|s| s.power >= 0.0 && s.frequency > 0.0));
        let a = fit_spectral_slope(&p, 10);
        let b = fit_spectral_slope(&periodogram(&shifted).unwrap(), 10);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.alpha_hat - b.alpha_hat).abs() < 1e-6, "{} vs {}", a.alpha_hat, b.alpha_hat);
        }
    }

    #[test]
    fn autocorrelation_is_bounded(series in prop::collection::vec(finite(), 10..200)) {
        if let Ok(c) = autocorrelation(&series, 9) {
            prop_assert!((c[0] - 1.0).abs() < 1e-12);
            prop_assert!(c.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn kl_lies_between_zero_and_log_modes(counts in prop::collection::vec(0usize..1000, 1..20)) {
        let kl = kl_from_uniform(&counts);
        prop_assert!(kl >= -1e-12);
        prop_assert!(kl <= (counts.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>(), policy in prop_oneof![Just(SwapPolicy::RandomPairs), Just(SwapPolicy::NeighborsOnly)]) {
        let env: Target = generate_patchy_environment(5, 6.0, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap().into();
        let x0 = env.default_start();
        let proposal = ProposalSpec::gaussian(1.0).unwrap();
        let a = run_rwm(&env, 100, &x0, &proposal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = run_rwm(&env, 100, &x0, &proposal, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(a, b);
        let opts = Mc3Options {
            n_chains: 5,
            ladder: TemperatureLadder::geometric(5, 2.0).unwrap(),
            proposal,
            swap_policy: policy,
            record_all_chains: true,
        };
        let a = run_mc3(&env, 100, &opts, &x0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = run_mc3(&env, 100, &opts, &x0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.swap_attempts, 99 * 2);
        prop_assert!(a.positions.iter().all(|p| p.dim() == 2));
    }
}
