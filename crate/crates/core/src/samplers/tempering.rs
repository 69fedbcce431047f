use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_samples, check_start, ChainState, ProposalSpec, Trace};
use crate::distributions::{Point, Target};
use crate::error::{Error, Result};

/// Ascending temperatures `1 = T_1 < T_2 < ... < T_M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TemperatureLadder(Vec<f64>);

impl TemperatureLadder {
    pub fn new(temps: Vec<f64>) -> Result<Self> {
        match temps.first() {
            None => return Err(Error::invalid("ladder", "needs at least one temperature")),
            Some(&t) if t != 1.0 => {
                return Err(Error::invalid(
                    "ladder",
                    format!("first temperature must be 1, got {t}"),
                ))
            }
            _ => {}
        }
        if temps.iter().any(|t| !t.is_finite()) || temps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "ladder",
                "temperatures must be finite and strictly ascending",
            ));
        }
        Ok(Self(temps))
    }

    /// `T_i = ratio^(i-1)` for `i = 1..=n_chains`.
    pub fn geometric(n_chains: usize, ratio: f64) -> Result<Self> {
        if n_chains > 1 && !(ratio > 1.0) {
            return Err(Error::invalid(
                "ladder_ratio",
                format!("must exceed 1, got {ratio}"),
            ));
        }
        Self::new((0..n_chains).map(|i| ratio.powi(i as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn temps(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TemperatureLadder {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TemperatureLadder> for Vec<f64> {
    fn from(l: TemperatureLadder) -> Self {
        l.0
    }
}

/// Which chain pairs are offered a swap each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapPolicy {
    /// `floor(M/2)` disjoint pairs drawn uniformly; no chain is offered twice.
    #[default]
    RandomPairs,
    /// `floor(M/2)` distinct ladder-adjacent pairs drawn uniformly.
    NeighborsOnly,
}

impl FromStr for SwapPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "random_pairs" => Ok(SwapPolicy::RandomPairs),
            "neighbors" | "neighbors_only" => Ok(SwapPolicy::NeighborsOnly),
            other => Err(Error::invalid(
                "swap_policy",
                format!("unknown policy `{other}`, expected random or neighbors"),
            )),
        }
    }
}

impl fmt::Display for SwapPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwapPolicy::RandomPairs => "random_pairs",
            SwapPolicy::NeighborsOnly => "neighbors_only",
        })
    }
}

/// Log of the swap acceptance probability for states with log-densities
/// `log_pi_i`, `log_pi_j` held at temperatures `t_i`, `t_j`.
pub fn swap_log_acceptance(log_pi_i: f64, log_pi_j: f64, t_i: f64, t_j: f64) -> f64 {
    let r = (1.0 / t_i - 1.0 / t_j) * (log_pi_j - log_pi_i);
    if r.is_nan() {
        f64::NEG_INFINITY
    } else {
        r.min(0.0)
    }
}

/// Probability of exchanging `xi` (at `t_i`) with `xj` (at `t_j`):
/// `min(1, pi(xj)^(1/Ti) pi(xi)^(1/Tj) / (pi(xi)^(1/Ti) pi(xj)^(1/Tj)))`.
pub fn swap_acceptance(target: &Target, xi: &Point, xj: &Point, t_i: f64, t_j: f64) -> Result<f64> {
    for t in [t_i, t_j] {
        if !(t >= 1.0) {
            return Err(Error::TemperatureBelowOne(t));
        }
    }
    let (li, lj) = (target.log_density(xi)?, target.log_density(xj)?);
    Ok(swap_log_acceptance(li, lj, t_i, t_j).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mc3Options {
    pub n_chains: usize,
    pub ladder: TemperatureLadder,
    pub proposal: ProposalSpec,
    pub swap_policy: SwapPolicy,
    /// Keep every chain's history, not only the cold chain.
    pub record_all_chains: bool,
}

impl Mc3Options {
    /// Geometric ladder with ratio 2 and random-pair swaps.
    pub fn new(n_chains: usize, proposal: ProposalSpec) -> Result<Self> {
        Ok(Self {
            n_chains,
            ladder: TemperatureLadder::geometric(n_chains, 2.0)?,
            proposal,
            swap_policy: SwapPolicy::RandomPairs,
            record_all_chains: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::invalid("chains", "must be at least 1"));
        }
        if self.ladder.len() != self.n_chains {
            return Err(Error::invalid(
                "ladder",
                format!(
                    "{} temperatures for {} chains",
                    self.ladder.len(),
                    self.n_chains
                ),
            ));
        }
        self.proposal.validate()
    }
}

/// Draws one of the remaining items uniformly and removes it.
fn take<R: Rng + ?Sized>(pool: &mut Vec<usize>, rng: &mut R) -> usize {
    let k = rng.random_range(0..pool.len());
    pool.swap_remove(k)
}

/// Metropolis-coupled MCMC: all chains start at `x0`; each iteration updates
/// every chain at its temperature, then offers `floor(M/2)` swaps. The trace
/// records the cold chain after the swap phase.
pub fn run_mc3<R: Rng + ?Sized>(
    target: &Target,
    n: usize,
    options: &Mc3Options,
    x0: &Point,
    rng: &mut R,
) -> Result<Trace> {
    check_samples(n)?;
    check_start(target, x0)?;
    options.validate()?;
    let m = options.n_chains;
    let temps = options.ladder.temps();

    let initial = ChainState::new(target, x0.clone())?;
    let mut chains = vec![initial; m];
    let mut trace = Trace::with_capacity(n, m, options.record_all_chains);
    let mut accepted = vec![false; m];
    let mut swapped = vec![false; m];
    record(&mut trace, &chains, &accepted, &swapped);

    let n_swaps = m / 2;
    let mut pool = Vec::with_capacity(m);
    for _ in 1..n {
        for (k, chain) in chains.iter_mut().enumerate() {
            accepted[k] = chain.step(target, &options.proposal, temps[k], rng)?;
            trace.accept_counts[k] += usize::from(accepted[k]);
        }
        swapped.fill(false);

        pool.clear();
        match options.swap_policy {
            SwapPolicy::RandomPairs => pool.extend(0..m),
            SwapPolicy::NeighborsOnly => pool.extend(0..m.saturating_sub(1)),
        }
        for _ in 0..n_swaps {
            let (i, j) = match options.swap_policy {
                SwapPolicy::RandomPairs => {
                    let i = take(&mut pool, rng);
                    (i, take(&mut pool, rng))
                }
                SwapPolicy::NeighborsOnly => {
                    let i = take(&mut pool, rng);
                    (i, i + 1)
                }
            };
            let u: f64 = rng.random();
            trace.swap_attempts += 1;
            let log_a = swap_log_acceptance(
                chains[i].log_density,
                chains[j].log_density,
                temps[i],
                temps[j],
            );
            if u.ln() < log_a {
                chains.swap(i, j);
                swapped[i] = true;
                swapped[j] = true;
                trace.swap_accepts += 1;
            }
        }
        record(&mut trace, &chains, &accepted, &swapped);
    }
    Ok(trace)
}

fn record(trace: &mut Trace, chains: &[ChainState], accepted: &[bool], swapped: &[bool]) {
    trace.positions.push(chains[0].position.clone());
    trace.accepted.push(accepted[0]);
    trace.swapped.push(swapped[0]);
    if let Some(h) = trace.all_chains.as_mut() {
        h.positions
            .extend(chains.iter().map(|c| c.position.clone()));
        h.accepted.extend_from_slice(accepted);
        h.swapped.extend_from_slice(swapped);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{generate_patchy_environment, UnimodalGaussian};
    use crate::samplers::run_rwm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normal() -> Target {
        UnimodalGaussian::standard(1, 1.0).unwrap().into()
    }

    #[test]
    fn ladder_validation() {
        assert_eq!(
            TemperatureLadder::geometric(4, 2.0).unwrap().temps(),
            &[1.0, 2.0, 4.0, 8.0]
        );
        assert_eq!(
            TemperatureLadder::geometric(1, 2.0).unwrap().temps(),
            &[1.0]
        );
        assert!(TemperatureLadder::new(vec![]).is_err());
        assert!(TemperatureLadder::new(vec![2.0, 3.0]).is_err());
        assert!(TemperatureLadder::new(vec![1.0, 3.0, 3.0]).is_err());
        assert!(serde_json::from_str::<TemperatureLadder>("[1.0, 0.5]").is_err());
    }

    #[test]
    fn swap_acceptance_examples() {
        let t = normal();
        let (a, b) = (Point::from(vec![0.0]), Point::from(vec![2.0]));
        assert_eq!(swap_acceptance(&t, &a, &a, 1.0, 4.0).unwrap(), 1.0);
        assert_eq!(swap_acceptance(&t, &a, &b, 3.0, 3.0).unwrap(), 1.0);
        let v = swap_acceptance(&t, &a, &b, 1.0, 4.0).unwrap();
        assert!((v - (-1.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.22313016014842982).abs() < 1e-12);
        // Cold chain in the worse state: always swap.
        assert_eq!(swap_acceptance(&t, &b, &a, 1.0, 4.0).unwrap(), 1.0);
        assert!(swap_acceptance(&t, &a, &b, 0.5, 4.0).is_err());
    }

    #[test]
    fn huge_log_densities_stay_in_range() {
        for (li, lj) in [(-1e6, 0.0), (0.0, -1e6), (1e6, -1e6), (-1e6, -1e6)] {
            let a = swap_log_acceptance(li, lj, 1.0, 128.0).exp();
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn single_chain_reduces_to_rwm() {
        let t = normal();
        let prop = ProposalSpec::gaussian(0.8).unwrap();
        let x0 = Point::from(vec![0.0]);
        let opts = Mc3Options::new(1, prop.clone()).unwrap();
        let a = run_mc3(&t, 500, &opts, &x0, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        let b = run_rwm(&t, 500, &x0, &prop, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn swap_counts_per_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let env: Target = generate_patchy_environment(5, 6.0, 2, &mut rng)
            .unwrap()
            .into();
        let x0 = env.default_start();
        for (m, policy) in [
            (8, SwapPolicy::RandomPairs),
            (7, SwapPolicy::NeighborsOnly),
            (2, SwapPolicy::NeighborsOnly),
        ] {
            let mut opts = Mc3Options::new(m, ProposalSpec::gaussian(1.0).unwrap()).unwrap();
            opts.swap_policy = policy;
            opts.record_all_chains = true;
            let tr = run_mc3(&env, 300, &opts, &x0, &mut rng).unwrap();
            assert_eq!(tr.len(), 300);
            assert_eq!(tr.swap_attempts, 299 * (m / 2));
            assert!(tr.swap_accepts <= tr.swap_attempts);
            assert!(tr.accept_counts.iter().all(|&c| c <= 299));
            let h = tr.all_chains.as_ref().unwrap();
            assert_eq!(h.positions.len(), 300 * m);
            for t in 0..300 {
                assert_eq!(h.position(t, 0), &tr.positions[t]);
            }
        }
    }

    #[test]
    fn random_pairs_never_reuse_a_chain() {
        // With M = 2 under random pairs exactly one swap is offered per iteration
        // and both chains take part in it.
        let t = normal();
        let mut opts = Mc3Options::new(2, ProposalSpec::gaussian(1.0).unwrap()).unwrap();
        opts.record_all_chains = true;
        let tr = run_mc3(
            &t,
            200,
            &opts,
            &Point::from(vec![0.0]),
            &mut ChaCha8Rng::seed_from_u64(3),
        )
        .unwrap();
        let h = tr.all_chains.unwrap();
        for k in 0..h.swapped.len() / 2 {
            assert_eq!(h.swapped[2 * k], h.swapped[2 * k + 1]);
        }
    }

    #[test]
    fn option_errors() {
        let t = normal();
        let x0 = Point::from(vec![0.0]);
        let mut opts = Mc3Options::new(3, ProposalSpec::gaussian(1.0).unwrap()).unwrap();
        opts.n_chains = 4;
        assert!(run_mc3(&t, 10, &opts, &x0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        opts.n_chains = 0;
        assert!(run_mc3(&t, 10, &opts, &x0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!("random".parse::<SwapPolicy>().is_ok());
        assert!("sideways".parse::<SwapPolicy>().is_err());
    }
}
