use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use sampler_lab::analysis::{fit_power_law, fit_spectral_slope, periodogram};
use sampler_lab::distributions::generate_patchy_environment;
use sampler_lab::samplers::{run_mc3, run_rwm, truncated_power_law_quantile};
use sampler_lab::{Mc3Options, Point, PowerLawOptions, ProposalSpec, Target};

fn environment() -> Target {
    generate_patchy_environment(15, 9.0, 2, &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap()
        .into()
}

fn log_density(c: &mut Criterion) {
    let target = environment();
    let x = Point::from(vec![0.3, -1.2]);
    c.bench_function("mixture_log_density_15x2", |b| {
        b.iter(|| target.log_density(black_box(&x)).unwrap())
    });
}

fn samplers(c: &mut Criterion) {
    let target = environment();
    let x0 = target.default_start();
    let proposal = ProposalSpec::gaussian(1.0).unwrap();
    c.bench_function("rwm_1024", |b| {
        b.iter(|| {
            run_rwm(
                &target,
                1024,
                &x0,
                &proposal,
                &mut ChaCha8Rng::seed_from_u64(2),
            )
            .unwrap()
        })
    });
    let mut group = c.benchmark_group("mc3_1024");
    for m in [2usize, 8] {
        let opts = Mc3Options::new(m, proposal.clone()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &opts, |b, opts| {
            b.iter(|| run_mc3(&target, 1024, opts, &x0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap())
        });
    }
    group.finish();
}

fn estimators(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let distances: Vec<f64> = (0..100_000)
        .map(|_| truncated_power_law_quantile(rng.random(), 2.0, 1.0, 1000.0))
        .collect();
    let opts = PowerLawOptions::default();
    c.bench_function("fit_power_law_1e5", |b| {
        b.iter(|| fit_power_law(black_box(&distances), &opts).unwrap())
    });

    let series: Vec<f64> = (0..1024).map(|_| rng.random::<f64>()).collect();
    c.bench_function("periodogram_1024", |b| {
        b.iter(|| periodogram(black_box(&series)).unwrap())
    });
    let pgram = periodogram(&series).unwrap();
    c.bench_function("fit_spectral_slope_512", |b| {
        b.iter(|| fit_spectral_slope(black_box(&pgram), 10).unwrap())
    });
}

criterion_group!(benches, log_density, samplers, estimators);
criterion_main!(benches);
