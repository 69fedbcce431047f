use std::path::Path;

use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, ExperimentKind};
use super::results::{Fit, FitRecord, KlRow, ResultRow, ResultSet};
use super::summary::{summarize_with, Summary, SummaryOptions};
use crate::analysis::{
    fit_power_law_with_bins, fit_spectral_slope_with_blocks, flight_distances, kl_mode_divergence,
    mode_visit_counts, periodogram,
};
use crate::distributions::{
    generate_patchy_environment, GaussianMixture, Point, Target, UnimodalGaussian,
};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRole};
use crate::samplers::{run_ds, run_mc3, run_rwm, ProposalSpec, Trace};

/// A named output file held in memory until the run finishes.
#[derive(Clone, Debug, PartialEq)]
struct Artifact {
    name: String,
    bytes: Vec<u8>,
}

/// One point of a sweep.
#[derive(Clone, Copy, Debug)]
struct Cell {
    index: usize,
    parameter: &'static str,
    value: f64,
}

struct TaskOutput {
    results: ResultSet,
    artifacts: Vec<Artifact>,
}

/// Results of a finished run together with its summary.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub results: ResultSet,
    pub summary: Summary,
}

fn role(algorithm: Algorithm) -> StreamRole {
    match algorithm {
        Algorithm::Ds => StreamRole::Direct,
        Algorithm::Rwm => StreamRole::Metropolis,
        Algorithm::Mc3 => StreamRole::Coupled,
        Algorithm::RwmLevy => StreamRole::LevyMetropolis,
    }
}

fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let sweep = |parameter, values: &[f64]| {
        values
            .iter()
            .enumerate()
            .map(|(index, &value)| Cell {
                index,
                parameter,
                value,
            })
            .collect()
    };
    match config.experiment {
        ExperimentKind::Sparsity | ExperimentKind::LevyProposalControl => {
            sweep("r", &config.sweep.r_values)
        }
        ExperimentKind::RatioSweep => sweep("ratio", &config.sweep.ratios),
        ExperimentKind::Spectrum => sweep("sigma_target", &[config.target.sigma_target]),
        ExperimentKind::Levy | ExperimentKind::KlRace => sweep("r", &[config.target.r]),
    }
}

/// File-name suffix; single-cell experiments omit the cell.
fn tag(multi_cell: bool, cell: usize, replicate: usize) -> String {
    if multi_cell {
        format!("c{cell}_{replicate}")
    } else {
        replicate.to_string()
    }
}

fn environment(
    config: &ExperimentConfig,
    seed: u64,
    cell: Cell,
    replicate: usize,
) -> Result<GaussianMixture> {
    let mut rng = stream(seed, cell.index, replicate, StreamRole::Environment);
    generate_patchy_environment(
        config.target.n_modes,
        cell.value,
        config.target.dim,
        &mut rng,
    )
}

fn proposal_sigma(config: &ExperimentConfig, cell: Cell) -> f64 {
    match config.experiment {
        ExperimentKind::RatioSweep => config.target.sigma_target / cell.value,
        _ => config.proposal_sigma,
    }
}

fn sample(
    config: &ExperimentConfig,
    target: &Target,
    algorithm: Algorithm,
    sigma: f64,
    r: f64,
    rng_seed: (u64, usize, usize),
) -> Result<Trace> {
    let (seed, cell, replicate) = rng_seed;
    let mut rng = stream(seed, cell, replicate, role(algorithm));
    let start = match &config.start {
        Some(s) => Point::new(s.clone())?,
        None => target.default_start(),
    };
    let n = config.samples;
    match algorithm {
        Algorithm::Ds => run_ds(target, n, &mut rng),
        Algorithm::Rwm => run_rwm(target, n, &start, &ProposalSpec::gaussian(sigma)?, &mut rng),
        Algorithm::RwmLevy => {
            let l = &config.levy;
            let proposal = ProposalSpec::levy(l.mu, l.lmin_factor * sigma, l.lmax_factor * r)?;
            run_rwm(target, n, &start, &proposal, &mut rng)
        }
        Algorithm::Mc3 => {
            let options = config.mc3_options(ProposalSpec::gaussian(sigma)?)?;
            run_mc3(target, n, &options, &start, &mut rng)
        }
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Histogram of one coordinate on `[mean - 4 sd, mean + 4 sd]` next to the target density.
fn histogram_csv(values: &[f64], target: &UnimodalGaussian) -> Result<Vec<u8>> {
    const BINS: usize = 40;
    let (mu, sd) = (target.mean()[0], target.sigma());
    let (lo, width) = (mu - 4.0 * sd, 8.0 * sd / BINS as f64);
    let mut counts = [0usize; BINS];
    for v in values {
        let k = ((v - lo) / width).floor();
        if k >= 0.0 && (k as usize) < BINS {
            counts[k as usize] += 1;
        }
    }
    csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["bin_lo", "bin_hi", "count", "density", "target_density"])?;
        for (k, &c) in counts.iter().enumerate() {
            let a = lo + k as f64 * width;
            let mid = a + width / 2.0;
            let z = (mid - mu) / sd;
            let pdf = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            w.write_record([
                a.to_string(),
                (a + width).to_string(),
                c.to_string(),
                (c as f64 / (values.len() as f64 * width)).to_string(),
                pdf.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    })
}

fn run_task(
    config: &ExperimentConfig,
    seed: u64,
    cell: Cell,
    replicate: usize,
    keep_files: bool,
) -> Result<TaskOutput> {
    let kind = config.experiment;
    let multi_cell = cells(config).len() > 1;
    let tag = tag(multi_cell, cell.index, replicate);
    let mut artifacts = Vec::new();
    let mut results = ResultSet::default();

    let sigma = proposal_sigma(config, cell);
    let (target, sparsity) = if kind.uses_mixture() {
        let env = environment(config, seed, cell, replicate)?;
        if keep_files {
            artifacts.push(Artifact {
                name: format!("env_{tag}.json"),
                bytes: serde_json::to_vec_pretty(&env)?,
            });
        }
        let sparsity = env.mean_mode_distance().ok();
        (Target::Mixture(env), sparsity)
    } else {
        let g = UnimodalGaussian::standard(config.target.dim, config.target.sigma_target)?;
        (Target::Unimodal(g), None)
    };
    let r = if kind.uses_mixture() {
        cell.value
    } else {
        config.target.r
    };
    let first_replicate = replicate == 0;

    for &algorithm in &config.algorithms {
        let trace = sample(
            config,
            &target,
            algorithm,
            sigma,
            r,
            (seed, cell.index, replicate),
        )?;
        let slug = algorithm.slug();
        if keep_files && config.persist_traces {
            artifacts.push(Artifact {
                name: format!("trace_{slug}_{tag}.csv"),
                bytes: csv_bytes(|b| trace.write_csv(b, config.full_chains))?,
            });
        }
        let plot_this = keep_files && (config.persist_traces || first_replicate);
        let mut row = ResultRow {
            experiment: kind,
            master_seed: seed,
            cell: cell.index,
            parameter: cell.parameter.to_string(),
            parameter_value: cell.value,
            sparsity,
            algorithm,
            replicate,
            metric: String::new(),
            value: None,
            r_squared: None,
            n_points: None,
            excluded_zeros: None,
            acceptance_rate: (algorithm != Algorithm::Ds).then(|| trace.acceptance_rate(0)),
            swap_rate: trace.swap_rate(),
            top_mode_fraction: None,
            fit_error: None,
        };
        if let Target::Mixture(m) = &target {
            let counts = mode_visit_counts(&trace.positions, m)?;
            let top = counts.iter().copied().max().unwrap_or(0);
            row.top_mode_fraction = Some(top as f64 / trace.len() as f64);
        }

        match kind {
            ExperimentKind::Levy
            | ExperimentKind::Sparsity
            | ExperimentKind::LevyProposalControl => {
                row.metric = "mu_hat".into();
                let distances = flight_distances(&trace)?;
                match fit_power_law_with_bins(&distances, &config.power_law_options()) {
                    Ok((fit, bins)) => {
                        row.value = Some(fit.mu_hat);
                        row.r_squared = Some(fit.r_squared);
                        row.n_points = Some(fit.n_cells);
                        row.excluded_zeros = Some(fit.n_zero_flights_excluded);
                        results.fits.push(FitRecord {
                            cell: cell.index,
                            replicate,
                            algorithm,
                            fit: Fit::PowerLaw(fit),
                        });
                        if plot_this {
                            artifacts.push(Artifact {
                                name: format!("plotdata_powerlaw_{slug}_{tag}.csv"),
                                bytes: csv_bytes(|b| bins.write_csv(b))?,
                            });
                        }
                    }
                    Err(e) => row.fit_error = Some(e.to_string()),
                }
            }
            ExperimentKind::Spectrum | ExperimentKind::RatioSweep => {
                row.metric = "alpha_hat".into();
                let series = trace.coordinate(0);
                let fitted = periodogram(&series)
                    .and_then(|p| fit_spectral_slope_with_blocks(&p, config.analysis.n_blocks));
                match fitted {
                    Ok((fit, blocks)) => {
                        row.value = Some(fit.alpha_hat);
                        row.r_squared = Some(fit.r_squared);
                        row.n_points = Some(fit.n_blocks);
                        row.excluded_zeros = Some(fit.excluded_zeros);
                        results.fits.push(FitRecord {
                            cell: cell.index,
                            replicate,
                            algorithm,
                            fit: Fit::Spectral(fit),
                        });
                        if plot_this {
                            artifacts.push(Artifact {
                                name: format!("plotdata_spectrum_{slug}_{tag}.csv"),
                                bytes: csv_bytes(|b| blocks.write_csv(b))?,
                            });
                            if let Target::Unimodal(g) = &target {
                                artifacts.push(Artifact {
                                    name: format!("plotdata_hist_{slug}_{tag}.csv"),
                                    bytes: histogram_csv(&series, g)?,
                                });
                            }
                        }
                    }
                    Err(e) => row.fit_error = Some(e.to_string()),
                }
            }
            ExperimentKind::KlRace => {
                row.metric = "kl_final".into();
                let checkpoints = config.kl_checkpoints();
                let traj = kl_mode_divergence(&trace.positions, &target, &checkpoints)?;
                let last = traj.last().expect("checkpoints are nonempty");
                row.value = Some(last.kl);
                row.n_points = Some(last.t);
                results
                    .kl_trajectories
                    .extend(traj.values.iter().map(|p| KlRow {
                        replicate,
                        algorithm,
                        t: p.t,
                        kl: p.kl,
                    }));
            }
        }
        results.rows.push(row);
    }
    Ok(TaskOutput { results, artifacts })
}

/// Runs `config` on the current rayon pool. Files are written only when
/// `output_dir` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let seed = config.seed()?;
    let keep_files = config.output_dir.is_some();
    let tasks: Vec<(Cell, usize)> = cells(config)
        .into_iter()
        .flat_map(|c| (0..config.replicates).map(move |rep| (c, rep)))
        .collect();
    let outputs: Vec<TaskOutput> = tasks
        .par_iter()
        .map(|&(cell, rep)| run_task(config, seed, cell, rep, keep_files))
        .collect::<Result<_>>()?;

    let mut results = ResultSet::default();
    let mut artifacts = Vec::new();
    for out in outputs {
        results.extend(out.results);
        artifacts.extend(out.artifacts);
    }
    let summary = summarize_with(
        &results,
        &SummaryOptions {
            trend_cells: config.sweep.trend_cells,
        },
    )?;
    if let Some(dir) = &config.output_dir {
        write_outputs(dir, config, &results, &summary, &artifacts)?;
    }
    Ok(RunOutcome { results, summary })
}

/// Like [`run_experiment`], on a dedicated pool of `jobs` threads.
pub fn run_experiment_with_jobs(
    config: &ExperimentConfig,
    jobs: Option<usize>,
) -> Result<RunOutcome> {
    match jobs {
        None => run_experiment(config),
        Some(0) => Err(Error::invalid("jobs", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid("jobs", e.to_string()))?
            .install(|| run_experiment(config)),
    }
}

fn expect_kind(config: &ExperimentConfig, kinds: &[ExperimentKind]) -> Result<()> {
    if kinds.contains(&config.experiment) {
        Ok(())
    } else {
        Err(Error::invalid(
            "experiment",
            format!("runner does not handle `{}`", config.experiment),
        ))
    }
}

pub fn run_levy_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(config, &[ExperimentKind::Levy])?;
    run_experiment(config)
}

/// Sparsity sweep; the Levy-proposal control runs through the same path.
pub fn run_sparsity_sweep(config: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(
        config,
        &[
            ExperimentKind::Sparsity,
            ExperimentKind::LevyProposalControl,
        ],
    )?;
    run_experiment(config)
}

pub fn run_kl_race(config: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(config, &[ExperimentKind::KlRace])?;
    run_experiment(config)
}

pub fn run_spectrum_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(config, &[ExperimentKind::Spectrum])?;
    run_experiment(config)
}

pub fn run_ratio_sweep(config: &ExperimentConfig) -> Result<RunOutcome> {
    expect_kind(config, &[ExperimentKind::RatioSweep])?;
    run_experiment(config)
}

pub(crate) fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(&path, e))?;
    tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    Ok(())
}

fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    results: &ResultSet,
    summary: &Summary,
    artifacts: &[Artifact],
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in artifacts {
        write_atomic(dir, &a.name, &a.bytes)?;
    }
    write_atomic(
        dir,
        "results.csv",
        &csv_bytes(|b| results.write_rows_csv(b))?,
    )?;
    if !results.kl_trajectories.is_empty() {
        write_atomic(
            dir,
            "kl_trajectories.csv",
            &csv_bytes(|b| results.write_kl_csv(b))?,
        )?;
    }
    if !results.fits.is_empty() {
        write_atomic(dir, "fits.json", &serde_json::to_vec_pretty(&results.fits)?)?;
    }
    let mut resolved = config.clone();
    resolved.output_dir = None;
    write_atomic(dir, "config.json", resolved.to_json_pretty().as_bytes())?;
    write_atomic(dir, "summary.json", &serde_json::to_vec_pretty(summary)?)?;
    Ok(())
}
