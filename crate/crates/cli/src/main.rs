mod input;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sampler_lab::analysis::{fit_power_law_with_bins, fit_spectral_slope_with_blocks, periodogram};
use sampler_lab::experiments::{
    run_experiment_with_jobs, write_file_atomic, ExperimentConfig, ExperimentKind, Overrides,
    Summary, STANDARD_SUITE,
};
use sampler_lab::{PowerLawOptions, SwapPolicy};

const OUT_ENV: &str = "SAMPLER_LAB_OUT";

#[derive(Parser)]
#[command(
    name = "sampler-lab",
    version,
    about = "Seeded sampler experiments: Levy flights, 1/f spectra, mode coverage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flight-distance exponents on a patchy environment.
    Levy(RunArgs),
    /// Exponents across environment ranges (also accepts a levy_proposal_control config).
    Sparsity(RunArgs),
    /// Mode-coverage KL divergence race.
    Kl(RunArgs),
    /// Spectral slopes on a unimodal Gaussian.
    Spectrum(RunArgs),
    /// Spectral slopes across target/proposal width ratios.
    Ratio(RunArgs),
    /// All five experiments into one timestamped directory.
    All(RunArgs),
    /// Fit a power-law exponent to a column of distances.
    Fit(FitArgs),
    /// Fit a spectral slope to a time series.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Clone, Debug)]
struct RunArgs {
    /// JSON experiment config; absent keys take the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Samples per chain (L).
    #[arg(long)]
    samples: Option<usize>,
    /// MC3 chains (M); the ladder stays geometric.
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (for `all`, the parent of the timestamped directory).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_policy)]
    swap_policy: Option<SwapPolicy>,
    /// Persist every MC3 chain in trace files, not only the cold one.
    #[arg(long)]
    full_chains: bool,
}

#[derive(Args, Debug)]
struct SeriesInput {
    /// CSV file holding the values.
    #[arg(long, required_unless_present = "trace", conflicts_with = "trace")]
    input: Option<PathBuf>,
    /// Column name or 0-based index; defaults to the first column.
    #[arg(long)]
    column: Option<String>,
    /// Trace CSV written by an experiment; the cold chain is used.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    source: SeriesInput,
    #[arg(long, default_value_t = 10)]
    windows: usize,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Also write the log-binned points and cell means here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: SeriesInput,
    #[arg(long, default_value_t = 10)]
    blocks: usize,
    /// Coordinate of the trace to analyze.
    #[arg(long, default_value_t = 0)]
    axis: usize,
    /// Also write the block-averaged periodogram here.
    #[arg(long)]
    plotdata: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<SwapPolicy, String> {
    s.parse().map_err(|e: sampler_lab::Error| e.to_string())
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            chains: self.chains,
            replicates: self.replicates,
            output_dir: None,
            swap_policy: self.swap_policy,
            full_chains: self.full_chains,
        }
    }
}

fn load_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            if !path.exists() {
                bail!("config file {} does not exist", path.display());
            }
            ExperimentConfig::from_path(path)?
        }
        None => ExperimentConfig::defaults(kind),
    };
    let accepted = config.experiment == kind
        || (kind == ExperimentKind::Sparsity
            && config.experiment == ExperimentKind::LevyProposalControl);
    if !accepted {
        bail!(
            "config describes a `{}` experiment but the `{}` subcommand was used",
            config.experiment,
            kind
        );
    }
    config.apply(&args.overrides())?;
    config.seed()?;
    Ok(config)
}

/// `$SAMPLER_LAB_OUT`, else `runs`.
fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn run_one(kind: ExperimentKind, args: &RunArgs) -> Result<Summary> {
    let mut config = load_config(kind, args)?;
    let dir = match (&args.out, &config.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) => dir.clone(),
        (None, None) => output_root().join(config.experiment.name()),
    };
    config.output_dir = Some(dir.clone());
    let outcome = run_experiment_with_jobs(&config, args.jobs)?;
    print!("{}", outcome.summary.report());
    println!("wrote {}", dir.display());
    Ok(outcome.summary)
}

fn run_all(args: &RunArgs) -> Result<()> {
    if args.config.is_some() {
        bail!("`all` uses each experiment's defaults; pass overrides as flags instead of --config");
    }
    let root = match &args.out {
        Some(out) => out.clone(),
        None => output_root(),
    };
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S");
    let dir = root.join(format!("all_{stamp}"));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let mut summaries = Vec::new();
    for kind in STANDARD_SUITE {
        let sub = RunArgs {
            out: Some(dir.join(kind.name())),
            ..args.clone()
        };
        summaries.push(run_one(kind, &sub)?);
    }
    let mut report = String::new();
    for s in &summaries {
        for c in &s.criteria {
            report += &format!("{c}\n");
        }
    }
    let passed = summaries
        .iter()
        .flat_map(|s| &s.criteria)
        .filter(|c| c.passed())
        .count();
    let total: usize = summaries.iter().map(|s| s.criteria.len()).sum();
    report += &format!("{passed}/{total} criteria passed\n");
    write_file_atomic(&dir, "report.txt", report.as_bytes())?;
    write_file_atomic(&dir, "report.json", &serde_json::to_vec_pretty(&summaries)?)?;
    println!("\n{report}wrote {}", dir.display());
    Ok(())
}

fn series(source: &SeriesInput, axis: usize, distances: bool) -> Result<Vec<f64>> {
    if let Some(trace) = &source.trace {
        let positions = input::read_trace_positions(trace)?;
        if distances {
            return Ok(positions.windows(2).map(|w| w[0].distance(&w[1])).collect());
        }
        let dim = positions.first().map_or(0, |p| p.dim());
        if axis >= dim {
            bail!("axis {axis} out of range for a {dim}-dimensional trace");
        }
        return Ok(positions.iter().map(|p| p[axis]).collect());
    }
    let path = source
        .input
        .as_deref()
        .expect("clap requires --input or --trace");
    input::read_column(path, source.column.as_deref())
}

fn write_plot(
    path: &Path,
    write: impl FnOnce(&mut Vec<u8>) -> sampler_lab::Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    std::fs::write(path, buf).with_context(|| format!("cannot write {}", path.display()))
}

fn fit(args: &FitArgs) -> Result<()> {
    let values = series(&args.source, 0, true)?;
    let options = PowerLawOptions {
        n_windows: args.windows,
        n_bins: args.bins,
    };
    options.validate()?;
    let (fit, bins) = fit_power_law_with_bins(&values, &options)?;
    if let Some(p) = &args.plotdata {
        write_plot(p, |b| bins.write_csv(b))?;
    }
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let values = series(&args.source, args.axis, false)?;
    let pgram = periodogram(&values)?;
    let (fit, blocks) = fit_spectral_slope_with_blocks(&pgram, args.blocks)?;
    if let Some(p) = &args.plotdata {
        write_plot(p, |b| blocks.write_csv(b))?;
    }
    println!("{}", serde_json::to_string_pretty(&fit)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Levy(a) => run_one(ExperimentKind::Levy, a).map(drop),
        Command::Sparsity(a) => run_one(ExperimentKind::Sparsity, a).map(drop),
        Command::Kl(a) => run_one(ExperimentKind::KlRace, a).map(drop),
        Command::Spectrum(a) => run_one(ExperimentKind::Spectrum, a).map(drop),
        Command::Ratio(a) => run_one(ExperimentKind::RatioSweep, a).map(drop),
        Command::All(a) => run_all(a),
        Command::Fit(a) => fit(a),
        Command::Analyze(a) => analyze(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
