//! Seeded, config-driven experiments over patchy environments and unimodal
//! targets, with per-replicate result rows, medians and PASS/FAIL bands.
//!
//! Every replicate draws from its own RNG streams (see [`crate::rng`]), so
//! outputs are byte-identical for a given config and seed regardless of the
//! thread count.

mod config;
mod results;
mod runners;
mod summary;

pub use config::{
    default_ratio_grid, Algorithm, AnalysisConfig, ExperimentConfig, ExperimentKind, LevyConfig,
    Mc3Config, Overrides, SweepConfig, TargetConfig,
};
pub use results::{Fit, FitRecord, KlRow, ResultRow, ResultSet};
pub use runners::{
    run_experiment, run_experiment_with_jobs, run_kl_race, run_levy_experiment, run_ratio_sweep,
    run_sparsity_sweep, run_spectrum_experiment, RunOutcome,
};
pub use summary::{
    bands, summarize, summarize_with, Band, CellSummary, Check, CriterionOutcome, Summary,
    SummaryOptions,
};

/// The five experiments behind the headline results, in run order.
pub const STANDARD_SUITE: [ExperimentKind; 5] = [
    ExperimentKind::Levy,
    ExperimentKind::Spectrum,
    ExperimentKind::KlRace,
    ExperimentKind::Sparsity,
    ExperimentKind::RatioSweep,
];

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_file_atomic(dir: &std::path::Path, name: &str, bytes: &[u8]) -> crate::Result<()> {
    runners::write_atomic(dir, name, bytes)
}
