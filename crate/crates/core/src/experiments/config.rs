//! Declarative experiment description.
//!
//! A config file is a JSON object whose only required key is `experiment`;
//! every other key falls back to the defaults for that experiment kind (see
//! [`ExperimentConfig::defaults`]). Unknown keys are rejected and errors
//! report the offending field path.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::PowerLawOptions;
use crate::error::{Error, Result};
use crate::samplers::{Mc3Options, ProposalSpec, SwapPolicy, TemperatureLadder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Flight distances on one patchy environment per replicate.
    Levy,
    /// Levy exponents across environment ranges `r`.
    Sparsity,
    /// Mode-coverage KL divergence over time.
    KlRace,
    /// Spectral slopes on a unimodal Gaussian.
    Spectrum,
    /// Spectral slopes across target-width / proposal-width ratios.
    RatioSweep,
    /// Random-walk Metropolis with Levy proposals across `r`.
    LevyProposalControl,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Levy,
        ExperimentKind::Sparsity,
        ExperimentKind::KlRace,
        ExperimentKind::Spectrum,
        ExperimentKind::RatioSweep,
        ExperimentKind::LevyProposalControl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Levy => "levy",
            ExperimentKind::Sparsity => "sparsity",
            ExperimentKind::KlRace => "kl_race",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::RatioSweep => "ratio_sweep",
            ExperimentKind::LevyProposalControl => "levy_proposal_control",
        }
    }

    pub fn uses_mixture(self) -> bool {
        !matches!(self, ExperimentKind::Spectrum | ExperimentKind::RatioSweep)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "DS")]
    Ds,
    #[serde(rename = "RwM")]
    Rwm,
    #[serde(rename = "RwM-Levy")]
    RwmLevy,
    #[serde(rename = "MC3")]
    Mc3,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ds => "DS",
            Algorithm::Rwm => "RwM",
            Algorithm::RwmLevy => "RwM-Levy",
            Algorithm::Mc3 => "MC3",
        }
    }

    /// File-name friendly label.
    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::Ds => "ds",
            Algorithm::Rwm => "rwm",
            Algorithm::RwmLevy => "rwm_levy",
            Algorithm::Mc3 => "mc3",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub n_modes: usize,
    /// Half-width of the cube the mode means are drawn from.
    pub r: f64,
    pub dim: usize,
    /// Standard deviation of the unimodal target.
    pub sigma_target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mc3Config {
    pub chains: usize,
    /// Explicit temperatures; when absent a geometric ladder with `ladder_ratio`.
    pub ladder: Option<Vec<f64>>,
    pub ladder_ratio: f64,
    pub swap_policy: SwapPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub mu: f64,
    /// Shortest jump, as a multiple of the Gaussian proposal sigma.
    pub lmin_factor: f64,
    /// Longest jump, as a multiple of `r`.
    pub lmax_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub r_values: Vec<f64>,
    pub ratios: Vec<f64>,
    /// How many of the least sparse cells count as "low to moderate" sparsity.
    pub trend_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub n_bins: usize,
    pub n_windows: usize,
    pub n_blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: Option<u64>,
    pub replicates: usize,
    pub samples: usize,
    pub algorithms: Vec<Algorithm>,
    pub target: TargetConfig,
    pub proposal_sigma: f64,
    pub mc3: Mc3Config,
    pub levy: LevyConfig,
    pub sweep: SweepConfig,
    /// KL checkpoints; defaults to powers of two up to `samples`, plus `samples`.
    pub checkpoints: Option<Vec<usize>>,
    pub analysis: AnalysisConfig,
    /// Explicit chain start; defaults to the target's mode.
    pub start: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub persist_traces: bool,
    pub full_chains: bool,
}

/// Command-line style overrides applied on top of a config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub chains: Option<usize>,
    pub replicates: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub swap_policy: Option<SwapPolicy>,
    pub full_chains: bool,
}

/// Twelve logarithmically spaced points on `[0.1, 100]`.
pub fn default_ratio_grid() -> Vec<f64> {
    (0..12)
        .map(|i| 10f64.powf(-1.0 + 3.0 * i as f64 / 11.0))
        .map(|v| (v * 1e12).round() / 1e12)
        .collect()
}

impl ExperimentConfig {
    /// Defaults for each kind. The seed is left unset on purpose.
    pub fn defaults(kind: ExperimentKind) -> Self {
        use Algorithm::*;
        let unimodal = !kind.uses_mixture();
        let algorithms = match kind {
            ExperimentKind::Sparsity => vec![Ds, Rwm, Mc3, RwmLevy],
            ExperimentKind::LevyProposalControl => vec![RwmLevy],
            _ => vec![Ds, Rwm, Mc3],
        };
        Self {
            experiment: kind,
            master_seed: None,
            replicates: 20,
            samples: 1024,
            algorithms,
            target: TargetConfig {
                n_modes: 15,
                r: 9.0,
                dim: if unimodal { 1 } else { 2 },
                sigma_target: 3.0,
            },
            proposal_sigma: 1.0,
            mc3: Mc3Config {
                chains: if unimodal { 2 } else { 8 },
                ladder: None,
                ladder_ratio: 2.0,
                swap_policy: SwapPolicy::RandomPairs,
            },
            levy: LevyConfig {
                mu: 2.0,
                lmin_factor: 0.1,
                lmax_factor: 4.0,
            },
            sweep: SweepConfig {
                r_values: vec![1.0, 2.0, 3.0, 5.0, 7.0, 9.0, 12.0, 16.0, 24.0, 40.0],
                ratios: default_ratio_grid(),
                trend_cells: 7,
            },
            checkpoints: None,
            analysis: AnalysisConfig {
                n_bins: 50,
                n_windows: 10,
                n_blocks: 10,
            },
            start: None,
            output_dir: None,
            persist_traces: matches!(
                kind,
                ExperimentKind::Levy | ExperimentKind::KlRace | ExperimentKind::Spectrum
            ),
            full_chains: false,
        }
    }

    /// Parses a JSON document, filling absent keys from the kind's defaults.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config {
            path: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let kind_value = user.get("experiment").ok_or_else(|| Error::Config {
            path: "experiment".into(),
            message: "missing required field".into(),
        })?;
        let kind: ExperimentKind =
            serde_json::from_value(kind_value.clone()).map_err(|e| Error::Config {
                path: "experiment".into(),
                message: e.to_string(),
            })?;
        let mut merged = serde_json::to_value(Self::defaults(kind))?;
        merge(&mut merged, user);
        let config: Self = serde_path_to_error::deserialize(merged).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.master_seed = Some(s);
        }
        if let Some(n) = o.samples {
            self.samples = n;
            if let Some(cps) = self.checkpoints.as_mut() {
                cps.retain(|&t| t <= n);
            }
        }
        if let Some(m) = o.chains {
            self.mc3.chains = m;
        }
        if let Some(r) = o.replicates {
            self.replicates = r;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if let Some(p) = o.swap_policy {
            self.mc3.swap_policy = p;
        }
        self.full_chains |= o.full_chains;
        self.validate()
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed.ok_or(Error::MissingSeed)
    }

    fn bad(path: &str, message: impl Into<String>) -> Error {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Self::bad("replicates", "must be at least 1"));
        }
        if self.samples < 2 {
            return Err(Self::bad("samples", "must be at least 2"));
        }
        if self.algorithms.is_empty() {
            return Err(Self::bad("algorithms", "must list at least one algorithm"));
        }
        let t = &self.target;
        if t.dim == 0 {
            return Err(Self::bad("target.dim", "must be at least 1"));
        }
        if self.experiment.uses_mixture() {
            if t.n_modes == 0 {
                return Err(Self::bad("target.n_modes", "must be at least 1"));
            }
            if !(t.r > 0.0 && t.r.is_finite()) {
                return Err(Self::bad("target.r", "must be positive"));
            }
        } else if self.algorithms.contains(&Algorithm::RwmLevy) {
            return Err(Self::bad(
                "algorithms",
                "RwM-Levy needs a mixture experiment",
            ));
        }
        if !(t.sigma_target > 0.0 && t.sigma_target.is_finite()) {
            return Err(Self::bad("target.sigma_target", "must be positive"));
        }
        if !(self.proposal_sigma > 0.0 && self.proposal_sigma.is_finite()) {
            return Err(Self::bad("proposal_sigma", "must be positive"));
        }
        self.ladder().map_err(|e| Self::bad("mc3", e.to_string()))?;
        let l = &self.levy;
        if !(l.mu > 1.0 && l.mu <= 3.0) {
            return Err(Self::bad("levy.mu", "must lie in (1, 3]"));
        }
        if !(l.lmin_factor > 0.0 && l.lmax_factor > 0.0) {
            return Err(Self::bad("levy", "length factors must be positive"));
        }
        match self.experiment {
            ExperimentKind::Sparsity | ExperimentKind::LevyProposalControl => {
                if self.sweep.r_values.is_empty() {
                    return Err(Self::bad("sweep.r_values", "must not be empty"));
                }
                if self
                    .sweep
                    .r_values
                    .iter()
                    .any(|r| !(*r > 0.0 && r.is_finite()))
                {
                    return Err(Self::bad("sweep.r_values", "values must be positive"));
                }
            }
            ExperimentKind::RatioSweep => {
                if self.sweep.ratios.is_empty() {
                    return Err(Self::bad("sweep.ratios", "must not be empty"));
                }
                if self
                    .sweep
                    .ratios
                    .iter()
                    .any(|r| !(*r > 0.0 && r.is_finite()))
                {
                    return Err(Self::bad("sweep.ratios", "values must be positive"));
                }
            }
            _ => {}
        }
        if let Some(cps) = &self.checkpoints {
            if cps.is_empty() {
                return Err(Self::bad("checkpoints", "must not be empty"));
            }
            if cps.iter().any(|&c| c == 0 || c > self.samples)
                || cps.windows(2).any(|w| w[1] <= w[0])
            {
                return Err(Self::bad(
                    "checkpoints",
                    "must be strictly increasing values in 1..=samples",
                ));
            }
        }
        self.power_law_options()
            .validate()
            .map_err(|e| Self::bad("analysis", e.to_string()))?;
        if self.analysis.n_blocks < 2 {
            return Err(Self::bad("analysis.n_blocks", "must be at least 2"));
        }
        if let Some(s) = &self.start {
            if s.len() != t.dim || s.iter().any(|c| !c.is_finite()) {
                return Err(Self::bad(
                    "start",
                    "must have target.dim finite coordinates",
                ));
            }
        }
        Ok(())
    }

    pub fn ladder(&self) -> Result<TemperatureLadder> {
        let ladder = match &self.mc3.ladder {
            Some(temps) => TemperatureLadder::new(temps.clone())?,
            None => TemperatureLadder::geometric(self.mc3.chains, self.mc3.ladder_ratio)?,
        };
        if ladder.len() != self.mc3.chains {
            return Err(Error::invalid(
                "ladder",
                format!(
                    "{} temperatures for {} chains",
                    ladder.len(),
                    self.mc3.chains
                ),
            ));
        }
        Ok(ladder)
    }

    pub fn mc3_options(&self, proposal: ProposalSpec) -> Result<Mc3Options> {
        Ok(Mc3Options {
            n_chains: self.mc3.chains,
            ladder: self.ladder()?,
            proposal,
            swap_policy: self.mc3.swap_policy,
            record_all_chains: self.full_chains,
        })
    }

    pub fn power_law_options(&self) -> PowerLawOptions {
        PowerLawOptions {
            n_windows: self.analysis.n_windows,
            n_bins: self.analysis.n_bins,
        }
    }

    /// Checkpoints for KL trajectories.
    pub fn kl_checkpoints(&self) -> Vec<usize> {
        if let Some(c) = &self.checkpoints {
            return c.clone();
        }
        let mut out: Vec<usize> = std::iter::successors(Some(8usize), |t| t.checked_mul(2))
            .take_while(|&t| t <= self.samples)
            .collect();
        if out.last() != Some(&self.samples) {
            out.push(self.samples);
        }
        out
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Deep-merges `patch` into `base`; objects merge key by key, anything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if v.is_object() && slot.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}
