//! Per-cell medians and IQRs, and the PASS/FAIL criteria checked on them.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentKind};
use super::results::ResultSet;
use crate::analysis::stats::{median, quantile, spearman};
use crate::error::{Error, Result};

/// An interval check on a median.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Band {
    /// `lo < x < hi`
    Open { lo: f64, hi: f64 },
    /// `lo <= x <= hi`
    Closed { lo: f64, hi: f64 },
    /// `x < bound`
    Below { bound: f64 },
    /// `x >= bound`
    AtLeast { bound: f64 },
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Band::Open { lo, hi } => lo < x && x < hi,
            Band::Closed { lo, hi } => lo <= x && x <= hi,
            Band::Below { bound } => x < bound,
            Band::AtLeast { bound } => x >= bound,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::Open { lo, hi } => write!(f, "({lo}, {hi})"),
            Band::Closed { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Band::Below { bound } => write!(f, "< {bound}"),
            Band::AtLeast { bound } => write!(f, ">= {bound}"),
        }
    }
}

/// Acceptance bands.
pub mod bands {
    use super::Band;

    pub const LEVY_MC3: Band = Band::Open { lo: 1.0, hi: 2.2 };
    pub const LEVY_DS: Band = Band::Below { bound: 1.0 };
    pub const LEVY_RWM: Band = Band::Below { bound: 1.0 };
    /// Alternative RwM pass: the log-log fit is visibly not straight.
    pub const LEVY_RWM_R_SQUARED: Band = Band::Below { bound: 0.8 };
    pub const SPECTRUM_MC3: Band = Band::Closed { lo: 0.5, hi: 1.5 };
    pub const SPECTRUM_DS: Band = Band::Closed { lo: -0.2, hi: 0.2 };
    pub const SPECTRUM_RWM: Band = Band::AtLeast { bound: 1.4 };
    /// Levy exponents reported for human foraging and memory search.
    pub const HUMAN_MU: Band = Band::Closed { lo: 1.37, hi: 1.98 };
    pub const RATIO_RWM: Band = Band::Closed { lo: 1.7, hi: 2.2 };
    pub const RATIO_MC3: Band = Band::Closed { lo: 0.6, hi: 1.4 };
    pub const RATIO_DS: Band = Band::Closed { lo: -0.2, hi: 0.2 };
    /// KL(MC3) may be at most this multiple of KL(DS).
    pub const KL_DS_FACTOR: f64 = 2.0;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub parameter: String,
    pub parameter_value: f64,
    /// Median measured sparsity over replicates.
    pub sparsity: Option<f64>,
    pub algorithm: Algorithm,
    pub metric: String,
    pub n: usize,
    pub n_failed: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
    pub median_r_squared: Option<f64>,
    pub median_top_mode_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: Option<f64>,
    pub expected: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: String,
    pub description: String,
    pub status: String,
    pub checks: Vec<Check>,
}

impl CriterionOutcome {
    fn new(id: &str, description: &str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            id: id.into(),
            description: description.into(),
            status: if pass { "PASS" } else { "FAIL" }.into(),
            checks,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "PASS"
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", self.id, self.status, self.description)?;
        for c in &self.checks {
            let obs = c.observed.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let mark = if c.pass { "ok" } else { "FAIL" };
            write!(
                f,
                "\n    [{mark}] {} = {obs}, expected {}",
                c.name, c.expected
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub replicates: usize,
    pub cells: Vec<CellSummary>,
    pub criteria: Vec<CriterionOutcome>,
    /// Reported observations that are not gated.
    pub notes: Vec<String>,
}

impl Summary {
    pub fn cell(&self, cell: usize, algorithm: Algorithm) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.cell == cell && c.algorithm == algorithm)
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(CriterionOutcome::passed)
    }

    /// One line per criterion plus the per-cell medians.
    pub fn report(&self) -> String {
        let mut out = format!(
            "experiment {} (seed {}, {} replicates)\n",
            self.experiment, self.master_seed, self.replicates
        );
        for c in &self.cells {
            let med = c.median.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let iqr = c.iqr.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            out += &format!(
                "  cell {} {}={} {:<8} median {} {} (IQR {}, n={}, failed={})\n",
                c.cell,
                c.parameter,
                c.parameter_value,
                c.algorithm.name(),
                c.metric,
                med,
                iqr,
                c.n,
                c.n_failed
            );
        }
        for c in &self.criteria {
            out += &format!("{c}\n");
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryOptions {
    /// Number of least sparse cells used for the sparsity trend.
    pub trend_cells: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self { trend_cells: 7 }
    }
}

pub fn summarize(results: &ResultSet) -> Result<Summary> {
    summarize_with(results, &SummaryOptions::default())
}

fn opt_median(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| median(v))
}

pub fn summarize_with(results: &ResultSet, options: &SummaryOptions) -> Result<Summary> {
    let first = results
        .rows
        .first()
        .ok_or_else(|| Error::invalid("results", "no rows to summarize"))?;
    let experiment = first.experiment;
    let master_seed = first.master_seed;

    let mut groups: BTreeMap<(usize, Algorithm), Vec<&super::results::ResultRow>> = BTreeMap::new();
    for r in &results.rows {
        groups.entry((r.cell, r.algorithm)).or_default().push(r);
    }
    let replicates = results
        .rows
        .iter()
        .map(|r| r.replicate + 1)
        .max()
        .unwrap_or(0);
    let cells = groups
        .iter()
        .map(|(&(cell, algorithm), rows)| {
            let values: Vec<f64> = rows.iter().filter_map(|r| r.value).collect();
            let pick = |f: fn(&super::results::ResultRow) -> Option<f64>| -> Vec<f64> {
                rows.iter().filter_map(|r| f(r)).collect()
            };
            let (q1, q3) = if values.is_empty() {
                (None, None)
            } else {
                (Some(quantile(&values, 0.25)), Some(quantile(&values, 0.75)))
            };
            CellSummary {
                cell,
                parameter: rows[0].parameter.clone(),
                parameter_value: rows[0].parameter_value,
                sparsity: opt_median(&pick(|r| r.sparsity)),
                algorithm,
                metric: rows[0].metric.clone(),
                n: rows.len(),
                n_failed: rows.len() - values.len(),
                median: opt_median(&values),
                q1,
                q3,
                iqr: q1.zip(q3).map(|(a, b)| b - a),
                median_r_squared: opt_median(&pick(|r| r.r_squared)),
                median_top_mode_fraction: opt_median(&pick(|r| r.top_mode_fraction)),
            }
        })
        .collect();

    let mut summary = Summary {
        experiment,
        master_seed,
        replicates,
        cells,
        criteria: Vec::new(),
        notes: Vec::new(),
    };
    evaluate(&mut summary, options);
    Ok(summary)
}

fn check(name: impl Into<String>, observed: Option<f64>, band: Band) -> Check {
    Check {
        name: name.into(),
        observed,
        expected: band.to_string(),
        pass: observed.is_some_and(|v| band.contains(v)),
    }
}

fn median_of(s: &Summary, cell: usize, alg: Algorithm) -> Option<f64> {
    s.cell(cell, alg).and_then(|c| c.median)
}

fn evaluate(s: &mut Summary, options: &SummaryOptions) {
    use Algorithm::*;
    match s.experiment {
        ExperimentKind::Levy => {
            let rwm = median_of(s, 0, Rwm);
            let rwm_r2 = s.cell(0, Rwm).and_then(|c| c.median_r_squared);
            let rwm_ok = rwm.is_some_and(|v| bands::LEVY_RWM.contains(v))
                || rwm_r2.is_some_and(|v| bands::LEVY_RWM_R_SQUARED.contains(v));
            let checks = vec![
                check("median mu_hat(MC3)", median_of(s, 0, Mc3), bands::LEVY_MC3),
                check("median mu_hat(DS)", median_of(s, 0, Ds), bands::LEVY_DS),
                Check {
                    name: "median mu_hat(RwM) or its median r^2".into(),
                    observed: rwm,
                    expected: format!(
                        "{} or r^2 {} (r^2 = {})",
                        bands::LEVY_RWM,
                        bands::LEVY_RWM_R_SQUARED,
                        rwm_r2.map_or("n/a".into(), |v| format!("{v:.4}"))
                    ),
                    pass: rwm_ok,
                },
            ];
            s.criteria.push(CriterionOutcome::new(
                "C1",
                "Levy exponents on the patchy environment",
                checks,
            ));
        }
        ExperimentKind::Spectrum => {
            let checks = vec![
                check(
                    "median alpha_hat(MC3)",
                    median_of(s, 0, Mc3),
                    bands::SPECTRUM_MC3,
                ),
                check(
                    "median alpha_hat(DS)",
                    median_of(s, 0, Ds),
                    bands::SPECTRUM_DS,
                ),
                check(
                    "median alpha_hat(RwM)",
                    median_of(s, 0, Rwm),
                    bands::SPECTRUM_RWM,
                ),
            ];
            s.criteria.push(CriterionOutcome::new(
                "C2",
                "spectral slopes on a unimodal Gaussian",
                checks,
            ));
        }
        ExperimentKind::KlRace => {
            let (mc3, rwm, ds) = (
                median_of(s, 0, Mc3),
                median_of(s, 0, Rwm),
                median_of(s, 0, Ds),
            );
            let checks = vec![
                Check {
                    name: "median KL(MC3) < median KL(RwM)".into(),
                    observed: mc3,
                    expected: format!("< {}", rwm.map_or("n/a".into(), |v| format!("{v:.4}"))),
                    pass: matches!((mc3, rwm), (Some(a), Some(b)) if a < b),
                },
                Check {
                    name: "median KL(MC3) <= 2 x median KL(DS)".into(),
                    observed: mc3,
                    expected: format!(
                        "<= {}",
                        ds.map_or("n/a".into(), |v| format!("{:.4}", bands::KL_DS_FACTOR * v))
                    ),
                    pass: matches!((mc3, ds), (Some(a), Some(b)) if a <= bands::KL_DS_FACTOR * b),
                },
            ];
            s.criteria.push(CriterionOutcome::new(
                "C3",
                "mode-coverage KL at the final checkpoint",
                checks,
            ));
        }
        ExperimentKind::Sparsity => evaluate_sparsity(s, options),
        ExperimentKind::RatioSweep => {
            let top = s
                .cells
                .iter()
                .max_by(|a, b| a.parameter_value.total_cmp(&b.parameter_value))
                .map(|c| (c.cell, c.parameter_value));
            let Some((cell, ratio)) = top else { return };
            let checks = vec![
                check(
                    format!("median alpha_hat(RwM) at ratio {ratio}"),
                    median_of(s, cell, Rwm),
                    bands::RATIO_RWM,
                ),
                check(
                    format!("median alpha_hat(MC3) at ratio {ratio}"),
                    median_of(s, cell, Mc3),
                    bands::RATIO_MC3,
                ),
                check(
                    format!("median alpha_hat(DS) at ratio {ratio}"),
                    median_of(s, cell, Ds),
                    bands::RATIO_DS,
                ),
            ];
            s.criteria.push(CriterionOutcome::new(
                "C5",
                "spectral asymptotes at the largest width ratio",
                checks,
            ));
            let off: Vec<String> = s
                .cells
                .iter()
                .filter(|c| c.algorithm == Ds)
                .filter(|c| !c.median.is_some_and(|v| bands::RATIO_DS.contains(v)))
                .map(|c| format!("{}", c.parameter_value))
                .collect();
            if !off.is_empty() {
                s.notes.push(format!(
                    "DS median slope outside {} at ratios {}",
                    bands::RATIO_DS,
                    off.join(", ")
                ));
            }
        }
        ExperimentKind::LevyProposalControl => {}
    }
}

fn evaluate_sparsity(s: &mut Summary, options: &SummaryOptions) {
    use Algorithm::*;
    let mut cell_ids: Vec<(usize, f64)> = s
        .cells
        .iter()
        .filter(|c| c.algorithm == Mc3)
        .map(|c| (c.cell, c.sparsity.unwrap_or(c.parameter_value)))
        .collect();
    cell_ids.sort_by(|a, b| a.1.total_cmp(&b.1));
    let trend: Vec<(f64, f64)> = cell_ids
        .iter()
        .take(options.trend_cells)
        .filter_map(|&(cell, sp)| median_of(s, cell, Mc3).map(|m| (sp, m)))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = trend.iter().copied().unzip();
    let rho = spearman(&x, &y);

    let in_band = |alg: Algorithm| -> Vec<f64> {
        s.cells
            .iter()
            .filter(|c| c.algorithm == alg)
            .filter(|c| c.median.is_some_and(|v| bands::HUMAN_MU.contains(v)))
            .map(|c| c.parameter_value)
            .collect()
    };
    let (mc3_hits, rwm_hits, ds_hits) = (in_band(Mc3), in_band(Rwm), in_band(Ds));
    let mc3_best = s
        .cells
        .iter()
        .filter(|c| c.algorithm == Mc3)
        .filter_map(|c| c.median)
        .max_by(f64::total_cmp);
    let checks = vec![
        Check {
            name: format!(
                "Spearman(sparsity, median mu_hat(MC3)) over {} least sparse cells",
                trend.len()
            ),
            observed: rho.is_finite().then_some(rho),
            expected: "> 0".into(),
            pass: rho > 0.0,
        },
        Check {
            name: "largest MC3 cell median, some cell in the human band".into(),
            observed: mc3_best,
            expected: bands::HUMAN_MU.to_string(),
            pass: !mc3_hits.is_empty(),
        },
        Check {
            name: "RwM and DS cell medians inside the human band".into(),
            observed: Some((rwm_hits.len() + ds_hits.len()) as f64),
            expected: "0".into(),
            pass: rwm_hits.is_empty() && ds_hits.is_empty(),
        },
    ];
    s.criteria.push(CriterionOutcome::new(
        "C4",
        "Levy exponent against spatial sparsity",
        checks,
    ));

    if let Some(&(cell, sp)) = cell_ids.last() {
        for alg in [Ds, Rwm, Mc3, RwmLevy] {
            if let Some(f) = s.cell(cell, alg).and_then(|c| c.median_top_mode_fraction) {
                s.notes.push(format!(
                    "sparsest cell (sparsity {sp:.2}): {} median share of samples in its most visited mode {f:.3}",
                    alg.name()
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::results::ResultRow;

    fn row(
        cell: usize,
        alg: Algorithm,
        rep: usize,
        value: Option<f64>,
        sparsity: f64,
    ) -> ResultRow {
        ResultRow {
            experiment: ExperimentKind::Sparsity,
            master_seed: 5,
            cell,
            parameter: "r".into(),
            parameter_value: cell as f64 + 1.0,
            sparsity: Some(sparsity),
            algorithm: alg,
            replicate: rep,
            metric: "mu_hat".into(),
            value,
            r_squared: Some(0.9),
            n_points: Some(10),
            excluded_zeros: Some(0),
            acceptance_rate: None,
            swap_rate: None,
            top_mode_fraction: Some(0.5),
            fit_error: None,
        }
    }

    #[test]
    fn medians_and_iqr_by_hand() {
        let rows = [1.0, 4.0, 2.0, 3.0, 10.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| row(0, Algorithm::Mc3, i, Some(v), 2.0))
            .chain(std::iter::once(row(0, Algorithm::Mc3, 5, None, 2.0)))
            .collect();
        let s = summarize(&ResultSet {
            rows,
            ..Default::default()
        })
        .unwrap();
        let c = s.cell(0, Algorithm::Mc3).unwrap();
        assert_eq!(c.median, Some(3.0));
        assert_eq!(c.q1, Some(2.0));
        assert_eq!(c.q3, Some(4.0));
        assert_eq!(c.iqr, Some(2.0));
        assert_eq!((c.n, c.n_failed), (6, 1));
        assert_eq!(s.replicates, 6);
    }

    #[test]
    fn single_replicate_median_is_the_value() {
        let s = summarize(&ResultSet {
            rows: vec![row(0, Algorithm::Ds, 0, Some(0.42), 1.0)],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(s.cell(0, Algorithm::Ds).unwrap().median, Some(0.42));
        assert_eq!(s.cell(0, Algorithm::Ds).unwrap().iqr, Some(0.0));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(summarize(&ResultSet::default()).is_err());
    }

    #[test]
    fn sparsity_criterion_pass_and_fail() {
        let mut rows = Vec::new();
        for cell in 0..4 {
            let sp = 2.0 + cell as f64;
            rows.push(row(
                cell,
                Algorithm::Mc3,
                0,
                Some(0.8 + 0.3 * cell as f64),
                sp,
            ));
            rows.push(row(cell, Algorithm::Rwm, 0, Some(0.5), sp));
            rows.push(row(cell, Algorithm::Ds, 0, Some(0.1), sp));
        }
        let set = ResultSet {
            rows,
            ..Default::default()
        };
        let s = summarize(&set).unwrap();
        assert_eq!(s.criteria.len(), 1);
        assert!(s.criteria[0].passed(), "{}", s.criteria[0]);
        assert!(!s.notes.is_empty());

        let mut bad = set.clone();
        for r in bad
            .rows
            .iter_mut()
            .filter(|r| r.algorithm == Algorithm::Rwm && r.cell == 2)
        {
            r.value = Some(1.5);
        }
        let s = summarize(&bad).unwrap();
        assert_eq!(s.criteria[0].status, "FAIL");
        assert!(s.report().contains("C4 FAIL"));
    }

    #[test]
    fn bands() {
        assert!(!bands::LEVY_MC3.contains(1.0));
        assert!(bands::SPECTRUM_MC3.contains(1.5));
        assert!(bands::SPECTRUM_RWM.contains(1.4));
        assert!(!bands::LEVY_DS.contains(1.0));
        assert_eq!(bands::HUMAN_MU.to_string(), "[1.37, 1.98]");
    }
}
