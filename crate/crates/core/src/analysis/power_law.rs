//! Levy-exponent estimation from flight distances.
//!
//! Positive distances are histogrammed into logarithmically spaced bins,
//! each bin's count is normalized by `n * width` to a density, and the
//! resulting log-log points are averaged inside equal-width windows of the
//! log-distance axis. A least-squares line through the window ("cell")
//! means gives `mu_hat = -slope`.

use serde::{Deserialize, Serialize};

use super::stats::{ols, window_means, LogLogPoint};
use crate::error::{Error, Result};

const MIN_CELLS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawOptions {
    pub n_windows: usize,
    pub n_bins: usize,
}

impl Default for PowerLawOptions {
    fn default() -> Self {
        Self {
            n_windows: 10,
            n_bins: 50,
        }
    }
}

impl PowerLawOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_windows < MIN_CELLS {
            return Err(Error::invalid(
                "n_windows",
                format!("must be at least {MIN_CELLS}"),
            ));
        }
        if self.n_bins == 0 {
            return Err(Error::invalid("n_bins", "must be at least 1"));
        }
        Ok(())
    }
}

/// Estimated exponent of `P(l) ~ l^-mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub mu_hat: f64,
    pub intercept: f64,
    pub n_cells: usize,
    pub r_squared: f64,
    #[serde(rename = "excluded_zeros")]
    pub n_zero_flights_excluded: usize,
}

/// The log-binned density points and their window means.
#[derive(Clone, Debug, PartialEq)]
pub struct LogBinning {
    pub points: Vec<LogLogPoint>,
    pub cells: Vec<LogLogPoint>,
    pub n_zero_excluded: usize,
    pub n_positive: usize,
}

impl LogBinning {
    /// Rows `logx,logy,cell_mean` with `cell_mean = 1` marking window means.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_loglog_csv(out, &self.points, &self.cells, "cell_mean")
    }
}

pub(crate) fn write_loglog_csv<W: std::io::Write>(
    out: W,
    points: &[LogLogPoint],
    means: &[LogLogPoint],
    flag: &str,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["logx", "logy", flag])?;
    for (set, marker) in [(points, "0"), (means, "1")] {
        for p in set {
            w.write_record([p.log_x.to_string(), p.log_y.to_string(), marker.to_string()])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn log_binned_density(distances: &[f64], options: &PowerLawOptions) -> Result<LogBinning> {
    options.validate()?;
    if let Some(bad) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::invalid(
            "distances",
            format!("must be finite and nonnegative, got {bad}"),
        ));
    }
    let positive: Vec<f64> = distances.iter().copied().filter(|d| *d > 0.0).collect();
    let n_zero_excluded = distances.len() - positive.len();
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = positive.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if positive.len() < 2 || !(hi > lo) {
        return Err(Error::DegenerateFit(
            "need at least two distinct positive distances".into(),
        ));
    }
    let (log_lo, log_hi) = (lo.ln(), hi.ln());
    let step = (log_hi - log_lo) / options.n_bins as f64;
    let mut counts = vec![0usize; options.n_bins];
    for d in &positive {
        let k = (((d.ln() - log_lo) / step).floor().max(0.0) as usize).min(options.n_bins - 1);
        counts[k] += 1;
    }
    let n = positive.len() as f64;
    let points: Vec<LogLogPoint> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(k, &c)| {
            let left = (log_lo + k as f64 * step).exp();
            let right = (log_lo + (k + 1) as f64 * step).exp();
            LogLogPoint {
                log_x: log_lo + (k as f64 + 0.5) * step,
                log_y: (c as f64 / (n * (right - left))).ln(),
            }
        })
        .collect();
    let cells = window_means(&points, log_lo, log_hi, options.n_windows);
    Ok(LogBinning {
        points,
        cells,
        n_zero_excluded,
        n_positive: positive.len(),
    })
}

pub fn fit_power_law(distances: &[f64], options: &PowerLawOptions) -> Result<PowerLawFit> {
    fit_power_law_with_bins(distances, options).map(|(fit, _)| fit)
}

/// Like [`fit_power_law`] but also returns the binned data behind the fit.
pub fn fit_power_law_with_bins(
    distances: &[f64],
    options: &PowerLawOptions,
) -> Result<(PowerLawFit, LogBinning)> {
    let binning = log_binned_density(distances, options)?;
    if binning.cells.len() < MIN_CELLS {
        return Err(Error::DegenerateFit(format!(
            "only {} nonempty cells, need {MIN_CELLS}",
            binning.cells.len()
        )));
    }
    let line = ols(&binning.cells)
        .ok_or_else(|| Error::DegenerateFit("cell means share one abscissa".into()))?;
    let fit = PowerLawFit {
        mu_hat: -line.slope,
        intercept: line.intercept,
        n_cells: binning.cells.len(),
        r_squared: line.r_squared,
        n_zero_flights_excluded: binning.n_zero_excluded,
    };
    Ok((fit, binning))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::truncated_power_law_quantile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draws(mu: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| truncated_power_law_quantile(rng.random(), mu, 0.1, 100.0))
            .collect()
    }

    #[test]
    fn recovers_exponent_two() {
        let fit = fit_power_law(&draws(2.0, 100_000, 1), &PowerLawOptions::default()).unwrap();
        assert!((fit.mu_hat - 2.0).abs() < 0.1, "{fit:?}");
        assert_eq!(fit.n_zero_flights_excluded, 0);
        assert!(fit.r_squared > 0.95);
    }

    #[test]
    fn zeros_are_counted_and_excluded() {
        let mut d = draws(2.0, 5_000, 2);
        let base = fit_power_law(&d, &PowerLawOptions::default()).unwrap();
        d.extend([0.0; 37]);
        let with_zeros = fit_power_law(&d, &PowerLawOptions::default()).unwrap();
        assert_eq!(with_zeros.n_zero_flights_excluded, 37);
        assert_eq!(with_zeros.mu_hat, base.mu_hat);
    }

    #[test]
    fn degenerate_inputs() {
        let opts = PowerLawOptions::default();
        assert!(matches!(
            fit_power_law(&[2.0; 10], &opts),
            Err(Error::DegenerateFit(_))
        ));
        assert!(matches!(
            fit_power_law(&[0.0, 0.0, 1.0], &opts),
            Err(Error::DegenerateFit(_))
        ));
        // Two distinct values fill only the first and last cell.
        assert!(matches!(
            fit_power_law(&[1.0, 2.0, 1.0], &opts),
            Err(Error::DegenerateFit(_))
        ));
        assert!(fit_power_law(&[1.0, -2.0], &opts).is_err());
        assert!(fit_power_law(
            &[1.0, 2.0],
            &PowerLawOptions {
                n_windows: 2,
                n_bins: 50
            }
        )
        .is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        let d = draws(1.5, 20_000, 3);
        let opts = PowerLawOptions {
            n_windows: 10,
            n_bins: 40,
        };
        let b = log_binned_density(&d, &opts).unwrap();
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min).ln();
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln();
        let step = (hi - lo) / 40.0;
        let mass: f64 = b
            .points
            .iter()
            .map(|p| p.log_y.exp() * ((p.log_x + step / 2.0).exp() - (p.log_x - step / 2.0).exp()))
            .sum();
        assert!((mass - 1.0).abs() < 1e-9);
        assert_eq!(b.cells.len(), 10);
    }

    #[test]
    fn json_field_names() {
        let fit = fit_power_law(&draws(2.0, 2_000, 4), &PowerLawOptions::default()).unwrap();
        let v = serde_json::to_value(fit).unwrap();
        for key in [
            "mu_hat",
            "intercept",
            "n_cells",
            "r_squared",
            "excluded_zeros",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
