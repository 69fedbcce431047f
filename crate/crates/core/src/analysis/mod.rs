//! Statistics computed from sampler traces: flight distances and their
//! power-law exponent, periodograms and spectral slopes, autocorrelation,
//! and mode-coverage KL divergence.

mod kl;
mod power_law;
mod spectrum;
pub mod stats;

use std::ops::Deref;

pub use kl::{
    assign_modes, kl_from_uniform, kl_mode_divergence, mode_visit_counts, KlPoint, KlTrajectory,
};
pub use power_law::{
    fit_power_law, fit_power_law_with_bins, log_binned_density, LogBinning, PowerLawFit,
    PowerLawOptions,
};
pub use spectrum::{
    fit_spectral_slope, fit_spectral_slope_with_blocks, periodogram, BlockedPeriodogram,
    SpectralFit, SpectralPoint,
};
pub use stats::LogLogPoint;

use crate::error::{Error, Result};
use crate::samplers::Trace;

/// A nonempty sequence of finite reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Series(Vec<f64>);

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort {
                needed: 1,
                found: 0,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Series(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Series {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Euclidean distances between consecutive positions. Rejected steps
/// show up as zeros.
pub fn flight_distances(trace: &Trace) -> Result<Series> {
    if trace.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            found: trace.len(),
        });
    }
    Series::new(
        trace
            .positions
            .windows(2)
            .map(|w| w[0].distance(&w[1]))
            .collect(),
    )
}

/// Biased, variance-normalized autocorrelation for lags `0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = series.len();
    if max_lag >= n {
        return Err(Error::TooShort {
            needed: max_lag + 1,
            found: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = centred.iter().map(|x| x * x).sum();
    if !(denom > 0.0) {
        return Err(Error::DegenerateFit(
            "constant series has no autocorrelation".into(),
        ));
    }
    Ok((0..=max_lag)
        .map(|k| {
            centred[..n - k]
                .iter()
                .zip(&centred[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / denom
        })
        .collect())
}
