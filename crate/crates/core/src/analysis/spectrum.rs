use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::power_law::write_loglog_csv;
use super::stats::{ols, window_means, LogLogPoint};
use crate::error::{Error, Result};

const MIN_PERIODOGRAM_LEN: usize = 8;

/// Periodogram ordinate `S(f)` at Fourier frequency `f` (cycles per sample).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub frequency: f64,
    pub power: f64,
}

/// Raw periodogram of the mean-removed series: `S(k/n) = |X_k|^2 / n` for
/// `k = 1..=n/2`. No taper, DC excluded.
pub fn periodogram(series: &[f64]) -> Result<Vec<SpectralPoint>> {
    let n = series.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::TooShort {
            needed: MIN_PERIODOGRAM_LEN,
            found: n,
        });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok((1..=n / 2)
        .map(|k| SpectralPoint {
            frequency: k as f64 / n as f64,
            power: buf[k].norm_sqr() / n as f64,
        })
        .collect())
}

/// Estimated exponent of `S(f) ~ f^-alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFit {
    pub alpha_hat: f64,
    pub intercept: f64,
    pub n_blocks: usize,
    pub r_squared: f64,
    /// Periodogram ordinates that were exactly zero and could not be logged.
    pub excluded_zeros: usize,
    pub f_min: f64,
    pub f_max: f64,
}

/// Periodogram in log-log form with its block means.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockedPeriodogram {
    pub points: Vec<LogLogPoint>,
    pub blocks: Vec<LogLogPoint>,
}

impl BlockedPeriodogram {
    /// Rows `logx,logy,block_mean`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        write_loglog_csv(out, &self.points, &self.blocks, "block_mean")
    }
}

pub fn fit_spectral_slope(pgram: &[SpectralPoint], n_blocks: usize) -> Result<SpectralFit> {
    fit_spectral_slope_with_blocks(pgram, n_blocks).map(|(fit, _)| fit)
}

/// Averages `(ln f, ln S)` inside `n_blocks` equal-width blocks of the
/// log-frequency axis and regresses the block means.
pub fn fit_spectral_slope_with_blocks(
    pgram: &[SpectralPoint],
    n_blocks: usize,
) -> Result<(SpectralFit, BlockedPeriodogram)> {
    if n_blocks < 2 {
        return Err(Error::invalid("n_blocks", "must be at least 2"));
    }
    if pgram.len() < n_blocks {
        return Err(Error::TooShort {
            needed: n_blocks,
            found: pgram.len(),
        });
    }
    if let Some(p) = pgram.iter().find(|p| {
        !(p.frequency > 0.0 && p.frequency.is_finite() && p.power >= 0.0 && p.power.is_finite())
    }) {
        return Err(Error::invalid("periodogram", format!("bad ordinate {p:?}")));
    }
    let points: Vec<LogLogPoint> = pgram
        .iter()
        .filter(|p| p.power > 0.0)
        .map(|p| LogLogPoint {
            log_x: p.frequency.ln(),
            log_y: p.power.ln(),
        })
        .collect();
    let excluded_zeros = pgram.len() - points.len();
    let f_min = pgram
        .iter()
        .map(|p| p.frequency)
        .fold(f64::INFINITY, f64::min);
    let f_max = pgram
        .iter()
        .map(|p| p.frequency)
        .fold(f64::NEG_INFINITY, f64::max);
    let blocks = window_means(&points, f_min.ln(), f_max.ln(), n_blocks);
    if blocks.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "only {} nonempty blocks",
            blocks.len()
        )));
    }
    let line =
        ols(&blocks).ok_or_else(|| Error::DegenerateFit("blocks share one frequency".into()))?;
    let fit = SpectralFit {
        alpha_hat: -line.slope,
        intercept: line.intercept,
        n_blocks: blocks.len(),
        r_squared: line.r_squared,
        excluded_zeros,
        f_min,
        f_max,
    };
    Ok((fit, BlockedPeriodogram { points, blocks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn direct_dft_power(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mean = x.iter().sum::<f64>() / n as f64;
        (1..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += (v - mean) * ang.cos();
                    im += (v - mean) * ang.sin();
                }
                (re * re + im * im) / n as f64
            })
            .collect()
    }

    #[test]
    fn matches_dft_by_definition_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [64usize, 63] {
            let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let p = periodogram(&x).unwrap();
            let direct = direct_dft_power(&x);
            assert_eq!(p.len(), n / 2);
            for (a, b) in p.iter().zip(&direct) {
                assert!((a.power - b).abs() < 1e-10 * (1.0 + b));
            }
            // Sum of squares of the centred series equals the one-sided spectrum
            // counted twice, except the Nyquist term for even n.
            let mean = x.iter().sum::<f64>() / n as f64;
            let ss: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
            let mut one_sided: f64 = p.iter().map(|s| 2.0 * s.power).sum();
            if n % 2 == 0 {
                one_sided -= p.last().unwrap().power;
            }
            assert!((one_sided - ss).abs() < 1e-9 * ss);
        }
    }

    #[test]
    fn sinusoid_concentrates_power() {
        let n = 128;
        let k0 = 9;
        let x: Vec<f64> = (0..n)
            .map(|t| 3.0 + (2.0 * PI * k0 as f64 * t as f64 / n as f64).sin())
            .collect();
        let p = periodogram(&x).unwrap();
        let peak = p[k0 - 1].power;
        assert!((p[k0 - 1].frequency - k0 as f64 / n as f64).abs() < 1e-15);
        assert!((peak - n as f64 / 4.0).abs() < 1e-9);
        for (i, s) in p.iter().enumerate() {
            if i != k0 - 1 {
                assert!(s.power < 1e-9 * peak, "{i} {}", s.power);
            }
        }
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            periodogram(&[1.0; 7]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn exact_power_law_spectrum() {
        let pgram: Vec<SpectralPoint> = (1..=512)
            .map(|k| {
                let f = k as f64 / 1024.0;
                SpectralPoint {
                    frequency: f,
                    power: 0.3 * f.powf(-1.3),
                }
            })
            .collect();
        let fit = fit_spectral_slope(&pgram, 10).unwrap();
        assert!((fit.alpha_hat - 1.3).abs() < 1e-12);
        assert_eq!(fit.n_blocks, 10);
        assert!((fit.f_min - 1.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn block_errors() {
        let pgram: Vec<SpectralPoint> = (1..=4)
            .map(|k| SpectralPoint {
                frequency: k as f64 / 8.0,
                power: 1.0,
            })
            .collect();
        assert!(fit_spectral_slope(&pgram, 1).is_err());
        assert!(fit_spectral_slope(&pgram, 5).is_err());
        let zeros: Vec<SpectralPoint> = pgram
            .iter()
            .map(|p| SpectralPoint { power: 0.0, ..*p })
            .collect();
        assert!(matches!(
            fit_spectral_slope(&zeros, 2),
            Err(Error::DegenerateFit(_))
        ));
    }
}
