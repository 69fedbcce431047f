//! Small descriptive-statistics helpers shared by the fits and summaries.

use serde::{Deserialize, Serialize};

/// A point in log-log coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLogPoint {
    pub log_x: f64,
    pub log_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope * x + intercept`. Needs two distinct x.
pub fn ols(points: &[LogLogPoint]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.log_x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.log_y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.log_x - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.log_x - mx) * (p.log_y - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.log_y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.log_y - (slope * p.log_x + intercept)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Splits `[lo, hi]` on the x axis into `n` equal windows and returns the
/// mean point of every nonempty window, in window order.
pub fn window_means(points: &[LogLogPoint], lo: f64, hi: f64, n: usize) -> Vec<LogLogPoint> {
    let width = (hi - lo) / n as f64;
    let mut sums = vec![(0.0, 0.0, 0usize); n];
    for p in points {
        let k = if width > 0.0 {
            (((p.log_x - lo) / width).floor().max(0.0) as usize).min(n - 1)
        } else {
            0
        };
        sums[k].0 += p.log_x;
        sums[k].1 += p.log_y;
        sums[k].2 += 1;
    }
    sums.into_iter()
        .filter(|s| s.2 > 0)
        .map(|(sx, sy, c)| LogLogPoint {
            log_x: sx / c as f64,
            log_y: sy / c as f64,
        })
        .collect()
}

/// Linear-interpolation quantile (the common "type 7" definition). NaN on empty input.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN when either input is constant or lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
