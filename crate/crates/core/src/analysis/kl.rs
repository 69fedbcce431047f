use serde::{Deserialize, Serialize};

use crate::distributions::{GaussianMixture, Point, Target};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlPoint {
    pub t: usize,
    pub kl: f64,
}

/// KL divergence of the empirical mode-visit distribution from uniform, at
/// increasing sample counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KlTrajectory {
    pub values: Vec<KlPoint>,
}

impl KlTrajectory {
    pub fn at(&self, t: usize) -> Option<f64> {
        self.values.iter().find(|p| p.t == t).map(|p| p.kl)
    }

    pub fn last(&self) -> Option<KlPoint> {
        self.values.last().copied()
    }
}

/// `sum_i H_i ln(H_i / (1/N))` for the histogram `counts`, with `0 ln 0 = 0`.
pub fn kl_from_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n_modes = counts.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let h = c as f64 / total as f64;
            h * (h * n_modes).ln()
        })
        .sum()
}

/// Nearest-mode index of every position.
pub fn assign_modes(positions: &[Point], mixture: &GaussianMixture) -> Result<Vec<usize>> {
    positions.iter().map(|p| mixture.nearest_mode(p)).collect()
}

/// Visit count per mode.
pub fn mode_visit_counts(positions: &[Point], mixture: &GaussianMixture) -> Result<Vec<usize>> {
    let mut counts = vec![0; mixture.n_modes()];
    for k in assign_modes(positions, mixture)? {
        counts[k] += 1;
    }
    Ok(counts)
}

/// Evaluates the divergence over `positions[..t]` for each checkpoint `t`.
/// Checkpoints must be strictly increasing and lie in `1..=positions.len()`.
pub fn kl_mode_divergence(
    positions: &[Point],
    target: &Target,
    checkpoints: &[usize],
) -> Result<KlTrajectory> {
    let mixture = target.as_mixture()?;
    if let Some(&bad) = checkpoints.iter().find(|&&t| t == 0 || t > positions.len()) {
        return Err(Error::invalid(
            "checkpoints",
            format!("{bad} outside 1..={}", positions.len()),
        ));
    }
    if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("checkpoints", "must be strictly increasing"));
    }
    let modes = assign_modes(
        &positions[..checkpoints.last().copied().unwrap_or(0)],
        mixture,
    )?;
    let mut counts = vec![0usize; mixture.n_modes()];
    let mut seen = 0;
    let mut values = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        for &k in &modes[seen..t] {
            counts[k] += 1;
        }
        seen = t;
        values.push(KlPoint {
            t,
            kl: kl_from_uniform(&counts),
        });
    }
    Ok(KlTrajectory { values })
}
