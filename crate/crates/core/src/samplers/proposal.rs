use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::Point;
use crate::error::{Error, Result};

/// Random-walk proposal kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposalSpec {
    /// `x' = x + sigma * z`, `z` standard normal per axis.
    Gaussian { sigma: f64 },
    /// Step of length `l ~ l^-mu` on `[lmin, lmax]` in a uniform direction.
    Levy { mu: f64, lmin: f64, lmax: f64 },
}

impl ProposalSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let p = ProposalSpec::Gaussian { sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn levy(mu: f64, lmin: f64, lmax: f64) -> Result<Self> {
        let p = ProposalSpec::Levy { mu, lmin, lmax };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ProposalSpec::Gaussian { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid(
                        "sigma",
                        format!("must be positive, got {sigma}"),
                    ));
                }
            }
            ProposalSpec::Levy { mu, lmin, lmax } => check_levy(mu, lmin, lmax)?,
        }
        Ok(())
    }

    /// Draws a candidate around `x`. Consumes `d` normals (Gaussian) or one
    /// uniform followed by `d` normals (Levy).
    pub fn propose<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R) -> Point {
        match *self {
            ProposalSpec::Gaussian { sigma } => x
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + sigma * z
                })
                .collect::<Vec<_>>()
                .into(),
            ProposalSpec::Levy { mu, lmin, lmax } => levy_step(x, mu, lmin, lmax, rng),
        }
    }
}

fn check_levy(mu: f64, lmin: f64, lmax: f64) -> Result<()> {
    if !(mu > 1.0 && mu <= 3.0) {
        return Err(Error::invalid(
            "levy_mu",
            format!("must lie in (1, 3], got {mu}"),
        ));
    }
    if !(lmin > 0.0 && lmin < lmax && lmax.is_finite()) {
        return Err(Error::invalid(
            "levy_lmin/levy_lmax",
            format!("need 0 < lmin < lmax, got {lmin}, {lmax}"),
        ));
    }
    Ok(())
}

/// Inverse CDF of the density proportional to `l^-mu` truncated to `[lmin, lmax]`.
pub fn truncated_power_law_quantile(u: f64, mu: f64, lmin: f64, lmax: f64) -> f64 {
    let e = 1.0 - mu;
    let a = lmin.powf(e);
    let b = lmax.powf(e);
    // Interpolate from the nearer end so both endpoints are reproduced exactly.
    let v = if u < 0.5 {
        a + u * (b - a)
    } else {
        b + (1.0 - u) * (a - b)
    };
    v.powf(1.0 / e).clamp(lmin, lmax)
}

/// Uniform direction on the unit sphere in `dim` dimensions.
pub fn unit_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

fn levy_step<R: Rng + ?Sized>(x: &Point, mu: f64, lmin: f64, lmax: f64, rng: &mut R) -> Point {
    let u: f64 = rng.random();
    let length = truncated_power_law_quantile(u, mu, lmin, lmax);
    let dir = unit_direction(x.dim(), rng);
    x.iter()
        .zip(dir)
        .map(|(c, d)| c + length * d)
        .collect::<Vec<_>>()
        .into()
}

/// Jump from `x` with a power-law length and uniform direction.
pub fn levy_proposal<R: Rng + ?Sized>(
    x: &Point,
    mu: f64,
    lmin: f64,
    lmax: f64,
    rng: &mut R,
) -> Result<Point> {
    check_levy(mu, lmin, lmax)?;
    Ok(levy_step(x, mu, lmin, lmax, rng))
}
