//! Target probability landscapes.
//!
//! Two families are supported: Gaussian mixtures with one covariance shared
//! by every component (the "patchy environments"), and isotropic unimodal
//! Gaussians. Both expose a normalized log-density, its tempered form
//! `log pi(x) / T`, and an exact ancestral sampler.

use std::f64::consts::PI;
use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A position in `d`-dimensional space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting non-finite coordinates.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let p = Point(coords);
        p.validate()?;
        Ok(p)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn validate(&self) -> Result<()> {
        match self.0.iter().position(|c| !c.is_finite()) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn squared_distance(&self, other: &Point) -> f64 {
        squared_distance(&self.0, &other.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.squared_distance(other).sqrt()
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    // NaN fails this comparison too.
    if temperature >= 1.0 {
        Ok(())
    } else {
        Err(Error::TemperatureBelowOne(temperature))
    }
}

/// Numerically stable `ln(sum(exp(terms)))`. Terms equal to `-inf` are skipped.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Covariance shared by all mixture components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceRepr", into = "CovarianceRepr")]
pub enum Covariance {
    Identity,
    Dense(DenseCovariance),
}

/// A symmetric positive-definite matrix with its cached Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseCovariance {
    matrix: Vec<Vec<f64>>,
    // Lower-triangular factor, row-major, dim x dim.
    cholesky: Vec<f64>,
    log_det: f64,
}

impl DenseCovariance {
    pub fn new(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::invalid("covariance", "empty matrix"));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid("covariance", "matrix is not square"));
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::invalid("covariance", "non-finite entry"));
                }
                if (v - matrix[j][i]).abs() > 1e-12 * (1.0 + v.abs()) {
                    return Err(Error::invalid("covariance", "matrix is not symmetric"));
                }
            }
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = matrix[i][j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::invalid(
                            "covariance",
                            "matrix is not positive-definite",
                        ));
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        let log_det = 2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>();
        Ok(Self {
            matrix,
            cholesky: l,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }
}

impl Covariance {
    fn check(&self, dim: usize) -> Result<()> {
        match self {
            Covariance::Identity => Ok(()),
            Covariance::Dense(c) => check_dim(dim, c.dim()),
        }
    }

    fn log_det(&self) -> f64 {
        match self {
            Covariance::Identity => 0.0,
            Covariance::Dense(c) => c.log_det,
        }
    }

    fn mahalanobis_sq(&self, diff: &mut [f64]) -> f64 {
        match self {
            Covariance::Identity => diff.iter().map(|v| v * v).sum(),
            Covariance::Dense(c) => {
                // Forward substitution L y = diff, in place.
                let n = c.dim();
                for i in 0..n {
                    let mut s = diff[i];
                    for k in 0..i {
                        s -= c.cholesky[i * n + k] * diff[k];
                    }
                    diff[i] = s / c.cholesky[i * n + i];
                }
                diff.iter().map(|v| v * v).sum()
            }
        }
    }

    fn colour(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Covariance::Identity => out.copy_from_slice(z),
            Covariance::Dense(c) => {
                let n = c.dim();
                for i in 0..n {
                    out[i] = (0..=i).map(|k| c.cholesky[i * n + k] * z[k]).sum();
                }
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CovarianceRepr {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl TryFrom<CovarianceRepr> for Covariance {
    type Error = Error;

    fn try_from(repr: CovarianceRepr) -> Result<Self> {
        match repr {
            CovarianceRepr::Named(name) if name == "identity" => Ok(Covariance::Identity),
            CovarianceRepr::Named(name) => Err(Error::invalid(
                "covariance",
                format!("unknown covariance `{name}`, expected \"identity\" or a matrix"),
            )),
            CovarianceRepr::Matrix(m) => DenseCovariance::new(m).map(Covariance::Dense),
        }
    }
}

impl From<Covariance> for CovarianceRepr {
    fn from(c: Covariance) -> Self {
        match c {
            Covariance::Identity => CovarianceRepr::Named("identity".into()),
            Covariance::Dense(d) => CovarianceRepr::Matrix(d.matrix),
        }
    }
}

/// Mixture of Gaussians sharing one covariance matrix.
///
/// Serializes as `{dim, means, covariance, weights}`, the environment file
/// format persisted next to every mixture experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixtureRepr", into = "MixtureRepr")]
pub struct GaussianMixture {
    dim: usize,
    means: Vec<Point>,
    covariance: Covariance,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureRepr {
    dim: usize,
    means: Vec<Point>,
    covariance: Covariance,
    weights: Vec<f64>,
}

impl TryFrom<MixtureRepr> for GaussianMixture {
    type Error = Error;

    fn try_from(r: MixtureRepr) -> Result<Self> {
        let m = GaussianMixture::new(r.means, r.covariance, r.weights)?;
        check_dim(r.dim, m.dim)?;
        Ok(m)
    }
}

impl From<GaussianMixture> for MixtureRepr {
    fn from(m: GaussianMixture) -> Self {
        MixtureRepr {
            dim: m.dim,
            means: m.means,
            covariance: m.covariance,
            weights: m.weights,
        }
    }
}

impl GaussianMixture {
    pub fn new(means: Vec<Point>, covariance: Covariance, weights: Vec<f64>) -> Result<Self> {
        let first = means.first().ok_or(Error::TooFewModes {
            needed: 1,
            found: 0,
        })?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        for m in &means {
            check_dim(dim, m.dim())?;
            m.validate()?;
        }
        covariance.check(dim)?;
        if weights.len() != means.len() {
            return Err(Error::invalid(
                "weights",
                format!("{} weights for {} modes", weights.len(), means.len()),
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("weights", format!("sum to {total}, not 1")));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            dim,
            means,
            covariance,
            weights,
            log_weights,
            cumulative,
        })
    }

    pub fn equal_weights(means: Vec<Point>, covariance: Covariance) -> Result<Self> {
        let n = means.len().max(1);
        Self::new(means, covariance, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_modes(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[Point] {
        &self.means
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    /// Log-density of component `k` at `x`, without the mixture weight.
    pub fn component_log_density(&self, k: usize, x: &Point) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        Ok(self.component_unchecked(k, x))
    }

    fn component_unchecked(&self, k: usize, x: &Point) -> f64 {
        let mut diff: Vec<f64> = x
            .iter()
            .zip(self.means[k].iter())
            .map(|(a, b)| a - b)
            .collect();
        let maha = self.covariance.mahalanobis_sq(&mut diff);
        -0.5 * (maha + self.dim as f64 * (2.0 * PI).ln() + self.covariance.log_det())
    }

    pub fn log_density(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        let terms: Vec<f64> = (0..self.n_modes())
            .map(|k| self.log_weights[k] + self.component_unchecked(k, x))
            .collect();
        Ok(log_sum_exp(&terms))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.n_modes() - 1);
        let z: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = vec![0.0; self.dim];
        self.covariance.colour(&z, &mut out);
        for (o, m) in out.iter_mut().zip(self.means[k].iter()) {
            *o += m;
        }
        Point(out)
    }

    /// Index of the mean closest to `x` in Euclidean distance; ties go to
    /// the lowest index.
    pub fn nearest_mode(&self, x: &Point) -> Result<usize> {
        check_dim(self.dim, x.dim())?;
        Ok(self.nearest_mode_unchecked(x))
    }

    pub(crate) fn nearest_mode_unchecked(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, m) in self.means.iter().enumerate() {
            let d = squared_distance(x, m);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// Mean Euclidean distance over all unordered pairs of modes, the
    /// environment's spatial sparsity.
    pub fn mean_mode_distance(&self) -> Result<f64> {
        let n = self.n_modes();
        if n < 2 {
            return Err(Error::TooFewModes {
                needed: 2,
                found: n,
            });
        }
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += self.means[i].distance(&self.means[j]);
            }
        }
        Ok(total / (n * (n - 1) / 2) as f64)
    }
}

/// Isotropic Gaussian `N(mean, sigma^2 I)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodalGaussian {
    mean: Point,
    sigma: f64,
}

impl UnimodalGaussian {
    pub fn new(mean: Point, sigma: f64) -> Result<Self> {
        mean.validate()?;
        if mean.dim() == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("must be positive, got {sigma}"),
            ));
        }
        Ok(Self { mean, sigma })
    }

    pub fn standard(dim: usize, sigma: f64) -> Result<Self> {
        Self::new(Point::origin(dim), sigma)
    }

    pub fn mean(&self) -> &Point {
        &self.mean
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn log_density(&self, x: &Point) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        let d = self.dim() as f64;
        let z2 = x.squared_distance(&self.mean) / (self.sigma * self.sigma);
        Ok(-0.5 * z2 - d * self.sigma.ln() - 0.5 * d * (2.0 * PI).ln())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point(
            self.mean
                .iter()
                .map(|m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + self.sigma * z
                })
                .collect(),
        )
    }
}

/// A landscape samplers can evaluate and draw from.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Mixture(GaussianMixture),
    Unimodal(UnimodalGaussian),
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Mixture(m) => m.dim(),
            Target::Unimodal(g) => g.dim(),
        }
    }

    /// Normalized log-density `ln pi(x)`.
    pub fn log_density(&self, x: &Point) -> Result<f64> {
        match self {
            Target::Mixture(m) => m.log_density(x),
            Target::Unimodal(g) => g.log_density(x),
        }
    }

    /// `ln pi(x) / T`, the log of the heated target `pi^(1/T)` up to normalization.
    pub fn tempered_log_density(&self, x: &Point, temperature: f64) -> Result<f64> {
        check_temperature(temperature)?;
        Ok(self.log_density(x)? / temperature)
    }

    /// Exact independent draw: component by weight, then a Gaussian.
    pub fn sample_direct<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Target::Mixture(m) => m.sample(rng),
            Target::Unimodal(g) => g.sample(rng),
        }
    }

    pub fn as_mixture(&self) -> Result<&GaussianMixture> {
        match self {
            Target::Mixture(m) => Ok(m),
            Target::Unimodal(_) => Err(Error::NotAMixture),
        }
    }

    pub fn nearest_mode(&self, x: &Point) -> Result<usize> {
        self.as_mixture()?.nearest_mode(x)
    }

    /// Default chain start: the highest-weight mode mean. Among equally
    /// weighted modes the one nearest the origin wins, then the lowest index.
    pub fn default_start(&self) -> Point {
        match self {
            Target::Unimodal(g) => g.mean.clone(),
            Target::Mixture(m) => {
                let origin = vec![0.0; m.dim()];
                let best = (0..m.n_modes())
                    .min_by(|&a, &b| {
                        m.weights[b]
                            .total_cmp(&m.weights[a])
                            .then(
                                squared_distance(&m.means[a], &origin)
                                    .total_cmp(&squared_distance(&m.means[b], &origin)),
                            )
                            .then(a.cmp(&b))
                    })
                    .unwrap_or(0);
                m.means[best].clone()
            }
        }
    }
}

impl From<GaussianMixture> for Target {
    fn from(m: GaussianMixture) -> Self {
        Target::Mixture(m)
    }
}

impl From<UnimodalGaussian> for Target {
    fn from(g: UnimodalGaussian) -> Self {
        Target::Unimodal(g)
    }
}

/// Draws a patchy landscape: `n_modes` means i.i.d. uniform on `[-r, r]^dim`,
/// identity covariance, equal weights.
pub fn generate_patchy_environment<R: Rng + ?Sized>(
    n_modes: usize,
    r: f64,
    dim: usize,
    rng: &mut R,
) -> Result<GaussianMixture> {
    if n_modes == 0 {
        return Err(Error::TooFewModes {
            needed: 1,
            found: 0,
        });
    }
    if dim == 0 {
        return Err(Error::invalid("dim", "must be at least 1"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("must be positive, got {r}")));
    }
    let means = (0..n_modes)
        .map(|_| Point((0..dim).map(|_| rng.random_range(-r..=r)).collect()))
        .collect();
    GaussianMixture::equal_weights(means, Covariance::Identity)
}
