//! Direct sampling, random-walk Metropolis, and Metropolis-coupled MCMC.
//!
//! Every sampler consumes its RNG in a fixed order so runs are bitwise
//! reproducible: for each iteration, each chain draws its proposal and then
//! one uniform; the swap phase follows. Chains start at the supplied point
//! and nothing is discarded as burn-in.

mod proposal;
mod tempering;
mod trace;

use rand::Rng;

pub use proposal::{levy_proposal, truncated_power_law_quantile, unit_direction, ProposalSpec};
pub use tempering::{
    run_mc3, swap_acceptance, swap_log_acceptance, Mc3Options, SwapPolicy, TemperatureLadder,
};
pub use trace::{ChainHistory, Trace};

use crate::distributions::{Point, Target};
use crate::error::{Error, Result};

/// `min(1, (pi(x') / pi(x))^(1/T))` from log-densities.
pub fn metropolis_acceptance(
    current_log_density: f64,
    proposed_log_density: f64,
    temperature: f64,
) -> f64 {
    let log_ratio = (proposed_log_density - current_log_density) / temperature;
    if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.min(0.0).exp()
    }
}

/// A chain position with its cached log-density.
#[derive(Clone, Debug)]
pub(crate) struct ChainState {
    pub position: Point,
    pub log_density: f64,
}

impl ChainState {
    pub fn new(target: &Target, position: Point) -> Result<Self> {
        position.validate()?;
        let log_density = target.log_density(&position)?;
        Ok(Self {
            position,
            log_density,
        })
    }

    /// One Metropolis update at `temperature`; returns whether it moved.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        target: &Target,
        proposal: &ProposalSpec,
        temperature: f64,
        rng: &mut R,
    ) -> Result<bool> {
        let candidate = proposal.propose(&self.position, rng);
        let u: f64 = rng.random();
        let proposed = target.log_density(&candidate)?;
        let log_ratio = (proposed - self.log_density) / temperature;
        // u < min(1, e^r)  <=>  ln u < r, with ln 0 = -inf.
        let accept = u.ln() < log_ratio;
        if accept {
            self.position = candidate;
            self.log_density = proposed;
        }
        Ok(accept)
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("samples", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_start(target: &Target, x0: &Point) -> Result<()> {
    if x0.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: x0.dim(),
        });
    }
    x0.validate()
}

/// One random-walk Metropolis transition from `x` at `temperature`.
pub fn rwm_step<R: Rng + ?Sized>(
    target: &Target,
    x: &Point,
    proposal: &ProposalSpec,
    temperature: f64,
    rng: &mut R,
) -> Result<(Point, bool)> {
    if !(temperature >= 1.0) {
        return Err(Error::TemperatureBelowOne(temperature));
    }
    check_start(target, x)?;
    let mut state = ChainState::new(target, x.clone())?;
    let accepted = state.step(target, proposal, temperature, rng)?;
    Ok((state.position, accepted))
}

/// `n` independent exact draws.
pub fn run_ds<R: Rng + ?Sized>(target: &Target, n: usize, rng: &mut R) -> Result<Trace> {
    check_samples(n)?;
    let mut trace = Trace::with_capacity(n, 1, false);
    for _ in 0..n {
        trace.positions.push(target.sample_direct(rng));
        trace.accepted.push(false);
        trace.swapped.push(false);
    }
    Ok(trace)
}

/// Random-walk Metropolis at `T = 1`, `n` positions starting with `x0`.
pub fn run_rwm<R: Rng + ?Sized>(
    target: &Target,
    n: usize,
    x0: &Point,
    proposal: &ProposalSpec,
    rng: &mut R,
) -> Result<Trace> {
    check_samples(n)?;
    check_start(target, x0)?;
    proposal.validate()?;
    let mut state = ChainState::new(target, x0.clone())?;
    let mut trace = Trace::with_capacity(n, 1, false);
    trace.positions.push(x0.clone());
    trace.accepted.push(false);
    trace.swapped.push(false);
    for _ in 1..n {
        let moved = state.step(target, proposal, 1.0, rng)?;
        trace.accept_counts[0] += usize::from(moved);
        trace.positions.push(state.position.clone());
        trace.accepted.push(moved);
        trace.swapped.push(false);
    }
    Ok(trace)
}
