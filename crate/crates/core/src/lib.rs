//! Sampling laboratory: direct sampling, random-walk Metropolis and
//! Metropolis-coupled MCMC over Gaussian landscapes, with the statistics
//! used to characterise their output (Levy-flight exponents, 1/f spectral
//! slopes, mode-coverage KL divergence) and a seeded experiment harness.

// `!(x > 0.0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod rng;
pub mod samplers;

pub use analysis::{PowerLawFit, PowerLawOptions, Series, SpectralFit};
pub use distributions::{GaussianMixture, Point, Target, UnimodalGaussian};
pub use error::{Error, Result};
pub use samplers::{Mc3Options, ProposalSpec, SwapPolicy, TemperatureLadder, Trace};
