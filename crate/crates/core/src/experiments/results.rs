use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentKind};
use crate::analysis::{PowerLawFit, SpectralFit};
use crate::error::{Error, Result};

/// One fitted (or failed) statistic for a replicate x cell x algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub cell: usize,
    /// Name of the swept parameter (`r`, `ratio`, `sigma_target`).
    pub parameter: String,
    pub parameter_value: f64,
    /// Measured mean pairwise distance between mode centres.
    pub sparsity: Option<f64>,
    pub algorithm: Algorithm,
    pub replicate: usize,
    /// `mu_hat`, `alpha_hat` or `kl_final`.
    pub metric: String,
    pub value: Option<f64>,
    pub r_squared: Option<f64>,
    /// Cells, blocks or samples behind `value`.
    pub n_points: Option<usize>,
    pub excluded_zeros: Option<usize>,
    pub acceptance_rate: Option<f64>,
    pub swap_rate: Option<f64>,
    /// Share of samples whose nearest mode is the most visited one.
    pub top_mode_fraction: Option<f64>,
    pub fit_error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlRow {
    pub replicate: usize,
    pub algorithm: Algorithm,
    pub t: usize,
    pub kl: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fit {
    PowerLaw(PowerLawFit),
    Spectral(SpectralFit),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub cell: usize,
    pub replicate: usize,
    pub algorithm: Algorithm,
    pub fit: Fit,
}

/// Everything an experiment produced, keyed by cell, replicate and algorithm.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResultSet {
    pub rows: Vec<ResultRow>,
    pub kl_trajectories: Vec<KlRow>,
    pub fits: Vec<FitRecord>,
}

impl ResultSet {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: ResultSet) {
        self.rows.extend(other.rows);
        self.kl_trajectories.extend(other.kl_trajectories);
        self.fits.extend(other.fits);
    }

    /// Rows for one algorithm in one cell.
    pub fn values(&self, cell: usize, algorithm: Algorithm) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.cell == cell && r.algorithm == algorithm)
            .filter_map(|r| r.value)
            .collect()
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("results.csv", e))?;
        Ok(())
    }

    pub fn read_rows_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
        csv::Reader::from_reader(input)
            .deserialize()
            .map(|r| r.map_err(Error::from))
            .collect()
    }

    pub fn write_kl_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.kl_trajectories {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io("kl_trajectories.csv", e))?;
        Ok(())
    }

    pub fn load_rows(path: &Path) -> Result<Vec<ResultRow>> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_rows_csv(f)
    }
}
