use std::io::Write;

use crate::distributions::Point;
use crate::error::Result;

/// Every chain's state at every iteration of a coupled run.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainHistory {
    pub n_chains: usize,
    /// Iteration-major: entry `t * n_chains + m`.
    pub positions: Vec<Point>,
    pub accepted: Vec<bool>,
    pub swapped: Vec<bool>,
}

impl ChainHistory {
    pub fn position(&self, t: usize, chain: usize) -> &Point {
        &self.positions[t * self.n_chains + chain]
    }
}

/// Output of a sampler run. `positions` holds the cold chain only.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub positions: Vec<Point>,
    /// Whether the cold chain's Metropolis proposal was accepted at step `t`.
    pub accepted: Vec<bool>,
    /// Whether the cold chain's state was exchanged with another chain at step `t`.
    pub swapped: Vec<bool>,
    pub accept_counts: Vec<usize>,
    pub swap_attempts: usize,
    pub swap_accepts: usize,
    pub all_chains: Option<ChainHistory>,
}

impl Trace {
    pub(crate) fn with_capacity(n: usize, n_chains: usize, record_all: bool) -> Self {
        Trace {
            positions: Vec::with_capacity(n),
            accepted: Vec::with_capacity(n),
            swapped: Vec::with_capacity(n),
            accept_counts: vec![0; n_chains],
            swap_attempts: 0,
            swap_accepts: 0,
            all_chains: record_all.then(|| ChainHistory {
                n_chains,
                positions: Vec::with_capacity(n * n_chains),
                accepted: Vec::with_capacity(n * n_chains),
                swapped: Vec::with_capacity(n * n_chains),
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.positions.first().map_or(0, Point::dim)
    }

    pub fn n_chains(&self) -> usize {
        self.accept_counts.len()
    }

    /// Fraction of the `len - 1` transitions accepted by `chain`.
    pub fn acceptance_rate(&self, chain: usize) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        self.accept_counts[chain] as f64 / (self.len() - 1) as f64
    }

    pub fn swap_rate(&self) -> Option<f64> {
        (self.swap_attempts > 0).then(|| self.swap_accepts as f64 / self.swap_attempts as f64)
    }

    /// One coordinate of the cold chain as a time series.
    pub fn coordinate(&self, axis: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[axis]).collect()
    }

    /// Writes `t,chain,dim0,...,accepted,swapped`. Only the cold chain unless
    /// `all_chains` is requested and was recorded.
    pub fn write_csv<W: Write>(&self, out: W, all_chains: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.dim();
        let mut header = vec!["t".to_string(), "chain".to_string()];
        header.extend((0..dim).map(|k| format!("dim{k}")));
        header.push("accepted".into());
        header.push("swapped".into());
        w.write_record(&header)?;

        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        let mut row = |t: usize, chain: usize, p: &Point, acc: bool, sw: bool| -> Result<()> {
            let mut rec = Vec::with_capacity(dim + 4);
            rec.push(t.to_string());
            rec.push(chain.to_string());
            rec.extend(p.iter().map(|c| c.to_string()));
            rec.push(flag(acc));
            rec.push(flag(sw));
            w.write_record(&rec)?;
            Ok(())
        };
        match (&self.all_chains, all_chains) {
            (Some(h), true) => {
                for t in 0..self.len() {
                    for m in 0..h.n_chains {
                        let i = t * h.n_chains + m;
                        row(t, m, &h.positions[i], h.accepted[i], h.swapped[i])?;
                    }
                }
            }
            _ => {
                for t in 0..self.len() {
                    row(t, 0, &self.positions[t], self.accepted[t], self.swapped[t])?;
                }
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
