//! Batch-means estimation and small regression helpers.

use crate::error::{Error, Result};

/// Smallest batch count accepted for a batch-means standard error.
pub const MIN_BATCHES: usize = 20;
pub const DEFAULT_BATCHES: usize = 32;

/// A Monte Carlo expectation with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl MeasureEstimate {
    /// An exactly known value (`stderr = 0`, no samples).
    pub fn exact(value: f64) -> Self {
        MeasureEstimate { mean: value, stderr: 0.0, n_samples: 0, seed: 0, burn_in: 0 }
    }

    /// Batch-means estimate of the mean of a correlated sample path.
    pub fn from_samples(values: &[f64], batches: usize) -> Result<Self> {
        Ok(BatchSummary::from_samples(values, batches)?.estimate())
    }

    pub fn with_provenance(mut self, seed: u64, burn_in: usize) -> Self {
        self.seed = seed;
        self.burn_in = burn_in;
        self
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// `self - other` with independent errors combined in quadrature.
    pub fn minus(&self, other: &MeasureEstimate) -> MeasureEstimate {
        MeasureEstimate {
            mean: self.mean - other.mean,
            stderr: self.stderr.hypot(other.stderr),
            n_samples: self.n_samples.min(other.n_samples),
            seed: self.seed,
            burn_in: self.burn_in,
        }
    }
}

/// Per-batch means of one or more chains. Merging concatenates batches, so
/// it is associative and the estimate does not depend on merge order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSummary {
    means: Vec<f64>,
    sizes: Vec<usize>,
}

impl BatchSummary {
    /// Splits `values` into `batches` contiguous batches; the last batch takes
    /// the remainder.
    pub fn from_samples(values: &[f64], batches: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("cannot estimate from an empty stream"));
        }
        if batches < MIN_BATCHES {
            return Err(Error::arg(format!("need at least {MIN_BATCHES} batches, got {batches}")));
        }
        if values.len() < batches {
            return Err(Error::arg(format!(
                "{} samples cannot fill {batches} batches",
                values.len()
            )));
        }
        let size = values.len() / batches;
        let mut out = BatchSummary::default();
        for b in 0..batches {
            let end = if b + 1 == batches { values.len() } else { (b + 1) * size };
            let chunk = &values[b * size..end];
            out.means.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
            out.sizes.push(chunk.len());
        }
        Ok(out)
    }

    pub fn merge(mut self, other: &BatchSummary) -> BatchSummary {
        self.means.extend_from_slice(&other.means);
        self.sizes.extend_from_slice(&other.sizes);
        self
    }

    pub fn batches(&self) -> usize {
        self.means.len()
    }

    pub fn estimate(&self) -> MeasureEstimate {
        let n: usize = self.sizes.iter().sum();
        let mean = self
            .means
            .iter()
            .zip(&self.sizes)
            .map(|(m, &s)| m * s as f64)
            .sum::<f64>()
            / n as f64;
        let b = self.means.len() as f64;
        let stderr = if self.means.len() < 2 {
            0.0
        } else {
            let bm = self.means.iter().sum::<f64>() / b;
            let var = self.means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (b - 1.0);
            (var / b).sqrt()
        };
        MeasureEstimate { mean, stderr, n_samples: n, seed: 0, burn_in: 0 }
    }
}

/// Batched histogram over `atoms` categories; yields per-atom frequencies
/// with batch-means standard errors.
#[derive(Debug, Clone)]
pub struct BatchedHistogram {
    atoms: usize,
    batch_size: usize,
    counts: Vec<Vec<u64>>,
    current: usize,
    filled: usize,
}

impl BatchedHistogram {
    pub fn new(atoms: usize, total: usize, batches: usize) -> Result<Self> {
        if batches < MIN_BATCHES || total < batches {
            return Err(Error::arg(format!(
                "need >= {MIN_BATCHES} batches and at least one sample per batch"
            )));
        }
        Ok(BatchedHistogram {
            atoms,
            batch_size: total / batches,
            counts: vec![vec![0; atoms]; batches],
            current: 0,
            filled: 0,
        })
    }

    pub fn push(&mut self, atom: usize) {
        if self.filled == self.batch_size && self.current + 1 < self.counts.len() {
            self.current += 1;
            self.filled = 0;
        }
        self.counts[self.current][atom] += 1;
        self.filled += 1;
    }

    /// Per-atom `(frequency, stderr)`.
    pub fn frequencies(&self) -> Vec<(f64, f64)> {
        let sizes: Vec<u64> = self.counts.iter().map(|c| c.iter().sum()).collect();
        let total: u64 = sizes.iter().sum();
        let b = self.counts.len() as f64;
        (0..self.atoms)
            .map(|a| {
                let f = self.counts.iter().map(|c| c[a]).sum::<u64>() as f64 / total as f64;
                let fr: Vec<f64> = self
                    .counts
                    .iter()
                    .zip(&sizes)
                    .map(|(c, &s)| c[a] as f64 / s as f64)
                    .collect();
                let m = fr.iter().sum::<f64>() / b;
                let var = fr.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1.0);
                (f, (var / b).sqrt())
            })
            .collect()
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl LinearFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
        Some(LinearFit { slope, intercept, r2 })
    }
}
