use std::sync::Arc;

use rand_distr::StandardNormal;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, domain};

use super::grid::TimeGrid;

/// Increments of a `d`-dimensional Brownian motion (a cylindrical Brownian
/// motion on `H = R^d`) over a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: Arc<TimeGrid>,
    d: usize,
    /// Row-major `cells x d`.
    increments: Vec<f64>,
    seed: u64,
    trajectory: u64,
}

/// The increments strictly before some grid index. Builders of adapted
/// processes only ever see one of these.
#[derive(Debug, Clone, Copy)]
pub struct NoisePrefix<'a> {
    increments: &'a [f64],
    d: usize,
}

impl<'a> NoisePrefix<'a> {
    pub fn len(&self) -> usize {
        self.increments.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increment(&self, i: usize) -> &'a [f64] {
        &self.increments[i * self.d..(i + 1) * self.d]
    }

    /// `W` at the end of the prefix.
    pub fn brownian(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.d];
        for chunk in self.increments.chunks_exact(self.d) {
            w.iter_mut().zip(chunk).for_each(|(a, b)| *a += b);
        }
        w
    }
}

/// Gaussian increments `N(0, dt_i I_d)` from the stream keyed by
/// `(seed, trajectory_index)`.
pub fn sample_noise(grid: &Arc<TimeGrid>, d: usize, seed: u64, trajectory_index: u64) -> Result<NoisePath> {
    if d == 0 {
        return Err(Error::InvalidParameter("noise dimension d must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, domain::NOISE, trajectory_index);
    let mut increments = Vec::with_capacity(grid.cells() * d);
    for &dt in grid.steps() {
        let sd = dt.sqrt();
        for _ in 0..d {
            increments.push(sd * rng.sample::<f64, _>(StandardNormal));
        }
    }
    Ok(NoisePath { grid: Arc::clone(grid), d, increments, seed, trajectory: trajectory_index })
}

impl NoisePath {
    /// Noise from explicit increments (row-major `cells x d`).
    pub fn from_increments(grid: &Arc<TimeGrid>, d: usize, increments: Vec<f64>) -> Result<Self> {
        if d == 0 || increments.len() != grid.cells() * d {
            return Err(Error::GridMismatch(format!(
                "{} increments do not fill {} cells of dimension {d}",
                increments.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid: Arc::clone(grid), d, increments, seed: 0, trajectory: 0 })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        &self.increments[i * self.d..(i + 1) * self.d]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments `0..i`.
    pub fn prefix(&self, i: usize) -> NoisePrefix<'_> {
        NoisePrefix { increments: &self.increments[..i * self.d], d: self.d }
    }

    /// `(seed, trajectory index)` the path was drawn from.
    pub fn provenance(&self) -> (u64, u64) {
        (self.seed, self.trajectory)
    }

    /// Brownian path `W_{t_k}`, `k = 0..=cells`, row-major.
    pub fn brownian_path(&self) -> Vec<f64> {
        let mut out = vec![0.0; (self.cells() + 1) * self.d];
        for i in 0..self.cells() {
            for c in 0..self.d {
                out[(i + 1) * self.d + c] = out[i * self.d + c] + self.increments[i * self.d + c];
            }
        }
        out
    }
}
