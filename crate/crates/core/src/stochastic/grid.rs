use crate::error::{Error, Result};

/// A partition `0 = t_0 < t_1 < ... < t_m = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    steps: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter("a time grid needs at least two points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("time grid must start at 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidParameter(format!("time grid not strictly increasing at {} -> {}", w[0], w[1])));
        }
        let steps = times.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self { times, steps })
    }

    /// `cells` equal steps on `[0, horizon]`; every step is exactly
    /// `horizon / cells` and the last node is exactly `horizon`.
    pub fn uniform(horizon: f64, cells: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon T = {horizon} must be positive")));
        }
        if cells == 0 {
            return Err(Error::InvalidParameter("a grid needs at least one cell".into()));
        }
        let m = cells as f64;
        let times = (0..=cells).map(|k| horizon * k as f64 / m).collect();
        Ok(Self { times, steps: vec![horizon / m; cells] })
    }

    /// `2^level` equal cells on `[0, horizon]`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        Self::uniform(horizon, 1usize << level)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn cells(&self) -> usize {
        self.steps.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid has nodes")
    }

    pub fn mesh(&self) -> f64 {
        self.steps.iter().copied().fold(0.0, f64::max)
    }

    /// Grid indices of the nodes of `partition`; fails unless every node
    /// of `partition` is (to rounding) a node of `self`.
    pub fn nested_indices(&self, partition: &TimeGrid) -> Result<Vec<usize>> {
        let tol = 1e-12 * self.horizon();
        if (partition.horizon() - self.horizon()).abs() > tol {
            return Err(Error::PartitionNotNested(format!(
                "partition horizon {} differs from grid horizon {}",
                partition.horizon(),
                self.horizon()
            )));
        }
        let mut out = Vec::with_capacity(partition.times.len());
        let mut k = 0;
        for &t in &partition.times {
            while k < self.times.len() && self.times[k] < t - tol {
                k += 1;
            }
            if k == self.times.len() || (self.times[k] - t).abs() > tol {
                return Err(Error::PartitionNotNested(format!("node t = {t} is not a grid node")));
            }
            out.push(k);
        }
        Ok(out)
    }

    /// The dyadic coarsening with `2^level` cells, sharing nodes with `self`.
    /// Requires the cell count of `self` to be a multiple of `2^level`.
    pub fn coarsen(&self, level: u32) -> Result<TimeGrid> {
        let cells = 1usize << level;
        if !self.cells().is_multiple_of(cells) {
            return Err(Error::PartitionNotNested(format!(
                "{} grid cells cannot be grouped into {cells} dyadic cells",
                self.cells()
            )));
        }
        let stride = self.cells() / cells;
        let times: Vec<f64> = self.times.iter().step_by(stride).copied().collect();
        TimeGrid::new(times)
    }

    /// Largest grid index `k` with `t_k <= t` (0 when `t < 0`).
    pub fn index_at_or_before(&self, t: f64) -> usize {
        self.times.partition_point(|s| *s <= t).saturating_sub(1)
    }
}
