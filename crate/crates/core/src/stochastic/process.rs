use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::gamma::GammaNorm;
use super::grid::TimeGrid;
use super::noise::{NoisePath, NoisePrefix};

/// A value of the integrand: an `n x d` matrix together with its squared
/// gamma-norm. The norm is computed once by a [`GammaNorm`] and then carried
/// through the operations that change it in a known way (scaling, signed
/// permutations of the coordinates of `E`).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBlock {
    matrix: DMatrix<f64>,
    gamma_sq: f64,
}

impl OperatorBlock {
    pub fn new(matrix: DMatrix<f64>, gamma: &GammaNorm) -> Result<Self> {
        let gamma_sq = gamma.norm_sq(&matrix)?;
        Ok(Self { matrix, gamma_sq })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, d), gamma_sq: 0.0 }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn gamma_sq(&self) -> f64 {
        self.gamma_sq
    }

    /// `c T`, with `|cT|_gamma^2 = c^2 |T|_gamma^2`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { matrix: &self.matrix * c, gamma_sq: c * c * self.gamma_sq }
    }

    /// `R T` for a contraction `R` of `l^q`. The recorded gamma-norm is
    /// carried over unchanged and is therefore only an upper bound for the
    /// new block; measure it afresh when the exact value matters.
    pub fn contracted(&self, r: &DMatrix<f64>) -> Self {
        Self { matrix: r * &self.matrix, gamma_sq: self.gamma_sq }
    }

    /// `P T` for a signed permutation `P`, an isometry of every `l^q`.
    pub fn permuted(&self, perm: &SignedPermutation) -> Self {
        let n = self.matrix.nrows();
        let mut out = DMatrix::zeros(n, self.matrix.ncols());
        for (i, (&src, &sign)) in perm.targets.iter().zip(&perm.signs).enumerate() {
            out.row_mut(i).copy_from(&(self.matrix.row(src) * sign));
        }
        Self { matrix: out, gamma_sq: self.gamma_sq }
    }
}

/// `(P x)_i = sign_i x_{targets_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    targets: Vec<usize>,
    signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn new(targets: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let n = targets.len();
        let mut seen = vec![false; n];
        for &t in &targets {
            if t >= n || std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidParameter(format!("{targets:?} is not a permutation")));
            }
        }
        if signs.len() != n || signs.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::InvalidParameter("signs must be +-1, one per coordinate".into()));
        }
        Ok(Self { targets, signs })
    }

    pub fn identity(n: usize) -> Self {
        Self { targets: (0..n).collect(), signs: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.targets.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, (&t, &s)) in self.targets.iter().zip(&self.signs).enumerate() {
            m[(i, t)] = s;
        }
        m
    }
}

/// A piecewise-constant process on a grid: `values[i]` is used on the cell
/// `(t_i, t_{i+1}]` and may depend only on increments `0..i`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProcess<B> {
    grid: Arc<TimeGrid>,
    values: Vec<B>,
}

/// Operator-valued integrand `g`.
pub type Integrand = StepProcess<OperatorBlock>;
/// `E`-valued drift `a`.
pub type Drift = StepProcess<DVector<f64>>;

impl<B: Clone> StepProcess<B> {
    pub fn constant(grid: &Arc<TimeGrid>, value: B) -> Self {
        Self { grid: Arc::clone(grid), values: vec![value; grid.cells()] }
    }

    /// Builds an adapted process: the value on cell `i` is computed from
    /// the noise prefix `0..i` only.
    pub fn build<F>(noise: &NoisePath, mut value_at: F) -> Self
    where
        F: FnMut(usize, NoisePrefix<'_>) -> B,
    {
        let values = (0..noise.cells()).map(|i| value_at(i, noise.prefix(i))).collect();
        Self { grid: Arc::clone(noise.grid()), values }
    }

    /// Only for crate-internal builders that interleave simulation and
    /// construction and therefore respect adaptedness by construction.
    pub(crate) fn from_values(grid: &Arc<TimeGrid>, values: Vec<B>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid: Arc::clone(grid), values }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[B] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &B {
        &self.values[i]
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    /// Same process with the cells `stop..` replaced by `zero`.
    pub fn masked_after(&self, stop: usize, zero: B) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| if i < stop { v.clone() } else { zero.clone() })
            .collect();
        Self { grid: Arc::clone(&self.grid), values }
    }

    pub fn map<C, F: FnMut(&B) -> C>(&self, f: F) -> StepProcess<C> {
        StepProcess { grid: Arc::clone(&self.grid), values: self.values.iter().map(f).collect() }
    }
}

impl Integrand {
    pub fn zero(grid: &Arc<TimeGrid>, n: usize, d: usize) -> Self {
        Self::constant(grid, OperatorBlock::zeros(n, d))
    }

    pub fn state_dim(&self) -> usize {
        self.values.first().map_or(0, |b| b.matrix.nrows())
    }

    pub fn noise_dim(&self) -> usize {
        self.values.first().map_or(0, |b| b.matrix.ncols())
    }

    /// `g` stopped after cell `stop - 1`: `1_{[0, t_stop]} g`.
    pub fn stopped(&self, stop: usize) -> Self {
        let zero = OperatorBlock::zeros(self.state_dim(), self.noise_dim());
        self.masked_after(stop, zero)
    }

    /// `sum_{i < k} |g_i|_gamma^2 dt_i` for every `k = 0..=cells`.
    pub fn cumulative_gamma_energy(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cells() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for (b, dt) in self.values.iter().zip(self.grid.steps()) {
            acc += b.gamma_sq * dt;
            out.push(acc);
        }
        out
    }
}

impl Drift {
    pub fn zero(grid: &Arc<TimeGrid>, n: usize) -> Self {
        Self::constant(grid, DVector::zeros(n))
    }

    /// `int_0^T |a_s| ds` in the norm of the space.
    pub fn total_variation(&self, q: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.steps())
            .map(|(a, dt)| crate::geometry::norm_unchecked(a.as_slice(), q) * dt)
            .sum()
    }
}

/// `(sum_i |g_i|_gamma^2 dt_i)^{p/2}`: one trajectory's contribution to the
/// `M^p` norm of `g`.
pub fn integrability_stat(g: &Integrand, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent p = {p} must be positive")));
    }
    let energy = *g.cumulative_gamma_energy().last().expect("nonempty");
    Ok(energy.powf(p / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::QSpace;
    use crate::stochastic::gamma::GammaMethod;
    use crate::stochastic::noise::sample_noise;
    use approx::assert_relative_eq;

    #[test]
    fn block_scaling_and_permutation_track_gamma_norm() {
        let s = QSpace::new(3, 3.0).unwrap();
        let gamma = GammaNorm::new(GammaMethod::Mc { samples: 4000, seed: 2 }, s, 2).unwrap();
        let b = OperatorBlock::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, -1.0, 0.0, 2.0]), &gamma).unwrap();
        let scaled = b.scaled(-1.5);
        assert_relative_eq!(scaled.gamma_sq(), gamma.norm_sq(scaled.matrix()).unwrap(), max_relative = 1e-12);
        let perm = SignedPermutation::new(vec![2, 0, 1], vec![-1.0, 1.0, -1.0]).unwrap();
        let moved = b.permuted(&perm);
        assert_eq!(moved.matrix(), &(perm.matrix() * b.matrix()));
        // common samples: the permuted block has exactly the same estimate
        assert_relative_eq!(moved.gamma_sq(), gamma.norm_sq(moved.matrix()).unwrap(), max_relative = 1e-12);
        assert!(SignedPermutation::new(vec![0, 0, 1], vec![1.0; 3]).is_err());
        assert!(SignedPermutation::new(vec![0, 1, 2], vec![1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn integrability_examples() {
        let grid = Arc::new(TimeGrid::uniform(2.0, 16).unwrap());
        let s = QSpace::new(2, 2.0).unwrap();
        let gamma = GammaNorm::new(GammaMethod::Exact2, s, 2).unwrap();
        assert_eq!(integrability_stat(&Integrand::zero(&grid, 2, 2), 3.0).unwrap(), 0.0);
        let block = OperatorBlock::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -1.0]), &gamma).unwrap();
        let g = Integrand::constant(&grid, block);
        assert_relative_eq!(integrability_stat(&g, 2.0).unwrap(), 2.0 * 6.0, max_relative = 1e-14);
        assert!(integrability_stat(&g, 0.0).is_err());
    }

    #[test]
    fn integrability_matches_flat_loop() {
        let grid = Arc::new(TimeGrid::new(vec![0.0, 0.1, 0.35, 0.4, 1.0]).unwrap());
        let s = QSpace::new(2, 2.0).unwrap();
        let gamma = GammaNorm::new(GammaMethod::Exact2, s, 3).unwrap();
        let w = sample_noise(&grid, 3, 5, 0).unwrap();
        let g = Integrand::build(&w, |i, prefix| {
            let wsum = prefix.brownian();
            let m = DMatrix::from_fn(2, 3, |r, c| (r as f64 + 1.0) * wsum[c] + 0.1 * i as f64);
            OperatorBlock::new(m, &gamma).unwrap()
        });
        let mut flat = 0.0;
        for i in 0..4 {
            let m = g.value(i).matrix();
            let mut fro = 0.0;
            for r in 0..2 {
                for c in 0..3 {
                    fro += m[(r, c)] * m[(r, c)];
                }
            }
            flat += fro * grid.steps()[i];
        }
        assert_relative_eq!(integrability_stat(&g, 3.0).unwrap(), flat.powf(1.5), max_relative = 1e-13);
    }

    #[test]
    fn builder_sees_only_the_past() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 5).unwrap());
        let w = sample_noise(&grid, 1, 1, 1).unwrap();
        let lens = StepProcess::build(&w, |_, prefix| prefix.len());
        assert_eq!(lens.values(), &[0, 1, 2, 3, 4]);
    }
}
