use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{self, QSpace};
use crate::semigroup::Generator;

use super::grid::TimeGrid;
use super::noise::{NoisePath, NoisePrefix};
use super::process::{Drift, Integrand, OperatorBlock, StepProcess};

/// A path `X_{t_k}`, `k = 0..=cells`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Arc<TimeGrid>,
    n: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn from_states(grid: &Arc<TimeGrid>, n: usize, states: Vec<f64>) -> Result<Self> {
        if n == 0 || states.len() != (grid.cells() + 1) * n {
            return Err(Error::GridMismatch(format!(
                "{} values do not fill {} nodes of dimension {n}",
                states.len(),
                grid.cells() + 1
            )));
        }
        Ok(Self { grid: Arc::clone(grid), n, states })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grid.cells() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.n..(k + 1) * self.n]
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `|X_{t_k}|_q` for every node.
    pub fn norms(&self, q: f64) -> Vec<f64> {
        self.states.chunks_exact(self.n).map(|x| geometry::norm_unchecked(x, q)).collect()
    }

    /// `max_{k <= upto} |X_{t_k}|_q`.
    pub fn sup_norm(&self, q: f64, upto: usize) -> f64 {
        self.states.chunks_exact(self.n).take(upto + 1).map(|x| geometry::norm_unchecked(x, q)).fold(0.0, f64::max)
    }

    /// `max_{k <= upto} |X_{t_k}|_q^p`.
    pub fn sup_psi(&self, p: f64, q: f64, upto: usize) -> f64 {
        self.sup_norm(q, upto).powf(p)
    }

    /// The path frozen after index `stop`.
    pub fn stopped(&self, stop: usize) -> Trajectory {
        let mut states = self.states.clone();
        let frozen = self.state(stop).to_vec();
        for chunk in states.chunks_exact_mut(self.n).skip(stop + 1) {
            chunk.copy_from_slice(&frozen);
        }
        Trajectory { grid: Arc::clone(&self.grid), n: self.n, states }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for j in 1..=self.n {
            write!(out, ",x_{j}")?;
        }
        writeln!(out)?;
        for (t, x) in self.grid.times().iter().zip(self.states.chunks_exact(self.n)) {
            write!(out, "{t}")?;
            for v in x {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// `out += m * v` for a column-major matrix.
#[inline]
fn gemv_acc(out: &mut [f64], m: &DMatrix<f64>, v: &[f64]) {
    for (c, vc) in v.iter().enumerate() {
        if *vc != 0.0 {
            for (o, mij) in out.iter_mut().zip(m.column(c).iter()) {
                *o += mij * vc;
            }
        }
    }
}

fn same_grid(a: &Arc<TimeGrid>, b: &Arc<TimeGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch("process and noise live on different grids".into()))
    }
}

fn check_integrand(g: &Integrand, w: &NoisePath, n: usize) -> Result<()> {
    same_grid(g.grid(), w.grid())?;
    if g.noise_dim() != w.dim() {
        return Err(Error::DimensionMismatch { expected: w.dim(), actual: g.noise_dim() });
    }
    if g.state_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: g.state_dim() });
    }
    Ok(())
}

/// `S_k = sum_{i<k} g_i dW_i`.
pub fn simple_integral(g: &Integrand, w: &NoisePath) -> Result<Trajectory> {
    let n = g.state_dim();
    check_integrand(g, w, n)?;
    let mut states = vec![0.0; (w.cells() + 1) * n];
    for i in 0..w.cells() {
        let (done, rest) = states.split_at_mut((i + 1) * n);
        let next = &mut rest[..n];
        next.copy_from_slice(&done[i * n..]);
        gemv_acc(next, g.value(i).matrix(), w.increment(i));
    }
    Trajectory::from_states(w.grid(), n, states)
}

/// One step `X_{k+1} = e^{dt A}(X_k + g dW)`, allocation-free apart from
/// the propagator lookup.
fn convolution_step(a: &Generator, dt: f64, x: &[f64], g: &DMatrix<f64>, dw: &[f64], buf: &mut [f64], out: &mut [f64]) -> Result<()> {
    buf.copy_from_slice(x);
    gemv_acc(buf, g, dw);
    if a.is_zero() {
        out.copy_from_slice(buf);
    } else {
        out.iter_mut().for_each(|o| *o = 0.0);
        let prop = a.propagator(dt)?;
        gemv_acc(out, &prop, buf);
    }
    Ok(())
}

/// The stochastic convolution `X_t = int_0^t e^{(t-s)A} g_s dW_s` by the
/// recursion `X_0 = 0`, `X_{k+1} = e^{dt_k A}(X_k + g_k dW_k)`.
pub fn convolve(a: &Generator, g: &Integrand, w: &NoisePath) -> Result<Trajectory> {
    let n = a.dim();
    check_integrand(g, w, n)?;
    let mut states = vec![0.0; (w.cells() + 1) * n];
    let mut buf = vec![0.0; n];
    for (i, &dt) in w.grid().steps().iter().enumerate() {
        let (done, rest) = states.split_at_mut((i + 1) * n);
        convolution_step(a, dt, &done[i * n..], g.value(i).matrix(), w.increment(i), &mut buf, &mut rest[..n])?;
    }
    Trajectory::from_states(w.grid(), n, states)
}

/// Convolution with a state-feedback integrand: the block on cell `i` is
/// chosen from `X_{t_i}` and the noise prefix `0..i`, hence adapted.
/// Returns the path and the integrand that was used.
pub fn convolve_adapted<F>(a: &Generator, w: &NoisePath, mut block_at: F) -> Result<(Trajectory, Integrand)>
where
    F: FnMut(usize, &[f64], NoisePrefix<'_>) -> OperatorBlock,
{
    let n = a.dim();
    let mut states = vec![0.0; (w.cells() + 1) * n];
    let mut blocks = Vec::with_capacity(w.cells());
    let mut buf = vec![0.0; n];
    for (i, &dt) in w.grid().steps().iter().enumerate() {
        let (done, rest) = states.split_at_mut((i + 1) * n);
        let x = &done[i * n..];
        let block = block_at(i, x, w.prefix(i));
        if block.matrix().nrows() != n || block.matrix().ncols() != w.dim() {
            return Err(Error::DimensionMismatch {
                expected: n * w.dim(),
                actual: block.matrix().nrows() * block.matrix().ncols(),
            });
        }
        convolution_step(a, dt, x, block.matrix(), w.increment(i), &mut buf, &mut rest[..n])?;
        blocks.push(block);
    }
    Ok((Trajectory::from_states(w.grid(), n, states)?, StepProcess::from_values(w.grid(), blocks)))
}

/// `X_{k+1} = X_k + a_k dt_k + g_k dW_k`.
pub fn drifted_path(x0: &[f64], a: &Drift, g: &Integrand, w: &NoisePath) -> Result<Trajectory> {
    let n = x0.len();
    check_integrand(g, w, n)?;
    same_grid(a.grid(), w.grid())?;
    if let Some(v) = a.values().iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
    }
    let mut states = vec![0.0; (w.cells() + 1) * n];
    states[..n].copy_from_slice(x0);
    for (i, &dt) in w.grid().steps().iter().enumerate() {
        let (done, rest) = states.split_at_mut((i + 1) * n);
        let next = &mut rest[..n];
        next.copy_from_slice(&done[i * n..]);
        for (o, ai) in next.iter_mut().zip(a.value(i).iter()) {
            *o += ai * dt;
        }
        gemv_acc(next, g.value(i).matrix(), w.increment(i));
    }
    Trajectory::from_states(w.grid(), n, states)
}

/// Convenience: a constant drift vector.
pub fn constant_drift(grid: &Arc<TimeGrid>, v: DVector<f64>) -> Drift {
    StepProcess::constant(grid, v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub scheme: String,
    pub generator: String,
}

/// A collection of trajectories on one grid.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    grid: Arc<TimeGrid>,
    space: QSpace,
    trajectories: Vec<Trajectory>,
    provenance: Provenance,
}

impl PathEnsemble {
    pub fn new(grid: &Arc<TimeGrid>, space: QSpace, trajectories: Vec<Trajectory>, provenance: Provenance) -> Result<Self> {
        let start = trajectories.first().map(|t| t.state(0).to_vec());
        for t in &trajectories {
            same_grid(t.grid(), grid)?;
            if t.dim() != space.dim() {
                return Err(Error::DimensionMismatch { expected: space.dim(), actual: t.dim() });
            }
            if Some(t.state(0)) != start.as_deref() {
                return Err(Error::InvalidParameter("trajectories start at different points".into()));
            }
        }
        Ok(Self { grid: Arc::clone(grid), space, trajectories, provenance })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn space(&self) -> QSpace {
        self.space
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// One `path_<index>.csv` per trajectory in `dir`.
    pub fn dump_csv(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (k, t) in self.trajectories.iter().enumerate() {
            let f = std::fs::File::create(dir.join(format!("path_{k:05}.csv")))?;
            t.write_csv(std::io::BufWriter::new(f))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::diagonal_generator;
    use crate::stochastic::gamma::{GammaMethod, GammaNorm};
    use crate::stochastic::noise::sample_noise;

    fn setup(n: usize, d: usize, cells: usize) -> (Arc<TimeGrid>, GammaNorm) {
        let grid = Arc::new(TimeGrid::uniform(1.0, cells).unwrap());
        let gamma = GammaNorm::new(GammaMethod::Exact2, QSpace::new(n, 2.0).unwrap(), d).unwrap();
        (grid, gamma)
    }

    #[test]
    fn zero_integrand_gives_zero_path() {
        let (grid, _) = setup(2, 3, 16);
        let w = sample_noise(&grid, 3, 1, 0).unwrap();
        let g = Integrand::zero(&grid, 2, 3);
        assert!(simple_integral(&g, &w).unwrap().states().iter().all(|v| *v == 0.0));
        let a = diagonal_generator(&[-1.0, -0.5], QSpace::new(2, 3.0).unwrap()).unwrap();
        assert!(convolve(&a, &g, &w).unwrap().states().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_integrand_telescopes() {
        let (grid, gamma) = setup(2, 2, 32);
        let w = sample_noise(&grid, 2, 3, 4).unwrap();
        let gm = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.25, 2.0]);
        let g = Integrand::constant(&grid, OperatorBlock::new(gm.clone(), &gamma).unwrap());
        let s = simple_integral(&g, &w).unwrap();
        let bp = w.brownian_path();
        for k in 0..=32 {
            let expect = &gm * DVector::from_column_slice(&bp[k * 2..k * 2 + 2]);
            for j in 0..2 {
                assert!((s.state(k)[j] - expect[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_generator_reduces_to_simple_integral() {
        let (grid, gamma) = setup(2, 1, 20);
        let w = sample_noise(&grid, 1, 5, 2).unwrap();
        let g = Integrand::build(&w, |_, prefix| {
            let b = prefix.brownian()[0];
            OperatorBlock::new(DMatrix::from_column_slice(2, 1, &[b.cos(), b.sin()]), &gamma).unwrap()
        });
        let a = diagonal_generator(&[0.0, 0.0], QSpace::new(2, 2.0).unwrap()).unwrap();
        assert_eq!(convolve(&a, &g, &w).unwrap(), simple_integral(&g, &w).unwrap());
    }

    #[test]
    fn recursion_matches_explicit_sum() {
        let (grid, gamma) = setup(2, 1, 12);
        let w = sample_noise(&grid, 1, 8, 0).unwrap();
        let g = Integrand::constant(&grid, OperatorBlock::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.5]), &gamma).unwrap());
        let lambdas = [-1.0, -3.0];
        let a = diagonal_generator(&lambdas, QSpace::new(2, 2.0).unwrap()).unwrap();
        let x = convolve(&a, &g, &w).unwrap();
        let t = grid.times();
        for k in 0..12 {
            for j in 0..2 {
                let gj = [1.0, 0.5][j];
                let sum: f64 =
                    (0..=k).map(|i| (lambdas[j] * (t[k + 1] - t[i])).exp() * gj * w.increment(i)[0]).sum();
                assert!((x.state(k + 1)[j] - sum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn drifted_examples() {
        let (grid, gamma) = setup(2, 1, 10);
        let w = sample_noise(&grid, 1, 1, 1).unwrap();
        let x0 = [1.0, -2.0];
        let zero_g = Integrand::zero(&grid, 2, 1);
        let still = drifted_path(&x0, &Drift::zero(&grid, 2), &zero_g, &w).unwrap();
        assert!(still.states().chunks(2).all(|c| c == x0));
        let v = DVector::from_column_slice(&[0.5, 1.0]);
        let lin = drifted_path(&x0, &constant_drift(&grid, v), &zero_g, &w).unwrap();
        for (k, t) in grid.times().iter().enumerate() {
            assert!((lin.state(k)[0] - (1.0 + 0.5 * t)).abs() < 1e-12);
            assert!((lin.state(k)[1] - (-2.0 + t)).abs() < 1e-12);
        }
        let g = Integrand::constant(&grid, OperatorBlock::new(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), &gamma).unwrap());
        assert_eq!(drifted_path(&[0.0, 0.0], &Drift::zero(&grid, 2), &g, &w).unwrap(), simple_integral(&g, &w).unwrap());
    }

    #[test]
    fn mismatches_are_errors() {
        let (grid, _) = setup(2, 1, 10);
        let other = Arc::new(TimeGrid::uniform(1.0, 11).unwrap());
        let w = sample_noise(&other, 1, 1, 1).unwrap();
        assert!(matches!(simple_integral(&Integrand::zero(&grid, 2, 1), &w), Err(Error::GridMismatch(_))));
        let w = sample_noise(&grid, 2, 1, 1).unwrap();
        assert!(simple_integral(&Integrand::zero(&grid, 2, 1), &w).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let (grid, _) = setup(2, 1, 4);
        let t = Trajectory::from_states(&grid, 2, (0..10).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("t,x_1,x_2"));
        assert_eq!(s.lines().count(), 6);
        assert_eq!(t.stopped(1).state(4), &[2.0, 3.0]);
    }
}
