use crate::error::{Error, Result};
use crate::geometry::{self, QSpace};

use super::grid::TimeGrid;
use super::paths::Trajectory;

/// Sums of the discrete Ito expansion of `psi_p(X)` along a partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoDecomposition {
    /// `sum_i psi'(X_{t_i})(X_{t_{i+1}} - X_{t_i})`.
    pub stieltjes_sum: f64,
    /// `sum_i R(X_{t_i}, X_{t_{i+1}})`.
    pub remainder_sum: f64,
    /// `sum_i |R(X_{t_i}, X_{t_{i+1}})|`.
    pub abs_remainder_sum: f64,
    /// `psi(X_T) - psi(X_0)`.
    pub increment: f64,
    /// `|increment - stieltjes_sum - remainder_sum|`.
    pub telescoping_defect: f64,
    /// `max_k psi(X_{t_k})` over the partition nodes.
    pub sup_psi: f64,
}

pub const DEFAULT_QUAD_POINTS: usize = 257;

pub fn ito_decomposition(
    traj: &Trajectory,
    p: f64,
    partition: &TimeGrid,
    space: &QSpace,
    quad_points: usize,
) -> Result<ItoDecomposition> {
    if p < 2.0 {
        return Err(Error::InvalidParameter(format!("power p = {p} must be at least 2")));
    }
    if traj.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), actual: traj.dim() });
    }
    let idx = traj.grid().nested_indices(partition)?;
    let q = space.q();
    let mut stieltjes_sum = 0.0;
    let mut remainder_sum = 0.0;
    let mut abs_remainder_sum = 0.0;
    let mut sup_psi = geometry::psi_unchecked(traj.state(idx[0]), p, q);
    let mut h = vec![0.0; traj.dim()];
    for w in idx.windows(2) {
        let (x, y) = (traj.state(w[0]), traj.state(w[1]));
        for ((hj, yj), xj) in h.iter_mut().zip(y).zip(x) {
            *hj = yj - xj;
        }
        stieltjes_sum += geometry::psi_prime_apply(x, &h, p, q);
        let r = geometry::taylor_remainder_unchecked(x, y, p, q, quad_points);
        remainder_sum += r;
        abs_remainder_sum += r.abs();
        sup_psi = sup_psi.max(geometry::psi_unchecked(y, p, q));
    }
    let increment = geometry::psi_unchecked(traj.last(), p, q) - geometry::psi_unchecked(traj.state(0), p, q);
    Ok(ItoDecomposition {
        stieltjes_sum,
        remainder_sum,
        abs_remainder_sum,
        increment,
        telescoping_defect: (increment - stieltjes_sum - remainder_sum).abs(),
        sup_psi,
    })
}
