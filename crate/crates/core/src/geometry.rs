//! Geometry of `(R^n, |.|_q)` for `q >= 2`.
//!
//! These spaces are 2-smooth: the norm is Frechet differentiable away from
//! the origin with derivative the duality functional `f_x`, and the power
//! functions `psi_p(x) = |x|^p`, `p >= 2`, have derivative
//! `psi_p'(x) = p |x|^{p-1} f_x`. Everything here is deterministic and pure.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, domain};

/// `|t|^e`, with fast paths for the small integer exponents used everywhere.
#[inline]
pub(crate) fn abs_pow(t: f64, e: f64) -> f64 {
    let a = t.abs();
    if e == 2.0 {
        a * a
    } else if e == 1.0 {
        a
    } else if e == 3.0 {
        a * a * a
    } else if e == 4.0 {
        let s = a * a;
        s * s
    } else if e == 0.0 {
        1.0
    } else {
        a.powf(e)
    }
}

/// `sign(t) |t|^e`.
#[inline]
fn signed_pow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        abs_pow(t, e).copysign(t)
    }
}

/// `l^q` norm without dimension checks. Rescales by the largest coordinate so
/// that large or tiny vectors neither overflow nor underflow.
#[inline]
pub(crate) fn norm_unchecked(x: &[f64], q: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    if q == 2.0 {
        let s: f64 = x.iter().map(|v| (v / m) * (v / m)).sum();
        return m * s.sqrt();
    }
    let s: f64 = x.iter().map(|v| abs_pow(v / m, q)).sum();
    m * s.powf(1.0 / q)
}

/// `|x|^p` without dimension checks; exact power sum when `p == q`.
#[inline]
pub(crate) fn psi_unchecked(x: &[f64], p: f64, q: f64) -> f64 {
    if p == q {
        x.iter().map(|v| abs_pow(*v, q)).sum()
    } else {
        abs_pow(norm_unchecked(x, q), p)
    }
}

/// `psi_p'(z)(h)` without allocation. Zero at the origin.
#[inline]
pub(crate) fn psi_prime_apply(z: &[f64], h: &[f64], p: f64, q: f64) -> f64 {
    let nz = norm_unchecked(z, q);
    if nz == 0.0 {
        return 0.0;
    }
    let dot: f64 = z.iter().zip(h).map(|(zj, hj)| signed_pow(*zj, q - 1.0) * hj).sum();
    p * nz.powf(p - q) * dot
}

/// The space `(R^n, |.|_q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QSpace {
    dim: usize,
    q: f64,
}

impl QSpace {
    pub fn new(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !(q >= 2.0) || !q.is_finite() {
            return Err(Error::ExponentBelowTwo(q));
        }
        Ok(Self { dim, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Conjugate exponent `q' = q / (q - 1)`.
    pub fn dual_exponent(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        q_norm(x, self)
    }
}

/// An element of the dual space, stored by its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    coeffs: Vec<f64>,
    space: QSpace,
}

impl LinearFunctional {
    pub fn new(coeffs: Vec<f64>, space: QSpace) -> Result<Self> {
        space.check(&coeffs)?;
        Ok(Self { coeffs, space })
    }

    pub fn zero(space: QSpace) -> Self {
        Self { coeffs: vec![0.0; space.dim()], space }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn space(&self) -> QSpace {
        self.space
    }

    pub fn apply(&self, x: &[f64]) -> Result<f64> {
        self.space.check(x)?;
        Ok(self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// `self - other`.
    pub fn sub(&self, other: &LinearFunctional) -> Result<LinearFunctional> {
        self.space.check(&other.coeffs)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Self { coeffs, space: self.space })
    }

    pub fn scale(&self, factor: f64) -> LinearFunctional {
        Self { coeffs: self.coeffs.iter().map(|c| c * factor).collect(), space: self.space }
    }

    pub fn dual_norm(&self) -> f64 {
        dual_norm(self)
    }
}

pub fn q_norm(x: &[f64], space: &QSpace) -> Result<f64> {
    space.check(x)?;
    Ok(norm_unchecked(x, space.q()))
}

/// Operator norm of a functional: the `l^{q'}` norm of its coefficients.
pub fn dual_norm(f: &LinearFunctional) -> f64 {
    norm_unchecked(&f.coeffs, f.space.dual_exponent())
}

/// The derivative `f_x` of the norm at `x != 0`:
/// `f_x[j] = sign(x_j) |x_j|^{q-1} / |x|^{q-1}`.
pub fn duality_functional(x: &[f64], space: &QSpace) -> Result<LinearFunctional> {
    let nx = q_norm(x, space)?;
    if nx == 0.0 {
        return Err(Error::DualityAtOrigin);
    }
    let q = space.q();
    let coeffs = x.iter().map(|v| signed_pow(v / nx, q - 1.0)).collect();
    Ok(LinearFunctional { coeffs, space: *space })
}

fn check_power(p: f64) -> Result<()> {
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("power p = {p} must satisfy p >= 2")));
    }
    Ok(())
}

/// `psi_p(x) = |x|_q^p`.
pub fn psi(x: &[f64], p: f64, space: &QSpace) -> Result<f64> {
    check_power(p)?;
    space.check(x)?;
    Ok(psi_unchecked(x, p, space.q()))
}

/// `psi_p'(x) = p |x|^{p-1} f_x`, and the zero functional at the origin.
///
/// Coefficients are evaluated as `p |x|^{p-q} sign(x_j)|x_j|^{q-1}`, which is
/// the same functional and is exact for `p = q = 2`.
pub fn psi_prime(x: &[f64], p: f64, space: &QSpace) -> Result<LinearFunctional> {
    check_power(p)?;
    let nx = q_norm(x, space)?;
    if nx == 0.0 {
        return Ok(LinearFunctional::zero(*space));
    }
    let q = space.q();
    let scale = p * nx.powf(p - q);
    let coeffs = x.iter().map(|v| scale * signed_pow(*v, q - 1.0)).collect();
    Ok(LinearFunctional { coeffs, space: *space })
}

/// Empirical Holder constant of `psi_p'`:
/// `|psi_p'(x) - psi_p'(y)|_* / ((|x| + |y|)^{p-2} |x - y|)`.
///
/// `l^q` with `q >= 2` is 2-smooth, so the smoothness exponent in the
/// denominator is 2 and the ratio is bounded for every `p >= 2`.
pub fn holder_ratio(x: &[f64], y: &[f64], p: f64, space: &QSpace) -> Result<f64> {
    space.check(x)?;
    space.check(y)?;
    if x == y {
        return Err(Error::RatioUndefined("holder ratio needs x != y"));
    }
    let diff = psi_prime(x, p, space)?.sub(&psi_prime(y, p, space)?)?;
    let q = space.q();
    let dxy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let den = (norm_unchecked(x, q) + norm_unchecked(y, q)).powf(p - 2.0) * norm_unchecked(&dxy, q);
    Ok(diff.dual_norm() / den)
}

/// `(|x+y|^s + |x-y|^s - 2|x|^s) / |y|^s` for `s` in `(1, 2]`.
pub fn smoothness_ratio(x: &[f64], y: &[f64], s: f64, space: &QSpace) -> Result<f64> {
    space.check(x)?;
    space.check(y)?;
    if !(s > 1.0 && s <= 2.0) {
        return Err(Error::InvalidParameter(format!("smoothness exponent s = {s} must lie in (1, 2]")));
    }
    let q = space.q();
    let ny = psi_unchecked(y, s, q);
    if ny == 0.0 {
        return Err(Error::RatioUndefined("smoothness ratio needs y != 0"));
    }
    Ok(smoothness_ratio_unchecked(x, y, s, q) )
}

fn smoothness_ratio_unchecked(x: &[f64], y: &[f64], s: f64, q: f64) -> f64 {
    let plus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let minus: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let num = psi_unchecked(&plus, s, q) + psi_unchecked(&minus, s, q) - 2.0 * psi_unchecked(x, s, q);
    num / psi_unchecked(y, s, q)
}

/// Result of the extremal search for the 2-smoothness constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProfile {
    pub q: f64,
    pub k_hat: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub witness: (Vec<f64>, Vec<f64>),
}

fn random_pair<R: Rng>(rng: &mut R, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, mut y) = match rng.random_range(0..3) {
        0 => (rng::gaussian_vector(rng, n), rng::gaussian_vector(rng, n)),
        1 => (rng::sparse_gaussian_vector(rng, n), rng::sparse_gaussian_vector(rng, n)),
        _ => (rng::sparse_gaussian_vector(rng, n), rng::gaussian_vector(rng, n)),
    };
    let scale = 10f64.powf(rng.random_range(-1.5..1.0));
    y.iter_mut().for_each(|v| *v *= scale);
    (x, y)
}

/// Smallest `|y| / |x|` visited by the hill climber. Below it the ratios are
/// dominated by cancellation in `|x+y|^s + |x-y|^s - 2|x|^s`.
const MIN_RELATIVE_Y: f64 = 0.05;

/// Coordinate hill climbing on `objective(x, y)` starting from a witness.
/// The objective is homogeneous of degree 0 in `(x, y)`, so `x` is kept at
/// unit norm.
fn hill_climb<F>(start: (Vec<f64>, Vec<f64>), best: f64, q: f64, objective: F) -> (f64, (Vec<f64>, Vec<f64>))
where
    F: Fn(&[f64], &[f64]) -> Option<f64>,
{
    let (mut x, mut y) = start;
    let nx = norm_unchecked(&x, q);
    if nx > 0.0 {
        x.iter_mut().for_each(|v| *v /= nx);
        y.iter_mut().for_each(|v| *v /= nx);
    }
    let mut best = objective(&x, &y).unwrap_or(best);
    let n = x.len();
    let mut step = 0.25;
    while step > 1e-9 {
        let mut improved = false;
        for coord in 0..2 * n {
            for sign in [1.0, -1.0] {
                let (mut cx, mut cy) = (x.clone(), y.clone());
                let scale = if coord < n { 1.0 } else { norm_unchecked(&y, q).max(1e-12) };
                let target = if coord < n { &mut cx[coord] } else { &mut cy[coord - n] };
                *target += sign * step * scale;
                let nx = norm_unchecked(&cx, q);
                if nx > 0.0 && norm_unchecked(&cy, q) < MIN_RELATIVE_Y * nx {
                    continue;
                }
                if let Some(v) = objective(&cx, &cy) {
                    if v > best * (1.0 + 1e-12) {
                        best = v;
                        x = cx;
                        y = cy;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best, (x, y))
}

/// Extremal search for the best constant `K` in
/// `|x+y|^2 + |x-y|^2 <= 2|x|^2 + K|y|^2`: random Gaussian and sparse pairs,
/// then hill climbing from the best witness. Deterministic given the seed.
pub fn estimate_smoothness_constant(space: &QSpace, seed: u64, n_samples: usize) -> Result<SmoothnessProfile> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let (n, q) = (space.dim(), space.q());
    let mut rng = rng::stream(seed, domain::GEOMETRY, 1);
    // x = 0 gives exactly 2 for every y, so K_hat >= 2 >= 1 always.
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let mut best = (2.0, (vec![0.0; n], e1));
    for _ in 0..n_samples {
        let (x, y) = random_pair(&mut rng, n);
        let ny = norm_unchecked(&y, q);
        if ny == 0.0 || ny < MIN_RELATIVE_Y * norm_unchecked(&x, q) {
            continue;
        }
        let r = smoothness_ratio_unchecked(&x, &y, 2.0, q);
        if r > best.0 {
            best = (r, (x, y));
        }
    }
    let objective = |x: &[f64], y: &[f64]| {
        (norm_unchecked(y, q) > 0.0).then(|| smoothness_ratio_unchecked(x, y, 2.0, q))
    };
    let (k_hat, witness) = hill_climb(best.1, best.0, q, objective);
    Ok(SmoothnessProfile { q, k_hat: k_hat.max(best.0), sample_count: n_samples, seed, witness })
}

/// Empirical constant for the Holder bound of `psi_p'`: maximum of
/// [`holder_ratio`] over random pairs plus hill climbing.
pub fn estimate_holder_constant(space: &QSpace, p: f64, seed: u64, n_samples: usize) -> Result<f64> {
    check_power(p)?;
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be at least 1".into()));
    }
    let n = space.dim();
    let mut rng = rng::stream(seed, domain::GEOMETRY, 2);
    type Witness = (f64, (Vec<f64>, Vec<f64>));
    let mut best: Option<Witness> = None;
    for _ in 0..n_samples {
        let (x, y) = random_pair(&mut rng, n);
        if x == y {
            continue;
        }
        let r = holder_ratio(&x, &y, p, space)?;
        if best.as_ref().is_none_or(|b| r > b.0) {
            best = Some((r, (x, y)));
        }
    }
    let Some((start_value, start)) = best else {
        return Ok(0.0);
    };
    let objective = |x: &[f64], y: &[f64]| holder_ratio(x, y, p, space).ok();
    Ok(hill_climb(start, start_value, space.q(), objective).0)
}

/// Composite Simpson rule on `[a, b]` with an odd number of nodes.
fn simpson<F: FnMut(f64) -> f64>(a: f64, b: f64, nodes: usize, f: &mut F) -> f64 {
    debug_assert!(nodes >= 3 && nodes % 2 == 1);
    let cells = nodes - 1;
    let h = (b - a) / cells as f64;
    let mut acc = f(a) + f(b);
    for k in 1..cells {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Point of `[0, 1]` where `|x + r h|` is smallest (golden-section search on
/// a convex function).
fn closest_approach(x: &[f64], h: &[f64], q: f64) -> f64 {
    let mut buf = vec![0.0; x.len()];
    let mut norm_at = |r: f64| {
        for ((b, xj), hj) in buf.iter_mut().zip(x).zip(h) {
            *b = xj + r * hj;
        }
        norm_unchecked(&buf, q)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (norm_at(c), norm_at(d));
    for _ in 0..80 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = norm_at(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = norm_at(d);
        }
    }
    0.5 * (lo + hi)
}

/// `psi_p'(z)h` is a polynomial in `z` of degree at most 3: `q = 2` with
/// `p in {2, 4}`, or `p = q = 4`.
fn cubic_integrand(p: f64, q: f64) -> bool {
    (q == 2.0 && (p == 2.0 || p == 4.0)) || (p == 4.0 && q == 4.0)
}

pub(crate) fn taylor_remainder_unchecked(x: &[f64], y: &[f64], p: f64, q: f64, quad_points: usize) -> f64 {
    let h: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    if h.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let nodes = if quad_points % 2 == 1 { quad_points.max(3) } else { quad_points + 1 };
    let base = psi_prime_apply(x, &h, p, q);
    if cubic_integrand(p, q) {
        // r -> psi'(x + rh)h is a polynomial of degree <= 3: one Simpson
        // panel is exact
        let mut z = vec![0.0; x.len()];
        let mut at = |r: f64| {
            for ((zj, xj), hj) in z.iter_mut().zip(x).zip(&h) {
                *zj = xj + r * hj;
            }
            psi_prime_apply(&z, &h, p, q) - base
        };
        return simpson(0.0, 1.0, 3, &mut at);
    }

    // psi' is only Holder continuous at the origin and, for non-even q, the
    // coordinate powers |z_j|^{q-1} lose smoothness where z_j changes sign.
    let mut breaks = vec![0.0, 1.0];
    let r_min = closest_approach(x, &h, q);
    if r_min > 0.0 && r_min < 1.0 {
        breaks.push(r_min);
        // near the origin the integrand varies on the scale of the closest
        // distance; grade the panels geometrically towards it
        let closest: Vec<f64> = x.iter().zip(&h).map(|(xj, hj)| xj + r_min * hj).collect();
        let width = norm_unchecked(&closest, q) / norm_unchecked(&h, q);
        let mut delta = width.max(1e-12);
        while delta < 1.0 {
            breaks.extend([r_min - delta, r_min + delta].into_iter().filter(|r| *r > 0.0 && *r < 1.0));
            delta *= 8.0;
        }
    }
    let even_q = q.fract() == 0.0 && (q as i64) % 2 == 0;
    if !even_q {
        for (xj, hj) in x.iter().zip(&h) {
            if *hj != 0.0 {
                let r = -xj / hj;
                if r > 0.0 && r < 1.0 {
                    breaks.push(r);
                }
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();

    let mut z = vec![0.0; x.len()];
    let mut integrand = |r: f64| {
        for ((zj, xj), hj) in z.iter_mut().zip(x).zip(&h) {
            *zj = xj + r * hj;
        }
        psi_prime_apply(&z, &h, p, q) - base
    };
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(w[0], w[1], nodes, &mut integrand))
        .sum()
}

/// First-order Taylor remainder
/// `R(x, y) = int_0^1 [psi'(x + r(y-x)) - psi'(x)](y - x) dr`,
/// by composite Simpson quadrature split at the closest approach to the
/// origin and at coordinate sign changes.
pub fn taylor_remainder(x: &[f64], y: &[f64], p: f64, quad_points: usize, space: &QSpace) -> Result<f64> {
    check_power(p)?;
    space.check(x)?;
    space.check(y)?;
    if quad_points < 2 {
        return Err(Error::InvalidParameter("quad_points must be at least 2".into()));
    }
    Ok(taylor_remainder_unchecked(x, y, p, space.q(), quad_points))
}

/// `C |x|^{p-2} |y-x|^2 + C |y-x|^p`, the majorant of `|R(x, y)|`.
pub fn two_term_bound(x: &[f64], y: &[f64], p: f64, c: f64, space: &QSpace) -> Result<f64> {
    space.check(x)?;
    space.check(y)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("constant C = {c} must be positive")));
    }
    let q = space.q();
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let nd = norm_unchecked(&d, q);
    let nx = norm_unchecked(x, q);
    Ok(c * nx.powf(p - 2.0) * nd * nd + c * nd.powf(p))
}

/// One row of the constant table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConstantRow {
    pub q: f64,
    pub p: f64,
    pub k_hat: f64,
    pub c_hat: f64,
    pub seed: u64,
    pub n_samples: usize,
}

/// Empirical smoothness and Holder constants for every `(q, p)` pair.
pub fn constant_table(dim: usize, qs: &[f64], ps: &[f64], seed: u64, n_samples: usize) -> Result<Vec<ConstantRow>> {
    let mut rows = Vec::with_capacity(qs.len() * ps.len());
    for &q in qs {
        let space = QSpace::new(dim, q)?;
        let k_hat = estimate_smoothness_constant(&space, seed, n_samples)?.k_hat;
        for &p in ps {
            let c_hat = estimate_holder_constant(&space, p, seed, n_samples)?;
            rows.push(ConstantRow { q, p, k_hat, c_hat, seed, n_samples });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp(n: usize, q: f64) -> QSpace {
        QSpace::new(n, q).unwrap()
    }

    #[test]
    fn rejects_bad_spaces() {
        assert_eq!(QSpace::new(2, 1.5), Err(Error::ExponentBelowTwo(1.5)));
        assert_eq!(QSpace::new(0, 2.0), Err(Error::ZeroDimension));
        assert!(QSpace::new(3, f64::NAN).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(q_norm(&[3.0, 4.0], &sp(2, 2.0)).unwrap(), 5.0);
        assert_eq!(q_norm(&[0.0, 0.0, 0.0], &sp(3, 3.0)).unwrap(), 0.0);
        assert_relative_eq!(q_norm(&[1.0, 1.0], &sp(2, 3.0)).unwrap(), 1.259_921_049_894_873_2, epsilon = 1e-15);
        assert!(matches!(q_norm(&[1.0], &sp(2, 2.0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norm_survives_extreme_scales() {
        let s = sp(2, 3.0);
        assert_relative_eq!(q_norm(&[1e200, 1e200], &s).unwrap(), 1e200 * 2f64.powf(1.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(q_norm(&[1e-200, 0.0], &s).unwrap(), 1e-200, max_relative = 1e-14);
    }

    #[test]
    fn dual_norm_examples() {
        let f = LinearFunctional::new(vec![3.0, 4.0], sp(2, 2.0)).unwrap();
        assert_eq!(f.dual_norm(), 5.0);
        assert_eq!(LinearFunctional::zero(sp(2, 3.0)).dual_norm(), 0.0);
        let g = LinearFunctional::new(vec![1.0, 1.0], sp(2, 4.0)).unwrap();
        assert_relative_eq!(g.dual_norm(), 2f64.powf(0.75), epsilon = 1e-15);
    }

    #[test]
    fn duality_functional_examples() {
        let f = duality_functional(&[3.0, 4.0], &sp(2, 2.0)).unwrap();
        assert_relative_eq!(f.coeffs()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(f.coeffs()[1], 0.8, epsilon = 1e-15);
        for q in [2.0, 3.0, 4.5] {
            let f = duality_functional(&[1.0, 0.0, 0.0], &sp(3, q)).unwrap();
            assert_eq!(f.coeffs(), &[1.0, 0.0, 0.0]);
        }
        let f = duality_functional(&[1.0, -1.0], &sp(2, 3.0)).unwrap();
        let c = 2f64.powf(-2.0 / 3.0);
        assert_relative_eq!(f.coeffs()[0], c, epsilon = 1e-15);
        assert_relative_eq!(f.coeffs()[1], -c, epsilon = 1e-15);
        assert_eq!(duality_functional(&[0.0, 0.0], &sp(2, 3.0)), Err(Error::DualityAtOrigin));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&[3.0, 4.0], 2.0, &sp(2, 2.0)).unwrap(), 25.0);
        assert_eq!(psi(&[0.0, 0.0], 3.0, &sp(2, 3.0)).unwrap(), 0.0);
        assert_relative_eq!(psi(&[1.0, 1.0], 4.0, &sp(2, 3.0)).unwrap(), 2f64.powf(4.0 / 3.0), epsilon = 1e-14);
        assert!(psi(&[1.0, 1.0], 1.5, &sp(2, 3.0)).is_err());
    }

    #[test]
    fn psi_prime_examples() {
        let z = psi_prime(&[0.0, 0.0], 3.0, &sp(2, 4.0)).unwrap();
        assert!(z.is_zero());
        assert_eq!(psi_prime(&[3.0, 4.0], 2.0, &sp(2, 2.0)).unwrap().coeffs(), &[6.0, 8.0]);
        let d = psi_prime(&[0.0, 1.0], 3.0, &sp(2, 2.0)).unwrap();
        assert_relative_eq!(d.coeffs()[0], 0.0);
        assert_relative_eq!(d.coeffs()[1], 3.0, epsilon = 1e-15);
        // finite-difference cross-check of the same example
        let s = sp(2, 2.0);
        let step = 1e-6;
        let fd = (psi(&[0.0, 1.0 + step], 3.0, &s).unwrap() - psi(&[0.0, 1.0 - step], 3.0, &s).unwrap()) / (2.0 * step);
        assert_relative_eq!(fd, 3.0, max_relative = 1e-8);
    }

    #[test]
    fn psi_prime_dual_norm_identity() {
        let s = sp(3, 3.0);
        let x = [0.3, -1.2, 2.0];
        let nx = q_norm(&x, &s).unwrap();
        for p in [2.0, 3.0, 4.0, 5.5] {
            let d = psi_prime(&x, p, &s).unwrap();
            assert_relative_eq!(d.dual_norm(), p * nx.powf(p - 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn holder_ratio_examples() {
        let s = sp(2, 2.0);
        assert_relative_eq!(holder_ratio(&[1.0, 2.0], &[-0.5, 0.25], 2.0, &s).unwrap(), 2.0, epsilon = 1e-14);
        for (q, p) in [(2.0, 2.0), (3.0, 3.0), (4.0, 4.0), (3.0, 5.0)] {
            let r = holder_ratio(&[0.7, -0.2], &[0.0, 0.0], p, &sp(2, q)).unwrap();
            assert_relative_eq!(r, p, max_relative = 1e-13);
        }
        // regression value: psi'(x) = 4x and 4y, |4(x-y)| / (2^2 sqrt 2) = 1
        assert_relative_eq!(holder_ratio(&[1.0, 0.0], &[0.0, 1.0], 4.0, &s).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(holder_ratio(&[1.0, 1.0], &[1.0, 1.0], 2.0, &s), Err(Error::RatioUndefined(_))));
    }

    #[test]
    fn smoothness_ratio_examples() {
        let s = sp(3, 2.0);
        assert_relative_eq!(smoothness_ratio(&[1.0, -2.0, 0.5], &[0.3, 0.1, -0.7], 2.0, &s).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(smoothness_ratio(&[0.0; 3], &[0.3, 0.1, -0.7], 2.0, &sp(3, 4.0)).unwrap(), 2.0, epsilon = 1e-14);
        assert!(smoothness_ratio(&[1.0; 3], &[0.0; 3], 2.0, &s).is_err());
        assert!(smoothness_ratio(&[1.0; 3], &[1.0; 3], 2.5, &s).is_err());
    }

    #[test]
    fn smoothness_constant_examples() {
        let p2 = estimate_smoothness_constant(&sp(3, 2.0), 11, 2000).unwrap();
        assert_relative_eq!(p2.k_hat, 2.0, epsilon = 1e-12);
        let p1 = estimate_smoothness_constant(&sp(1, 3.7), 11, 500).unwrap();
        assert_relative_eq!(p1.k_hat, 2.0, epsilon = 1e-12);
        let a = estimate_smoothness_constant(&sp(2, 3.0), 5, 5000).unwrap();
        let b = estimate_smoothness_constant(&sp(2, 3.0), 5, 5000).unwrap();
        assert_eq!(a, b);
        let (x, y) = &a.witness;
        assert_relative_eq!(smoothness_ratio(x, y, 2.0, &sp(2, 3.0)).unwrap(), a.k_hat, max_relative = 1e-12);
        assert!(a.k_hat >= 2.0);
        // never above the sharp l^q value 2(q-1)
        assert!(a.k_hat <= 4.0 + 1e-6, "{}", a.k_hat);
    }

    #[test]
    fn taylor_examples() {
        let s = sp(2, 2.0);
        assert_eq!(taylor_remainder(&[1.0, 2.0], &[1.0, 2.0], 3.0, 257, &s).unwrap(), 0.0);
        let (x, y) = ([0.4, -1.0], [2.0, 0.5]);
        let d2 = (2.0f64 - 0.4).powi(2) + 1.5f64.powi(2);
        assert_relative_eq!(taylor_remainder(&x, &y, 2.0, 3, &s).unwrap(), d2, max_relative = 1e-14);
        let r = taylor_remainder(&[1.0, 0.0], &[0.0, 1.0], 3.0, 257, &s).unwrap();
        assert!((r - 3.0).abs() <= 1e-9, "{r}");
        assert!(taylor_remainder(&x, &y, 2.0, 1, &s).is_err());
    }

    #[test]
    fn taylor_through_origin() {
        // the segment passes exactly through 0 where psi' is not smooth
        for q in [2.0, 3.0, 4.0] {
            let s = sp(2, q);
            for p in [2.0, 3.0, 4.0] {
                let (x, y) = ([-1.0, -0.5], [2.0, 1.0]);
                let exact = psi(&y, p, &s).unwrap() - psi(&x, p, &s).unwrap() - psi_prime(&x, p, &s).unwrap().apply(&[3.0, 1.5]).unwrap();
                let r = taylor_remainder(&x, &y, p, 257, &s).unwrap();
                assert!((r - exact).abs() <= 1e-9 * (1.0 + exact.abs()), "q={q} p={p}: {r} vs {exact}");
            }
        }
    }

    #[test]
    fn two_term_examples() {
        let s = sp(2, 2.0);
        assert_eq!(two_term_bound(&[1.0, 1.0], &[1.0, 1.0], 3.0, 2.0, &s).unwrap(), 0.0);
        assert_relative_eq!(two_term_bound(&[0.0, 0.0], &[3.0, 4.0], 2.0, 1.5, &s).unwrap(), 2.0 * 1.5 * 25.0, epsilon = 1e-12);
        assert_relative_eq!(two_term_bound(&[0.0, 0.0], &[3.0, 4.0], 3.0, 1.0, &s).unwrap(), 125.0, epsilon = 1e-12);
        assert_relative_eq!(
            two_term_bound(&[1.0, 0.0], &[0.0, 1.0], 3.0, 1.0, &s).unwrap(),
            2.0 + 2.0 * 2f64.sqrt(),
            epsilon = 1e-14
        );
        assert!(two_term_bound(&[1.0, 0.0], &[0.0, 1.0], 3.0, 0.0, &s).is_err());
    }

    #[test]
    fn constant_table_shape() {
        let rows = constant_table(2, &[2.0, 3.0], &[2.0, 4.0], 3, 300).unwrap();
        assert_eq!(rows.len(), 4);
        assert_relative_eq!(rows[0].c_hat, 2.0, epsilon = 1e-9);
        assert!(rows.iter().all(|r| r.c_hat.is_finite() && r.k_hat >= 1.0));
    }
}
