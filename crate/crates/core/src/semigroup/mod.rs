//! Contraction semigroups `e^{tA}` on `(R^n, |.|_q)`.
//!
//! A [`Generator`] is only constructed after it has been certified as the
//! generator of a contraction semigroup: by construction for nonpositive
//! diagonal matrices, by sampling otherwise.

mod expm;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, QSpace};
use crate::rng::{self, domain};

pub use expm::expm;

/// Absolute slack (scaled by the relevant norm) for every certificate.
pub const CERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// Nonpositive diagonal: `|e^{tA}x|_q <= |x|_q` coordinatewise.
    Diagonal,
    /// Dissipativity and semigroup norm checked on samples.
    Sampled {
        samples: usize,
        times: Vec<f64>,
        /// Largest normalized dissipativity margin `psi_2'(x)(Ax) / |x|^2`.
        worst_dissipativity: f64,
        /// Largest observed `|e^{tA}x| / |x| - 1`.
        worst_growth: f64,
    },
}

pub struct Generator {
    matrix: DMatrix<f64>,
    space: QSpace,
    certificate: Certificate,
    cache: RwLock<HashMap<u64, Arc<DMatrix<f64>>>>,
}

impl Clone for Generator {
    fn clone(&self) -> Self {
        Self {
            matrix: self.matrix.clone(),
            space: self.space,
            certificate: self.certificate.clone(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl std::fmt::Debug for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Generator")
            .field("matrix", &self.matrix)
            .field("space", &self.space)
            .field("certificate", &self.certificate)
            .finish()
    }
}

/// `e^{tA}` for one fixed `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupOperator {
    pub matrix: DMatrix<f64>,
    pub t: f64,
}

impl SemigroupOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

/// `A = diag(lambdas)` with every `lambda_j <= 0`; certified by construction.
pub fn diagonal_generator(lambdas: &[f64], space: QSpace) -> Result<Generator> {
    space.check(lambdas)?;
    if let Some((j, l)) = lambdas.iter().enumerate().find(|(_, l)| !(**l <= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "diagonal generator entry lambda[{j}] = {l} must be <= 0"
        )));
    }
    Ok(Generator {
        matrix: DMatrix::from_diagonal(&DVector::from_column_slice(lambdas)),
        space,
        certificate: Certificate::Diagonal,
        cache: RwLock::new(HashMap::new()),
    })
}

/// Deterministic probes followed by random ones: basis vectors, pairwise
/// sums and differences, then Gaussian and sparse Gaussian vectors.
fn probe_vectors(n: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(samples + n * n);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        out.push(e);
    }
    for i in 0..n {
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v[j] = s;
                out.push(v);
            }
        }
    }
    let mut r = rng::stream(seed, domain::CERTIFY, 0);
    for k in 0..samples {
        if k % 2 == 0 {
            out.push(rng::gaussian_vector(&mut r, n));
        } else {
            out.push(rng::sparse_gaussian_vector(&mut r, n));
        }
    }
    out
}

/// Lower estimate of the `q -> q` operator norm of `m`: best ratio over
/// random starts refined by Boyd's power iteration for `l^q` norms.
pub fn operator_norm_estimate(m: &DMatrix<f64>, q: f64, starts: usize, seed: u64) -> f64 {
    let n = m.ncols();
    let candidates = probe_vectors(n, starts, seed);
    let ratio = |x: &[f64]| {
        let nx = geometry::norm_unchecked(x, q);
        if nx == 0.0 {
            return 0.0;
        }
        let y = m * DVector::from_column_slice(x);
        geometry::norm_unchecked(y.as_slice(), q) / nx
    };
    let mut scored: Vec<(f64, &Vec<f64>)> = candidates.iter().map(|x| (ratio(x), x)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored.first().map_or(0.0, |s| s.0);
    let qd = q / (q - 1.0);
    for (start_ratio, start) in scored.iter().take(8) {
        let mut x = DVector::from_column_slice(start);
        let mut prev = *start_ratio;
        for _ in 0..200 {
            let y = m * &x;
            let ny = geometry::norm_unchecked(y.as_slice(), q);
            if ny == 0.0 {
                break;
            }
            // dual vector of y, pulled back by m^T, then mapped back into l^q
            let fy = y.map(|v| (v / ny).abs().powf(q - 1.0).copysign(v));
            let z = m.transpose() * fy;
            let nz = geometry::norm_unchecked(z.as_slice(), qd);
            if nz == 0.0 {
                break;
            }
            x = z.map(|v| (v / nz).abs().powf(qd - 1.0).copysign(v));
            let r = ratio(x.as_slice());
            best = best.max(r);
            if r <= prev * (1.0 + 1e-14) {
                break;
            }
            prev = r;
        }
    }
    best
}

/// Certify `matrix` as a contraction generator on `space` by sampling
/// dissipativity at `cert_samples` probe vectors and the semigroup norm at
/// every time in `cert_times`. Fails with the first violating witness.
pub fn general_generator(
    matrix: DMatrix<f64>,
    space: QSpace,
    cert_samples: usize,
    cert_times: &[f64],
    seed: u64,
) -> Result<Generator> {
    let n = space.dim();
    if matrix.nrows() != n || matrix.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: matrix.nrows().max(matrix.ncols()) });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("generator has non-finite entries".into()));
    }
    let q = space.q();
    let probes = probe_vectors(n, cert_samples, seed);
    let mut worst_dissipativity = f64::NEG_INFINITY;
    for x in &probes {
        let nx2 = geometry::psi_unchecked(x, 2.0, q);
        if nx2 == 0.0 {
            continue;
        }
        let ax = &matrix * DVector::from_column_slice(x);
        let margin = geometry::psi_prime_apply(x, ax.as_slice(), 2.0, q);
        if margin > CERT_TOL * (1.0 + nx2) {
            return Err(Error::CertificationFailed {
                reason: "dissipativity psi'(x)(Ax) > 0",
                witness: x.clone(),
                t: 0.0,
                margin,
            });
        }
        worst_dissipativity = worst_dissipativity.max(margin / nx2);
    }
    let mut worst_growth = f64::NEG_INFINITY;
    for &t in cert_times {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let e = expm(&(&matrix * t))?;
        for x in &probes {
            let nx = geometry::norm_unchecked(x, q);
            if nx == 0.0 {
                continue;
            }
            let ex = &e * DVector::from_column_slice(x);
            let growth = geometry::norm_unchecked(ex.as_slice(), q) / nx - 1.0;
            if growth > CERT_TOL {
                return Err(Error::CertificationFailed {
                    reason: "semigroup expands |e^{tA}x| > |x|",
                    witness: x.clone(),
                    t,
                    margin: growth,
                });
            }
            worst_growth = worst_growth.max(growth);
        }
        let refined = operator_norm_estimate(&e, q, 0, seed) - 1.0;
        if refined > CERT_TOL {
            return Err(Error::CertificationFailed {
                reason: "semigroup operator norm exceeds 1",
                witness: Vec::new(),
                t,
                margin: refined,
            });
        }
        worst_growth = worst_growth.max(refined);
    }
    Ok(Generator {
        matrix,
        space,
        certificate: Certificate::Sampled { samples: probes.len(), times: cert_times.to_vec(), worst_dissipativity, worst_growth },
        cache: RwLock::new(HashMap::new()),
    })
}

impl Generator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn space(&self) -> QSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|v| *v == 0.0)
    }

    /// `e^{tA}` by scaling and squaring.
    pub fn exp_at(&self, t: f64) -> Result<SemigroupOperator> {
        Ok(SemigroupOperator { matrix: (*self.propagator(t)?).clone(), t })
    }

    /// Shared, memoized `e^{tA}`. Readers never block each other; a miss
    /// computes outside the lock and inserts once.
    pub fn propagator(&self, t: f64) -> Result<Arc<DMatrix<f64>>> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().expect("exponential cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let m = Arc::new(expm(&(&self.matrix * t))?);
        let mut cache = self.cache.write().expect("exponential cache poisoned");
        Ok(Arc::clone(cache.entry(key).or_insert(m)))
    }

    /// The Yosida approximant `m (mI - A)^{-1}`.
    pub fn yosida_resolvent(&self, m: u64) -> Result<DMatrix<f64>> {
        if m == 0 {
            return Err(Error::InvalidParameter("resolvent index m must be >= 1".into()));
        }
        let n = self.dim();
        let mf = m as f64;
        let shifted = DMatrix::<f64>::identity(n, n) * mf - &self.matrix;
        let rhs = DMatrix::<f64>::identity(n, n) * mf;
        shifted
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("mI - A is singular for m = {m}")))
    }

    /// `psi_p'(x)(Ax)`, nonpositive for contraction generators.
    pub fn dissipativity_margin(&self, x: &[f64], p: f64) -> Result<f64> {
        let d = geometry::psi_prime(x, p, &self.space)?;
        let ax = &self.matrix * DVector::from_column_slice(x);
        d.apply(ax.as_slice())
    }
}

/// Free-function form of [`Generator::exp_at`].
pub fn exp_at(a: &Generator, t: f64) -> Result<SemigroupOperator> {
    a.exp_at(t)
}

/// Free-function form of [`Generator::yosida_resolvent`].
pub fn yosida_resolvent(a: &Generator, m: u64) -> Result<DMatrix<f64>> {
    a.yosida_resolvent(m)
}

/// Free-function form of [`Generator::dissipativity_margin`].
pub fn dissipativity_margin(a: &Generator, x: &[f64], p: f64) -> Result<f64> {
    a.dissipativity_margin(x, p)
}

/// Random nonpositive diagonal entries in `[lo, 0]`; handy for sweeps.
pub fn random_diagonal<R: Rng>(rng: &mut R, n: usize, lo: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=0.0)).collect()
}
