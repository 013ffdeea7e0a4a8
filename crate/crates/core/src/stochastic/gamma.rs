//! The gamma-norm of an operator `T: R^d -> (R^n, |.|_q)`:
//! `|T|_gamma^2 = E |T g|_q^2` with `g` standard Gaussian on `R^d`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, QSpace};
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaMethod {
    /// Squared Frobenius norm; only valid when `q = 2`.
    Exact2,
    /// Sample mean over `samples` Gaussian vectors drawn from `seed`.
    Mc { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// A reusable gamma-norm evaluator. The Monte-Carlo variant draws its
/// Gaussian sample once and reuses it for every operator (common random
/// numbers), so `|RT|_gamma <= |T|_gamma` holds exactly whenever `R` is a
/// contraction of `l^q`.
#[derive(Debug, Clone)]
pub struct GammaNorm {
    method: GammaMethod,
    space: QSpace,
    d: usize,
    /// `d x samples`.
    samples: Option<DMatrix<f64>>,
}

impl GammaNorm {
    pub fn new(method: GammaMethod, space: QSpace, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("noise dimension d must be at least 1".into()));
        }
        let samples = match method {
            GammaMethod::Exact2 => {
                if space.q() != 2.0 {
                    return Err(Error::InvalidParameter(format!(
                        "exact gamma norm needs q = 2, got q = {}",
                        space.q()
                    )));
                }
                None
            }
            GammaMethod::Mc { samples, seed } => {
                if samples < 2 {
                    return Err(Error::InvalidParameter("Monte-Carlo gamma norm needs at least 2 samples".into()));
                }
                let mut r = rng::stream(seed, domain::GAMMA, d as u64);
                Some(DMatrix::from_fn(d, samples, |_, _| r.sample::<f64, _>(StandardNormal)))
            }
        };
        Ok(Self { method, space, d, samples })
    }

    pub fn method(&self) -> GammaMethod {
        self.method
    }

    pub fn space(&self) -> QSpace {
        self.space
    }

    pub fn noise_dim(&self) -> usize {
        self.d
    }

    fn check(&self, block: &DMatrix<f64>) -> Result<()> {
        if block.nrows() != self.space.dim() || block.ncols() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim() * self.d,
                actual: block.nrows() * block.ncols(),
            });
        }
        Ok(())
    }

    pub fn estimate(&self, block: &DMatrix<f64>) -> Result<GammaEstimate> {
        self.check(block)?;
        match &self.samples {
            None => Ok(GammaEstimate { value: block.norm_squared(), std_error: 0.0 }),
            Some(samples) => {
                let images = block * samples;
                let q = self.space.q();
                let values: Vec<f64> =
                    images.column_iter().map(|c| geometry::psi_unchecked(c.as_slice(), 2.0, q)).collect();
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                Ok(GammaEstimate { value: mean, std_error: (var / n).sqrt() })
            }
        }
    }

    pub fn norm_sq(&self, block: &DMatrix<f64>) -> Result<f64> {
        Ok(self.estimate(block)?.value)
    }

    /// `|T g|_q^2` for one Gaussian vector `g`; used by independent checks.
    pub fn image_norm_sq(&self, block: &DMatrix<f64>, g: &[f64]) -> Result<f64> {
        self.check(block)?;
        let v = block * DVector::from_column_slice(g);
        Ok(geometry::psi_unchecked(v.as_slice(), 2.0, self.space.q()))
    }
}

/// One-shot form of [`GammaNorm::estimate`].
pub fn gamma_norm_sq(block: &DMatrix<f64>, space: QSpace, method: GammaMethod) -> Result<GammaEstimate> {
    GammaNorm::new(method, space, block.ncols().max(1))?.estimate(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact2_is_frobenius() {
        let s = QSpace::new(2, 2.0).unwrap();
        let t = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let e = gamma_norm_sq(&t, s, GammaMethod::Exact2).unwrap();
        assert_relative_eq!(e.value, 1.0 + 4.0 + 0.25 + 9.0 + 1.0, epsilon = 1e-14);
        assert_eq!(e.std_error, 0.0);
        assert!(gamma_norm_sq(&t, QSpace::new(2, 3.0).unwrap(), GammaMethod::Exact2).is_err());
    }

    #[test]
    fn zero_operator() {
        let s = QSpace::new(3, 4.0).unwrap();
        let e = gamma_norm_sq(&DMatrix::zeros(3, 2), s, GammaMethod::Mc { samples: 100, seed: 1 }).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn mc_agrees_with_frobenius_at_q2() {
        let s = QSpace::new(2, 2.0).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
        let mc = gamma_norm_sq(&t, s, GammaMethod::Mc { samples: 200_000, seed: 4 }).unwrap();
        let exact = t.norm_squared();
        assert!((mc.value - exact).abs() < 4.0 * mc.std_error, "{} vs {exact} (se {})", mc.value, mc.std_error);
    }

    #[test]
    fn common_samples_make_contractions_exact() {
        let s = QSpace::new(2, 3.0).unwrap();
        let g = GammaNorm::new(GammaMethod::Mc { samples: 1000, seed: 8 }, s, 2).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
        let shrink = DMatrix::from_diagonal(&nalgebra::dvector![0.9, 0.2]);
        assert!(g.norm_sq(&(&shrink * &t)).unwrap() <= g.norm_sq(&t).unwrap());
        assert!(g.norm_sq(&DMatrix::zeros(3, 2)).is_err());
    }
}
