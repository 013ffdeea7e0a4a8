//! Numerical laboratory for stochastic convolutions in finite-dimensional
//! `l^q` spaces.
//!
//! The crate is split into four layers:
//!
//! * [`geometry`]: norms, duality functionals, the power functions
//!   `psi_p(x) = |x|^p` with their derivatives, smoothness ratios and the
//!   first-order Taylor remainder.
//! * [`semigroup`]: dissipative generators, matrix exponentials, resolvents.
//! * [`stochastic`]: time grids, Brownian increments, step processes,
//!   stochastic integrals and convolutions, Ito decompositions.
//! * [`lab`]: Monte-Carlo experiments estimating the constants of the
//!   maximal, Burkholder, remainder, Lenglart and drift inequalities.

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod lab;
pub mod rng;
pub mod semigroup;
pub mod stochastic;

pub use error::{Error, Result};
pub use geometry::{LinearFunctional, QSpace};
