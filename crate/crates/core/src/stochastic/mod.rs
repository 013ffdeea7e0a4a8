//! Grid-level stochastic calculus: Brownian increments, adapted step
//! processes, the gamma-norm, stochastic integrals and convolutions, and the
//! discrete Ito expansion.

mod gamma;
mod grid;
mod ito;
mod noise;
mod paths;
mod process;
mod stopping;

pub use gamma::{gamma_norm_sq, GammaEstimate, GammaMethod, GammaNorm};
pub use grid::TimeGrid;
pub use ito::{ito_decomposition, ItoDecomposition, DEFAULT_QUAD_POINTS};
pub use noise::{sample_noise, NoisePath, NoisePrefix};
pub use paths::{
    constant_drift, convolve, convolve_adapted, drifted_path, simple_integral, PathEnsemble, Provenance, Trajectory,
};
pub use process::{integrability_stat, Drift, Integrand, OperatorBlock, SignedPermutation, StepProcess};
pub use stopping::{apply_stopping, StoppingRule};
