//! Monte-Carlo experiments: each one simulates an ensemble of trajectories,
//! estimates both sides of an inequality with batched standard errors and
//! records the smallest constant that makes it hold.

mod config;
mod experiments;
mod family;
mod report;
mod sim;
mod stats;
mod suite;

pub use config::{
    shifted_random_matrix, ConfigDocument, ExperimentConfig, ExperimentConfigOf, ExperimentKind, GeneratorSpec, OneOrMany,
    RecipeSpec, Role, CERT_TIMES, DEFAULT_GAMMA_SAMPLES,
};
pub use experiments::{
    run_burkholder, run_drift_bound, run_experiment, run_ito_convergence, run_lenglart, run_maximal, run_remainder_bound,
    run_yosida, SimCache,
};
pub use family::{fit_families, fit_remainder};
pub use report::{Check, EstimateReport, FamilyReport, Samples, Stat};
pub use sim::{Sample, Simulator, ROTATION_TABLE};
pub use stats::{batched, excess, quantile, root_ratio, Estimate};
pub use suite::{run_configs, Failure, SuiteOutcome};
