use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent q = {0} is not admitted: only 2-smooth spaces (q >= 2) are supported")]
    ExponentBelowTwo(f64),
    #[error("space dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("duality functional undefined at origin")]
    DualityAtOrigin,
    #[error("ratio undefined: {0}")]
    RatioUndefined(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("generator rejected: {reason} (witness x = {witness:?}, t = {t}, margin = {margin:e})")]
    CertificationFailed {
        reason: &'static str,
        witness: Vec<f64>,
        t: f64,
        margin: f64,
    },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("partition is not nested in the simulation grid: {0}")]
    PartitionNotNested(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("experiment aborted: {0}")]
    Aborted(String),
}
