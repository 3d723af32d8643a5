use thiserror::Error;

use crate::sgd::TrainLog;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {last_estimate})")]
    IterationLimit { iterations: usize, last_estimate: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid teacher: {0}")]
    InvalidTeacher(String),

    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("step size condition violated: alpha = {alpha} must be below 2/(N L) = {limit}")]
    ConditionViolated { alpha: f64, limit: f64 },

    #[error("SGD diverged at iteration {iteration}")]
    Divergence { iteration: usize, log: Box<TrainLog> },
}
