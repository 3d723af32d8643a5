use crate::config::ConfigError;
use crate::idx::IdxError;
use crate::output::OutputError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{step}: {source}")]
    Step { step: String, source: gradconf::Error },
    #[error("{step}: diverged at iteration {iteration}")]
    Divergence { step: String, iteration: usize },
    #[error(transparent)]
    Idx(#[from] IdxError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(ConfigError::Read { .. }) => EXIT_IO,
            HarnessError::Config(_) => EXIT_CONFIG,
            HarnessError::Step { source, .. } => match source {
                gradconf::Error::Divergence { .. } | gradconf::Error::NonFinite(_) => EXIT_DIVERGENCE,
                _ => EXIT_CONFIG,
            },
            HarnessError::Divergence { .. } => EXIT_DIVERGENCE,
            HarnessError::Idx(IdxError::Dataset(_)) => EXIT_CONFIG,
            HarnessError::Idx(_) | HarnessError::Output(_) => EXIT_IO,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Attaches the recipe step to a library error.
pub trait StepContext<T> {
    fn step(self, step: &str) -> Result<T>;
}

impl<T> StepContext<T> for gradconf::Result<T> {
    fn step(self, step: &str) -> Result<T> {
        self.map_err(|source| HarnessError::Step { step: step.to_string(), source })
    }
}
