//! Error type shared by the IO layer and the CLI, with a fixed mapping to
//! process exit codes.

use gemst_core::CoreError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model or run configuration problems (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// Weight file problems: format, missing entries, shape conflicts (exit 3).
    #[error("weight error: {0}")]
    Weights(String),
    /// Input data problems: image files, CIFAR batches (exit 4).
    #[error("input error: {0}")]
    Input(String),
    /// Verification failures (exit 1).
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Core(CoreError),
}

impl From<CoreError> for Error {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_) => Error::Config(e.to_string()),
            CoreError::WeightMismatch(_) => Error::Weights(e.to_string()),
            other => Error::Core(other),
        }
    }
}

impl Error {
    /// Process exit code for this error per the CLI contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Weights(_) => 3,
            Error::Input(_) => 4,
            Error::Verify(_) => 1,
            Error::Io(_) | Error::Core(_) => 1,
        }
    }
}
