use core::fmt;

use alloc::string::String;

/// Errors raised by the engine's value types and kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum CoreError {
    /// Tensor extents do not line up for the requested operation.
    ShapeMismatch(String),
    /// An index or split point is outside its legal range.
    OutOfBounds(String),
    /// A temporal grouping violates the partition invariant.
    InvalidGrouping(String),
    /// Non-finite value where a finite one is required.
    NonFinite(String),
    /// Empty input to an operation that requires at least one element.
    EmptyInput(String),
    /// A documented precondition was violated by the caller.
    Contract(String),
    /// Spike amplitude is not a signed power of two.
    UnsupportedAmplitude(f64),
    /// A spike train holds an amplitude outside the declared set.
    MalformedTrain(String),
    /// A model or stage configuration is internally inconsistent.
    InvalidConfig(String),
    /// A weight container entry is missing, surplus or of the wrong shape.
    WeightMismatch(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            CoreError::OutOfBounds(m) => write!(f, "out of bounds: {m}"),
            CoreError::InvalidGrouping(m) => write!(f, "invalid grouping: {m}"),
            CoreError::NonFinite(m) => write!(f, "non-finite value: {m}"),
            CoreError::EmptyInput(m) => write!(f, "empty input: {m}"),
            CoreError::Contract(m) => write!(f, "contract violation: {m}"),
            CoreError::UnsupportedAmplitude(a) => {
                write!(f, "spike amplitude {a} is not a signed power of two")
            }
            CoreError::MalformedTrain(m) => write!(f, "malformed spike train: {m}"),
            CoreError::InvalidConfig(m) => write!(f, "invalid config: {m}"),
            CoreError::WeightMismatch(m) => write!(f, "weight mismatch: {m}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, CoreError>;
