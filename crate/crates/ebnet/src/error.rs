use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Two objects that must live on the same space do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A factor index or basis label is outside its range.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A matrix fails a structural requirement (shape, hermiticity, trace, ...).
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// A density matrix fails one of its invariants.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A Kraus family is not trace preserving within tolerance.
    #[error("channel not trace preserving: deviation {0:.3e}")]
    NotTracePreserving(f64),

    /// An operation requires a pure state and the argument is mixed.
    #[error("state is not pure: purity {0}")]
    NotPure(f64),

    /// A scalar parameter is outside its admissible range.
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    /// A probability vector fails normalization or positivity.
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    /// A rate computation is undefined for the given parameters.
    #[error("undefined quantity: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
