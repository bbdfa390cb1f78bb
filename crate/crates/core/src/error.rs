use thiserror::Error;

/// Errors surfaced by the library and the CLI harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LadeError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("archive is empty")]
    EmptyArchive,
}

/// Raised when the evaluation budget is spent. The run loop treats it as
/// its normal termination path.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("function evaluation budget exhausted")]
pub struct BudgetExhausted;

pub type Result<T, E = LadeError> = std::result::Result<T, E>;
