use thiserror::Error;

/// Errors produced by the core library.
///
/// `Infeasible` is kept apart from the input errors: it is a correct answer
/// (the requested compensation cannot be achieved), not a malformed request.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate extraction at step {step}: |P_0| = {p0:e}, |Q_0| = {q0:e}")]
    DegenerateExtraction { step: usize, p0: f64, q0: f64 },

    #[error("uncontrollable system: controllability rank {rank} < {dim}")]
    Uncontrollable { rank: usize, dim: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
