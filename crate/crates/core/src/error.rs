use thiserror::Error;

/// Errors raised by the library. The CLI maps every variant to exit status 2
/// except [`CoreError::Verification`], which maps to 1.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),
    /// An operation was called outside its domain (e.g. a non signature-1 embedding).
    #[error("domain error: {0}")]
    Domain(String),
    /// The stratum violates the properness assumption or is otherwise unusable.
    #[error("stratum error: {0}")]
    Stratum(String),
    /// Two Picard classes (or a class and a relation set) belong to different data.
    #[error("datum mismatch between operands")]
    DatumMismatch,
    /// A precondition on the weight tuple failed; carries the violated constraints.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The sparse system has no solution (single chosen label with empty gap range).
    #[error("degenerate sparse system: {0}")]
    Degenerate(String),
    #[error("singular matrix")]
    Singular,
    /// A linear system is inconsistent or underdetermined.
    #[error("unsolvable linear system: {0}")]
    Unsolvable(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
