use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry in input")]
    NonFiniteInput,
    #[error("eigensolver failed to converge")]
    ConvergenceFailure,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("expected exactly {expected} states, got {got}")]
    ArityError { expected: usize, got: usize },
    #[error("normalization error: {0}")]
    NormalizationError(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
