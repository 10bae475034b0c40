use thiserror::Error;

/// Exit code 2 for anything the caller got wrong, 1 when a computed result
/// breaks a proven invariant.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qbounds::Error),
    #[error("invariant violation: {0}")]
    Violation(String),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Core(qbounds::Error::InvariantViolation(_))
            | CliError::Core(qbounds::Error::ConvergenceFailure) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Io(_) => 2,
        }
    }
}
