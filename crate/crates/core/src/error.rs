use thiserror::Error;

/// Errors raised by the procedures in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdrError {
    /// An argument lies outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An event was submitted that the state machine cannot accept in its current state.
    #[error("invalid state: {0}")]
    State(String),
    /// Bookkeeping counters disagree with the raw decision log.
    #[error("internal consistency violated: {0}")]
    Consistency(String),
    /// A runtime FDP-hat invariant was violated.
    #[error("invariant violated at step {step}: estimate {estimate} exceeds alpha {alpha}")]
    Invariant { step: usize, estimate: f64, alpha: f64 },
    /// Reading or writing a file failed.
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = FdrError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> FdrError {
    FdrError::InvalidArgument(msg.into())
}
