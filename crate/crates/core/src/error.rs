use thiserror::Error;

/// Errors raised by the model, analysis, exact-chain and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must describe the same chain disagree.
    #[error("inconsistent inputs: {0}")]
    Inconsistency(String),

    /// An identity or oracle check failed.
    #[error("verification failed: {0}")]
    Verification(String),

    /// An iteration budget ran out before the stopping condition was met.
    #[error("cap of {cap} steps exceeded (distance at cap: {distance:.6e})")]
    CapExceeded { cap: u64, distance: f64 },

    /// The request is valid but outside what the operation supports.
    #[error("refused: {0}")]
    Refused(String),

    /// Too few usable points for a fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
