use thiserror::Error;

/// Errors raised by the simulator and bounds engine.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the admissible parameter domain.
    #[error("{0}")]
    Parameter(String),
    /// A domain object violates one of its structural invariants.
    #[error("constraint violated: {0}")]
    Constraint(String),
    /// The operation is undefined for the given object (e.g. a single-codeword codebook).
    #[error("{0}")]
    Domain(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
