use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every engine in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request would exceed an enumeration or memory cap.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    /// An iterative numeric method failed or produced a degenerate result.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// The parameters sit in a regime where the requested formula has no meaning.
    #[error("regime error: {0}")]
    Regime(String),
    /// `alpha` is too close to one of the regime thresholds.
    #[error("alpha = {alpha} lies within {tolerance} of threshold {threshold}")]
    Boundary {
        alpha: f64,
        threshold: f64,
        tolerance: f64,
    },
    /// A truncated series did not reach the requested tail tolerance.
    #[error("truncation error: {0}")]
    Truncation(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Resource(_) => "resource",
            Error::Numeric(_) => "numeric",
            Error::Regime(_) => "regime",
            Error::Boundary { .. } => "boundary",
            Error::Truncation(_) => "truncation",
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Regime(_) | Error::Boundary { .. } => 2,
            Error::Resource(_) => 3,
            Error::Numeric(_) | Error::Truncation(_) => 4,
        }
    }
}
