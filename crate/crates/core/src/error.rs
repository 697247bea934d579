use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
///
/// The variants map onto the exit-code classes of the command line harness:
/// [`Error::Domain`] is a validation problem, [`Error::Numerical`] and the
/// estimator errors are numerical failures, [`Error::Capability`] means the
/// requested operation is not available for the given input size or data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("degenerate subspace: {0}")]
    DegenerateSubspace(String),
    #[error("inconsistent estimate: {0}")]
    InconsistentEstimate(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn capability(msg: impl Into<String>) -> Self {
        Error::Capability(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
