use thiserror::Error;

/// Errors reported by the library.
///
/// `Domain` covers precondition violations (bad grids, mismatched fields,
/// incompatible backends); `Computation` covers numerical failures such as
/// eigensolver non-convergence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("computational error: {0}")]
    Computation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn computation(msg: impl Into<String>) -> Self {
        Error::Computation(msg.into())
    }
}
