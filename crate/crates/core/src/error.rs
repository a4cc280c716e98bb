use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The input is well-formed but does not meet an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A truncated computation lost more mass than allowed; raise the cap.
    #[error("truncation error: {0}")]
    Truncation(String),
    /// A numerical certificate did not hold.
    #[error("certification failed: {0}")]
    Certification(String),
    /// The requested computation exceeds the configured budget.
    #[error("resource guard: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
