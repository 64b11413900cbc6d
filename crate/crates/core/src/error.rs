use thiserror::Error;

pub type Result<T, E = WgsError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WgsError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested object would exceed a configured size cap.
    #[error("resource error: {what} needs {requested}, cap is {cap}")]
    Resource {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A detector found no transition in the scanned range.
    #[error("no transition detected: {0}")]
    NoTransition(String),
}

impl WgsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        WgsError::Domain(msg.into())
    }
}
