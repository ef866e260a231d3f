use std::io;

/// Errors raised by the numerical core.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A cube, cell or function lies outside the grid it is used with.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A function evaluation produced a non-finite or inconsistent value.
    #[error("evaluation error: {0}")]
    Evaluation(String),
    /// A verifier precondition is not satisfied by the supplied inputs.
    #[error("precondition error: {0}")]
    Precondition(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn parameter(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
