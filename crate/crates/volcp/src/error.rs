//! Crate-wide error type.
//!
//! Errors fall into two buckets that the CLI maps onto exit codes: problems
//! with what the caller handed us (`Input`, `Io`) and problems that arise
//! from the numbers themselves (`Numeric`), such as non-finite observations
//! or a hazard model whose support has been exhausted.

use std::fmt;

/// Error type for all fallible operations in this crate.
#[derive(Debug)]
pub enum Error {
    /// Malformed or inconsistent caller input: bad files, invalid
    /// hyperparameters, out-of-range queries.
    Input(String),
    /// Numeric failure at run time: non-finite values, degenerate weights,
    /// exhausted hazard support, quantiles outside f64 range.
    Numeric(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// True for errors caused by caller input rather than runtime numerics.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Input(_) | Error::Io(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(msg) => write!(f, "invalid input: {msg}"),
            Error::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
