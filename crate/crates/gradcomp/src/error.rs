//! Error types shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit, grouped by failure class so callers
/// (notably the CLI) can map them to distinct exit codes.
#[derive(Debug)]
pub enum Error {
    /// A distribution or format parameter is outside its domain.
    Parameter(String),
    /// Caller-supplied data violates an operation's contract.
    Input(String),
    /// Distribution fitting failed (degenerate data or non-convergence).
    Fit(String),
    /// Codebook construction or symbol coverage failed.
    Coding(String),
    /// Encoded data is damaged or inconsistent; carries a bit or byte offset
    /// when one is known.
    Corruption { offset: Option<u64>, message: String },
    /// A container or blob file violates its wire format at `offset`.
    Format { offset: u64, message: String },
    /// A benchmark config file could not be parsed.
    Config(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl Error {
    pub(crate) fn corruption(message: impl Into<String>) -> Self {
        Error::Corruption { offset: None, message: message.into() }
    }

    pub(crate) fn corruption_at(offset: u64, message: impl Into<String>) -> Self {
        Error::Corruption { offset: Some(offset), message: message.into() }
    }

    pub(crate) fn format_at(offset: u64, message: impl Into<String>) -> Self {
        Error::Format { offset, message: message.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Input(msg) => write!(f, "input error: {msg}"),
            Error::Fit(msg) => write!(f, "fit error: {msg}"),
            Error::Coding(msg) => write!(f, "coding error: {msg}"),
            Error::Corruption { offset: Some(off), message } => {
                write!(f, "corruption at bit/byte offset {off}: {message}")
            }
            Error::Corruption { offset: None, message } => {
                write!(f, "corruption: {message}")
            }
            Error::Format { offset, message } => {
                write!(f, "format error at byte {offset}: {message}")
            }
            Error::Config(msg) => write!(f, "config error: {msg}"),
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
