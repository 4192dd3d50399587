//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A parameter is outside its documented range.
    InvalidArgument(String),
    /// An entry has probability zero but a value different from the node
    /// center, so no unbiased encoding exists.
    UnbiasednessViolation { node: usize, coord: usize },
    /// The encoded vector cannot be serialized under the requested format.
    IncompatibleFormat(String),
    /// A bit stream ended before the requested number of bits was read.
    Truncated { needed: usize, available: usize },
    /// A wire message does not parse under its declared format.
    Malformed(String),
    /// Vectors of different dimensions were mixed.
    DimensionMismatch { expected: usize, got: usize },
    Io(std::io::Error),
    Parse(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::UnbiasednessViolation { node, coord } => write!(
                f,
                "probability 0 at node {node}, coordinate {coord} but value differs from center"
            ),
            Error::IncompatibleFormat(msg) => write!(f, "incompatible wire format: {msg}"),
            Error::Truncated { needed, available } => {
                write!(f, "truncated stream: needed {needed} bits, {available} left")
            }
            Error::Malformed(msg) => write!(f, "malformed message: {msg}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
