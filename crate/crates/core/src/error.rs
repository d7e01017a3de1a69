use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in the toolkit.
///
/// Variants fall into three families which the CLI maps onto exit codes:
/// invalid input or metadata ([`ErrorClass::Data`]), numerically degenerate
/// data ([`ErrorClass::Numeric`]), and I/O or file-format failures
/// ([`ErrorClass::Data`] as well, since they mean the input cannot be used).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("metadata mismatch: {0}")]
    Metadata(String),

    #[error("plane fit needs at least 3 valid pixels, frame {frame} has {valid}")]
    DegenerateFit { frame: usize, valid: usize },

    #[error("temporal standard deviation is zero at pixel (y={y}, x={x})")]
    ZeroSigma { y: usize, x: usize },

    #[error("spatial PSD is not positive at bin (ky={ky}, kx={kx}): {value}")]
    NonPositivePsd { ky: usize, kx: usize, value: f64 },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 8], found: Vec<u8> },

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("trailing data: expected {expected} bytes, found {actual}")]
    TrailingData { expected: u64, actual: u64 },

    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),

    #[error("dimensions {ny}x{nx}x{nt} overflow a 64-bit byte count")]
    DimensionOverflow { ny: u64, nx: u64, nt: u64 },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data, metadata, or file contents.
    Data,
    /// The data is well-formed but numerically degenerate.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DegenerateFit { .. }
            | Error::ZeroSigma { .. }
            | Error::NonPositivePsd { .. }
            | Error::Degenerate(_) => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
