//! Error type shared across the crate.

use thiserror::Error;

/// Errors reported by fallible toolkit operations.
///
/// Operations that enumerate exponentially large objects fail fast with
/// [`Error::CapacityExceeded`] instead of exhausting memory; parse errors
/// carry the 1-based line number of the offending input line.
#[derive(Debug, Error)]
pub enum Error {
    /// Field characteristic outside the supported set {2, 3, 5}.
    #[error("unsupported field characteristic {0} (supported: 2, 3, 5)")]
    UnsupportedField(u64),

    /// Mismatched dimensions or field parameters between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A requested enumeration or table would exceed the configured capacity.
    #[error("capacity exceeded: {what} requires {needed} > limit {limit}")]
    CapacityExceeded {
        what: String,
        needed: u128,
        limit: u128,
    },

    /// Function values fall outside the declared range.
    #[error("range violation: {0}")]
    Range(String),

    /// An affine map expected to be injective is not.
    #[error("affine map is not injective: {0}")]
    NotInjective(String),

    /// An invalid uniformity-norm order (d must be >= 1).
    #[error("invalid norm order {0} (order must be >= 1)")]
    InvalidOrder(usize),

    /// A factor pair that was required to be a refinement is not.
    #[error("not a refinement: {0}")]
    NotARefinement(String),

    /// A function required to be constant on factor atoms is not.
    #[error("function is not measurable with respect to the factor: {0}")]
    NotMeasurable(String),

    /// Transfer endpoints whose polynomial degree/depth sequences disagree.
    #[error("factor signature mismatch: {0}")]
    SignatureMismatch(String),

    /// Malformed textual input, with the 1-based line it occurred on.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Invalid configuration values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON serialization failure.
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenient result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn dim(message: impl Into<String>) -> Self {
        Error::Dimension(message.into())
    }

    pub(crate) fn capacity(what: impl Into<String>, needed: u128, limit: u128) -> Self {
        Error::CapacityExceeded {
            what: what.into(),
            needed,
            limit,
        }
    }
}
