//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Precondition
//! violations (bad dimensions, out-of-range indices, invalid parameters) are
//! reported as errors rather than panics so that callers driving the library
//! from configuration files get a diagnosable failure.

use thiserror::Error;

/// Errors produced by the measurement, statistics and coding layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or signal had a different length than the operator expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A 1-based row or component index was outside `1..=n`.
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    /// A transform order is not supported by the requested kind.
    #[error("unsupported transform order {n}: {reason}")]
    UnsupportedOrder { n: usize, reason: &'static str },

    /// A scalar or configuration parameter violated its documented range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A quantity is undefined for the given input (for example a spread
    /// ratio of a constant vector).
    #[error("undefined quantity: {0}")]
    Undefined(String),

    /// A random-convolution mixture came out with a non-negligible
    /// imaginary part, indicating a broken conjugate-symmetric draw.
    #[error("random convolution output not real: max |imag| = {max_imag:e} exceeds {limit:e}")]
    NotReal { max_imag: f64, limit: f64 },

    /// Iterative quantizer design did not converge within the iteration cap.
    #[error("Lloyd-Max did not converge after {iterations} iterations (max centroid move {last_move:e})")]
    NonConvergence { iterations: usize, last_move: f64 },

    /// A bitstream failed structural validation.
    #[error("bitstream format error: {0}")]
    Format(String),

    /// Encoder and decoder disagreed on the reconstructed quantizer set.
    #[error("model self-check mismatch: header hash {expected:#018x}, derived {got:#018x}")]
    SelfCheckMismatch { expected: u64, got: u64 },

    /// A codeword index was outside the quantizer alphabet.
    #[error("codeword {codeword} outside alphabet of size {alphabet}")]
    BadCodeword { codeword: u32, alphabet: u32 },

    /// The requested configuration is not supported for the given mode.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InvalidParameter`].
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
