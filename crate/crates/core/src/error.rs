//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the signal, spectral, feature, classification,
/// evaluation and monitoring layers.
#[derive(Debug, Error)]
pub enum ArcError {
    /// A parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Input was empty or shorter than the operation requires.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Spectral power too low to evaluate a ratio descriptor; maps the
    /// non-degeneracy condition `E_f0 > eps` to an explicit failure.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// A file failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A file parsed but violated the expected format contract.
    #[error("format error: {0}")]
    Format(String),

    /// Feature vector dimension does not match what a model expects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Training or prediction failed on a structural precondition.
    #[error("model error: {0}")]
    Model(String),

    /// Configuration document was invalid.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
