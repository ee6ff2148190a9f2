use thiserror::Error;

/// Errors raised by the library. Numeric failures, malformed input and
/// configuration problems all end up here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported algebra `{0}` (expected sl(n) or gl(n) with n >= 2)")]
    UnsupportedAlgebra(String),

    #[error("degree {degree} is not one more than an exponent of {algebra}")]
    NotAnExponent { algebra: String, degree: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("index ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular values cluster at the threshold {tol:e} (nearest ratio {nearest:e})")]
    ToleranceAmbiguity { tol: f64, nearest: f64 },

    #[error("bounds mismatch: computed {computed}, predicted {predicted}")]
    BoundsMismatch { computed: String, predicted: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
