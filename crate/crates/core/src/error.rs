use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("geometry domain error: source at ({angle} rad, {range}) coincides with element at {position}")]
    Domain { angle: f64, range: f64, position: f64 },

    #[error("ambiguous subspace split: eigenvalues {signal} and {noise} at the signal/noise boundary are within 1e-8 relative")]
    DegenerateSubspace { signal: f64, noise: f64 },

    #[error("under-resolved spectrum: expected {expected} peaks, found {}", found.len())]
    UnderResolved { expected: usize, found: Vec<f64> },

    #[error("Fisher information matrix is singular")]
    SingularFisher,

    #[error("scenario validation failed:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("malformed snapshot file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
