use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid angle: {0}")]
    InvalidAngle(String),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("pattern is identically zero")]
    ZeroPattern,
    #[error("patterns were sampled on different grids")]
    GridMismatch,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("feature {0} has zero variance")]
    ZeroVariance(usize),
    #[error("codebook has not been calibrated")]
    Uncalibrated,
    #[error("missing forward cache; run a train-mode forward pass first")]
    MissingCache,
    #[error("unsupported model file: {0}")]
    ModelFormat(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag, used by the CLI error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidAngle(_) => "invalid_angle",
            Error::InvalidGeometry(_) => "invalid_geometry",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroPattern => "zero_pattern",
            Error::GridMismatch => "grid_mismatch",
            Error::Empty(_) => "empty_input",
            Error::ZeroVariance(_) => "zero_variance",
            Error::Uncalibrated => "uncalibrated_codebook",
            Error::MissingCache => "missing_cache",
            Error::ModelFormat(_) => "model_format",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
