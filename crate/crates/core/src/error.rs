use std::path::PathBuf;

use thiserror::Error;

use crate::solvers::FitTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {len} centers")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("ill-conditioned system ({0}); use a positive ridge parameter eta")]
    IllConditioned(String),

    #[error("energy became non-finite at iteration {iteration}")]
    Divergence { iteration: usize, trace: Box<FitTrace> },

    #[error("lagged iteration failed to converge: weight change grew for {streak} consecutive iterations (stopped at iteration {iteration})")]
    NonConvergence { iteration: usize, streak: usize, trace: Box<FitTrace> },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unrecognized model file: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),

    #[error("grid search failed: every grid point failed ({failed} points)")]
    GridExhausted { failed: usize },

    #[error("manifest: {0}")]
    Manifest(String),
}

impl Error {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonFinite { .. } => "non-finite",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::IllConditioned(_) => "ill-conditioned",
            Error::Divergence { .. } => "divergence",
            Error::NonConvergence { .. } => "non-convergence",
            Error::InvalidDataset(_) => "invalid-dataset",
            Error::Parse { .. } => "parse",
            Error::ModelFormat(_) => "model-format",
            Error::Io { .. } | Error::Stream(_) => "io",
            Error::GridExhausted { .. } => "grid-exhausted",
            Error::Manifest(_) => "manifest",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
