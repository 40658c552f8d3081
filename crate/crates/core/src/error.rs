//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// Invalid configuration or window specification. Maps to exit code 2.
    #[error("config error: {0}")]
    Config(String),

    /// Duplicate (date, ticker) observation in the input data.
    #[error("duplicate observation for ticker {ticker} on {date}")]
    DuplicateObservation { ticker: String, date: String },

    /// No usable data survived ingestion or filtering.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// A precondition on an operation's input was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An asset has zero sample variance, which breaks correlation and
    /// inverse-variance weighting.
    #[error("zero variance for ticker {ticker}")]
    ZeroVariance { ticker: String },

    /// A return series has zero volatility, so the Sharpe ratio is undefined.
    #[error("zero volatility: {0}")]
    ZeroVolatility(String),

    /// Covariance matrix is singular or too ill-conditioned to invert.
    #[error("ill-conditioned covariance matrix (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    /// A linkage tree references node ids inconsistently.
    #[error("malformed linkage tree: {0}")]
    MalformedTree(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// A pipeline stage failed; wraps the stage name for one-line diagnostics.
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Whether this error is a configuration/validation problem (CLI exit
    /// code 2) rather than a runtime failure (exit code 1).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }

    /// Attach a pipeline stage name for diagnostics.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
