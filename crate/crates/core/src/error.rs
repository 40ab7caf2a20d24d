use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed schema descriptor: {0}")]
    MalformedSchema(#[from] serde_json::Error),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: column `{column}` not found in header")]
    MissingColumn { path: PathBuf, column: String },

    #[error("invalid database: {0}")]
    InvalidDatabase(String),

    #[error("unknown relationship type `{0}`")]
    UnknownRelationship(String),

    #[error("pattern has {0} node(s); maximality is only defined for two or more")]
    PatternTooSmall(usize),

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error(
        "model fit for `{relationship}` did not converge after {iterations} sweeps \
         (worst margin residual {residual:e})"
    )]
    NoConvergence {
        relationship: String,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
