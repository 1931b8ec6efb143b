use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
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

    #[error("normalization rules invalid: {0}")]
    Rules(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("aggregation error: {0}")]
    Aggregation(String),

    #[error("contingency table error: {0}")]
    Table(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("clustering error: {0}")]
    Cluster(String),

    #[error("tracking error: {0}")]
    Track(String),

    #[error("unknown term {term:?}; nearest vocabulary entries: {}", suggestions.join(", "))]
    UnknownTerm {
        term: String,
        suggestions: Vec<String>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
