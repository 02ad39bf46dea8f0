//! Crate-wide error type and result alias.

use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the pipeline stages.
///
/// The CLI maps variants onto stable process exit codes, so the variant split
/// mirrors the failure classes callers need to tell apart: configuration,
/// I/O, taxonomy coverage, and missing pipeline artifacts.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed PGM input; `offset` is the byte position of the defect.
    #[error("malformed PGM at byte {offset}: {reason}")]
    PgmParse { offset: usize, reason: String },

    /// A label map pixel holds a category id absent from the registry.
    #[error("unknown category {id} at pixel (row {row}, col {col})")]
    UnknownCategory { id: u8, row: usize, col: usize },

    /// A category is covered by neither keep, merge, nor drop.
    #[error("taxonomy does not cover category {id}")]
    TaxonomyCoverage { id: u8 },

    /// An argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Incompatible tensor or grid shapes.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Scene geometry that the tracer cannot handle.
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    /// Bad or inconsistent configuration values.
    #[error("config error: {0}")]
    Config(String),

    /// Inconsistent dataset contents (e.g. mixed matrix dims).
    #[error("dataset error: {0}")]
    Dataset(String),

    /// A required pipeline artifact is absent on disk.
    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    /// An I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
