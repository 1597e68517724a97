use std::path::PathBuf;

/// Errors raised across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("ingestion error at frame {frame}: {reason}")]
    Ingest { frame: usize, reason: String },

    #[error("sequencing error: expected edge field for t={expected}, got t={got}")]
    Sequencing { expected: usize, got: usize },

    #[error("not ready: {consumed} edge fields consumed, path length {k} needs {k}")]
    NotReady { consumed: usize, k: usize },

    #[error("capability not enabled: {0}")]
    Capability(&'static str),

    #[error("enumeration refused: {paths:.3e} paths exceeds the limit of {limit:.0e}")]
    GuardExceeded { paths: f64, limit: f64 },

    #[error(
        "degenerate segmentation: all {states} states exceed the lower detection limit {limit}; use a larger limit"
    )]
    DegenerateSegmentation { states: usize, limit: f64 },

    #[error("insufficient samples for {class}: {have} < {need}")]
    Insufficient {
        class: String,
        have: usize,
        need: usize,
    },

    #[error("scene error: {0}")]
    Scene(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
