use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty plane: dimensions must be at least 1x1")]
    EmptyPlane,

    #[error("quality factor {0} out of range 1..=100")]
    QualityOutOfRange(u32),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("empty dataset at {0}")]
    EmptyDataset(PathBuf),

    #[error("dataset ingestion failed:\n{}", .0.join("\n"))]
    Ingestion(Vec<String>),

    #[error("stale cache at {path}: {reason}")]
    StaleCache { path: PathBuf, reason: String },

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("malformed {kind} file {path}: {reason}")]
    Format {
        kind: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
