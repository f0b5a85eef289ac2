use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed trace {path}: {reason}")]
    Trace { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] pdcbo_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn trace(path: &Path, reason: impl Into<String>) -> Self {
        BenchError::Trace { path: path.to_path_buf(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
