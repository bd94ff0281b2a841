use std::path::PathBuf;
use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violated a contract (shape, finiteness, emptiness).
    #[error("validation error: {0}")]
    Validation(String),

    /// A configuration value or combination is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// Dataset ingestion failed; `report` lists the offending files.
    #[error("ingestion error: {message}")]
    Ingest { message: String, report: Vec<String> },

    /// Training diverged; carries enough context to reproduce.
    #[error("training aborted: non-finite loss at epoch {epoch}, batch {batch_index} (lr={learning_rate})")]
    NanLoss {
        epoch: usize,
        batch_index: usize,
        learning_rate: f64,
    },

    /// Checkpoint file is unreadable, truncated, or from a different format version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Pretrained weights were requested but are not present in the cache.
    #[error(
        "pretrained weights for '{backbone}' not found in {search_dir}; \
         place a weight checkpoint named '{backbone}.weights' there \
         (set {env_var} to change the cache directory) or build with pretrained = false"
    )]
    PretrainedWeightsUnavailable {
        backbone: String,
        search_dir: PathBuf,
        env_var: &'static str,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
