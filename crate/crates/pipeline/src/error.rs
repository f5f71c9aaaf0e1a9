use std::path::PathBuf;

use thiserror::Error;

/// Errors that abort a pipeline command. Per-entry failures are collected in
/// the command's summary instead.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Core(#[from] depthsynth_core::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.into(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Core(e) => e.code(),
            PipelineError::Config(_) => "ConfigError",
            PipelineError::EmptyDataset(_) => "EmptyDataset",
            PipelineError::Io { .. } => "IoError",
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
