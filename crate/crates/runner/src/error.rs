use std::path::{Path, PathBuf};

use multiverse_core::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("another run holds the lock {0}")]
    Locked(PathBuf),
    #[error("interpreter `{0}` was not found on PATH")]
    InterpreterMissing(String),
    #[error("{hook} hook failed: {detail}")]
    Hook { hook: &'static str, detail: String },
    #[error("cannot load compile artifacts: {0}")]
    Artifacts(#[from] SynthError),
    #[error("null runs need a `dataset` in the config")]
    NoDataset,
    #[error("null runs need a `shuffle_column` in the config")]
    NoShuffleColumn,
    #[error("column `{column}` not found in {path}")]
    MissingColumn { column: String, path: PathBuf },
    #[error("shuffle count must be at least 1")]
    NoShuffles,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Malformed(String),
}

impl RunError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            RunError::Locked(_) => "locked",
            RunError::InterpreterMissing(_) => "interpreter-missing",
            RunError::Hook { .. } => "hook-failed",
            RunError::Artifacts(_) => "missing-artifacts",
            RunError::NoDataset | RunError::NoShuffleColumn => "null-config",
            RunError::MissingColumn { .. } => "missing-column",
            RunError::NoShuffles => "invalid-shuffles",
            RunError::Io { .. } => "io",
            RunError::Csv(_) | RunError::Json(_) | RunError::Malformed(_) => "malformed-output",
        }
    }
}
