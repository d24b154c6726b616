use std::path::PathBuf;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use multiverse_stats::StatsError;

/// Failure to load an output directory or to start listening.
#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("{} is missing {}; run `multiverse compile` and `multiverse run` first", dir.display(), files.join(", "))]
    MissingArtifacts { dir: PathBuf, files: Vec<String> },
    #[error(transparent)]
    Run(#[from] multiverse_runner::RunError),
    #[error(transparent)]
    Artifacts(#[from] multiverse_core::SynthError),
    #[error("{}: {source}", path.display())]
    Summary {
        path: PathBuf,
        source: multiverse_core::summary::SummaryError,
    },
    #[error("{0}")]
    Malformed(String),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

impl ServerError {
    pub fn code(&self) -> &'static str {
        match self {
            ServerError::MissingArtifacts { .. } => "missing-artifacts",
            ServerError::Run(e) => e.code(),
            ServerError::Artifacts(_) => "artifacts",
            ServerError::Summary { .. } | ServerError::Malformed(_) => "malformed-artifacts",
            ServerError::Io(_) => "io",
        }
    }
}

/// An error response: `{"error": code, "message": text}` with an HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", message)
    }

    pub fn locked() -> Self {
        Self::new(
            StatusCode::LOCKED,
            "inference-locked",
            "exploration is closed for this session because inference has been entered",
        )
    }

    pub fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> Self {
        let code = match e {
            StatsError::NoDraws => "no-draws",
            StatsError::InvalidInput(_) | StatsError::NonFinite { .. } => "invalid-input",
            StatsError::UnknownUniverse(_) => "unknown-universe",
            StatsError::EmptySelection => "empty-selection",
            StatsError::EmptyAfterPruning { .. } => "empty-after-pruning",
        };
        Self::unprocessable(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}
