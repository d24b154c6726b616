//! JSON API over a compiled and executed multiverse.
//!
//! Artifacts are read once at startup. The only mutable state is the session:
//! an optional prune cutoff and whether inference has been entered. Once
//! entered, exploration endpoints answer `423 Locked` until the process exits.

pub mod api;
mod artifacts;
mod error;
pub mod inference;

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::http::{header, HeaderValue, Method};
use axum::response::Html;
use axum::routing::{any, get, post};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

pub use artifacts::Artifacts;
pub use error::{ApiError, ServerError};
pub use inference::{InferenceBundle, InferenceRequest, Mode, Weighting};

const INDEX_HTML: &str = include_str!("index.html");

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Session {
    pub cutoff: Option<f64>,
    /// Never reset once set.
    pub inference_entered: bool,
}

#[derive(Debug)]
pub struct AppState {
    pub artifacts: Artifacts,
    session: RwLock<Session>,
}

impl AppState {
    pub fn new(artifacts: Artifacts) -> Arc<Self> {
        Arc::new(AppState {
            artifacts,
            session: RwLock::new(Session::default()),
        })
    }

    pub fn load(out_dir: &Path) -> Result<Arc<Self>, ServerError> {
        Ok(Self::new(Artifacts::load(out_dir)?))
    }

    pub fn session(&self) -> RwLockReadGuard<'_, Session> {
        self.session.read().unwrap_or_else(|e| e.into_inner())
    }

    fn session_mut(&self) -> RwLockWriteGuard<'_, Session> {
        self.session.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Read access for exploration endpoints, refused after inference entry.
    fn explore(&self) -> Result<RwLockReadGuard<'_, Session>, ApiError> {
        let s = self.session();
        if s.inference_entered {
            return Err(ApiError::locked());
        }
        Ok(s)
    }
}

/// Whether a CORS origin names the local machine.
fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(o) = origin.to_str() else { return false };
    let Some(rest) = o.strip_prefix("http://").or_else(|| o.strip_prefix("https://")) else {
        return false;
    };
    let host = if let Some(v6) = rest.strip_prefix('[') {
        match v6.split_once(']') {
            Some((h, tail)) if tail.is_empty() || tail.starts_with(':') => h,
            _ => return false,
        }
    } else {
        rest.split(':').next().unwrap_or("")
    };
    matches!(host, "localhost" | "127.0.0.1" | "::1")
}

/// All API routes plus the UI: files from `ui_dir` if given, otherwise a
/// built-in index page.
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|o, _| is_local_origin(o)))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]);
    let app = Router::new()
        .route("/api/graph", get(api::graph))
        .route("/api/outcomes", get(api::outcomes))
        .route("/api/density", get(api::density))
        .route("/api/curves", get(api::curves))
        .route("/api/facet", get(api::facet))
        .route("/api/universe/{uid}", get(api::universe))
        .route("/api/sensitivity", get(api::sensitivity_scores))
        .route("/api/session", get(api::session))
        .route("/api/brush", post(api::brush))
        .route("/api/prune", post(api::prune_cutoff))
        .route("/api/inference", post(api::enter_inference))
        .route("/api/{*rest}", any(api::not_found))
        .with_state(state);
    let app = match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX_HTML) })),
    };
    app.layer(cors)
}

/// Serves until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, app: Router) -> Result<(), ServerError> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_origins() {
        for o in ["http://localhost", "http://localhost:5173", "http://127.0.0.1:8080", "http://[::1]:3000"] {
            assert!(is_local_origin(&HeaderValue::from_static(o)), "{o}");
        }
        for o in [
            "http://example.com",
            "http://localhost.evil.com",
            "http://127.0.0.1.nip.io",
            "file://localhost",
            "null",
        ] {
            assert!(!is_local_origin(&HeaderValue::from_static(o)), "{o}");
        }
    }
}
