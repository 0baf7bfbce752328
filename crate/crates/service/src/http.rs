use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::search::{parse_search_request, ApiError, Scope, SearchService};
use crate::{ServiceConfig, ServiceError, SCHEMA_VERSION};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "schema_version": SCHEMA_VERSION, "error": self.to_string() }))).into_response()
    }
}

async fn health(State(svc): State<Arc<SearchService>>) -> Response {
    Json(svc.health()).into_response()
}

async fn search(State(svc): State<Arc<SearchService>>, body: Bytes) -> Result<Response, ApiError> {
    let req = parse_search_request(&body, svc.k_max())?;
    tracing::debug!(scope = %req.scope, k = req.k, hydrate = req.hydrate, "search");
    Ok(Json(svc.search(req).await?).into_response())
}

#[derive(Debug, Deserialize)]
struct RecordQuery {
    scope: Option<String>,
}

async fn record(
    State(svc): State<Arc<SearchService>>,
    Path(key): Path<String>,
    Query(q): Query<RecordQuery>,
) -> Result<Response, ApiError> {
    let scope = match q.scope.as_deref() {
        Some(s) => s.parse::<Scope>().map_err(ApiError::NotFound)?,
        None => Scope::Captions,
    };
    match svc.fetch_record_async(scope, key.clone()).await? {
        Some(record) => Ok(Json(json!({ "schema_version": SCHEMA_VERSION, "scope": scope, "key": key, "record": record }))
            .into_response()),
        None => Err(ApiError::NotFound(format!("no {scope} record `{key}`"))),
    }
}

async fn metrics(State(svc): State<Arc<SearchService>>) -> Response {
    Json(svc.metrics()).into_response()
}

pub fn router(svc: Arc<SearchService>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", post(search))
        .route("/record/{key}", get(record))
        .route("/metrics", get(metrics))
        .with_state(svc)
}

/// A running server. Dropping the handle leaves the server running until the
/// runtime shuts down; call [`ServiceHandle::shutdown`] to stop it.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    pub service: Arc<SearchService>,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServiceHandle {
    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.task.await.map_err(std::io::Error::other)?
    }

    /// Wait until the server stops on its own.
    pub async fn wait(self) -> std::io::Result<()> {
        self.task.await.map_err(std::io::Error::other)?
    }
}

/// Load indices, bind, and start serving in the background.
pub async fn serve(config: &ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    let cfg = config.clone();
    let svc = tokio::task::spawn_blocking(move || SearchService::load(&cfg))
        .await
        .map_err(|e| ServiceError::IndexLoad(e.to_string()))??;
    serve_with(Arc::new(svc), &config.bind).await
}

/// Serve an already loaded service.
pub async fn serve_with(svc: Arc<SearchService>, bind: &str) -> Result<ServiceHandle, ServiceError> {
    let bind_err = |e: std::io::Error| ServiceError::Bind { addr: bind.to_string(), message: e.to_string() };
    let listener = TcpListener::bind(bind).await.map_err(bind_err)?;
    let addr = listener.local_addr().map_err(bind_err)?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(Arc::clone(&svc));
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "search service listening");
    Ok(ServiceHandle { addr, service: svc, stop: Some(tx), task })
}
