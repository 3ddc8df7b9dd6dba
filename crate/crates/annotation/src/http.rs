//! JSON API over a [`Store`].
//!
//! ```text
//! POST /api/campaigns                       create (idempotent)
//! GET  /api/campaigns                       list ids
//! GET  /api/campaigns/{id}                  campaign definition
//! GET  /api/campaigns/{id}/next?annotator=A next task or {"task": null}
//! POST /api/campaigns/{id}/responses        submit one response
//! GET  /api/campaigns/{id}/export           responses as JSONL
//! GET  /api/campaigns/{id}/progress         counts
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::store::{CampaignSpec, Response, Store, StoreError};

pub struct ApiError(StoreError);

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        let status = match &self.0 {
            StoreError::UnknownCampaign(_) => StatusCode::NOT_FOUND,
            StoreError::UnknownTask { .. } | StoreError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            StoreError::Conflict(_) => StatusCode::CONFLICT,
            StoreError::Corrupt { .. } | StoreError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type AppState = Arc<Store>;

/// Runs blocking store work off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, StoreError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StoreError::Io(std::io::Error::other(e))))?
        .map_err(ApiError)
}

async fn create(State(store): State<AppState>, Json(spec): Json<CampaignSpec>) -> Result<HttpResponse, ApiError> {
    let (id, created) = blocking(move || store.create(spec)).await?;
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(json!({ "id": id, "created": created })).into_response()).into_response())
}

async fn list(State(store): State<AppState>) -> Json<Value> {
    Json(json!({ "campaigns": store.campaign_ids() }))
}

async fn show(State(store): State<AppState>, Path(id): Path<String>) -> Result<HttpResponse, ApiError> {
    Ok(Json(store.campaign(&id)?).into_response())
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
}

async fn next(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<NextQuery>,
) -> Result<HttpResponse, ApiError> {
    if q.annotator.is_empty() {
        return Err(StoreError::Invalid("empty annotator id".into()).into());
    }
    let task = store.next_task(&id, &q.annotator)?;
    Ok(Json(json!({ "task": task })).into_response())
}

async fn submit(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(mut body): Json<Value>,
) -> Result<HttpResponse, ApiError> {
    let kind = store.campaign(&id)?.spec.kind();
    // The timestamp is optional on the wire; zero means "server time".
    if let Value::Object(map) = &mut body {
        map.entry("timestamp").or_insert(json!(0));
    }
    let parsed = match kind {
        "bws" => serde_json::from_value(body).map(Response::Bws),
        _ => serde_json::from_value(body).map(Response::Rating),
    }
    .map_err(|e| StoreError::Invalid(format!("malformed {kind} response: {e}")))?;
    let progress = blocking(move || store.submit(&id, parsed)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "accepted": true, "progress": progress }))).into_response())
}

async fn export(State(store): State<AppState>, Path(id): Path<String>) -> Result<HttpResponse, ApiError> {
    let body = store.export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn progress(State(store): State<AppState>, Path(id): Path<String>) -> Result<HttpResponse, ApiError> {
    Ok(Json(store.progress(&id)?).into_response())
}

/// The API router; when `static_dir` is set, other paths serve files from it.
pub fn router(store: Arc<Store>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/campaigns", post(create).get(list))
        .route("/api/campaigns/{id}", get(show))
        .route("/api/campaigns/{id}/next", get(next))
        .route("/api/campaigns/{id}/responses", post(submit))
        .route("/api/campaigns/{id}/export", get(export))
        .route("/api/campaigns/{id}/progress", get(progress))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves `router` on `listener` until the process stops.
pub async fn serve(listener: tokio::net::TcpListener, router: Router) -> std::io::Result<()> {
    axum::serve(listener, router).await
}
