//! HTTP front end of the annotation task store.
//!
//! | method | path                   | body                                 |
//! |--------|------------------------|--------------------------------------|
//! | GET    | `/tasks?state=`        |                                      |
//! | GET    | `/tasks/next?reviewer=`|                                      |
//! | GET    | `/tasks/{id}`          |                                      |
//! | POST   | `/tasks/{id}/label`    | `{labels: [{kind, part}], filter_reason?}` |
//! | POST   | `/tasks/{id}/review`   | `{reviewer, verdict: approve\|reject}` |
//! | GET    | `/export`              | approved records as JSONL            |
//! | GET    | `/repairs/{id}`        |                                      |
//! | POST   | `/repairs/{id}/verdict`| `{reviewer, verdict}`                |
//!
//! Errors are `{"error": ...}` with 404 for unknown ids, 409 for illegal
//! transitions and 422 for malformed bodies.

use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bodyaudit_core::annotation::{TaskError, TaskStore, Verdict};
use bodyaudit_core::dataset::FilterReason;
use bodyaudit_core::AbnormalityLabel;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::args::ServeArgs;

type Shared = Arc<Mutex<TaskStore>>;

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<TaskError> for ApiError {
    fn from(e: TaskError) -> Self {
        let status = match e {
            TaskError::NotFound { .. } => StatusCode::NOT_FOUND,
            TaskError::Conflict(_) => StatusCode::CONFLICT,
            TaskError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            TaskError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

fn lock(store: &Shared) -> MutexGuard<'_, TaskStore> {
    store
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LabelBody {
    labels: Vec<AbnormalityLabel>,
    #[serde(default)]
    filter_reason: Option<FilterReason>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReviewBody {
    reviewer: String,
    verdict: Verdict,
}

#[derive(Deserialize)]
struct NextQuery {
    reviewer: Option<String>,
}

#[derive(Deserialize)]
struct ListQuery {
    state: Option<String>,
}

async fn list(State(s): State<Shared>, Query(q): Query<ListQuery>) -> Response {
    let store = lock(&s);
    let tasks: Vec<_> = store
        .tasks()
        .iter()
        .filter(|t| q.state.as_deref().is_none_or(|want| t.state.name() == want))
        .cloned()
        .collect();
    Json(json!({ "tasks": tasks })).into_response()
}

async fn next(State(s): State<Shared>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let reviewer = q.reviewer.ok_or_else(|| {
        ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            "missing `reviewer` query parameter".into(),
        )
    })?;
    let task = lock(&s).next(&reviewer, now_ms())?;
    Ok(match task {
        Some(t) => Json(t).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn task(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(lock(&s).task(&id)?.clone()).into_response())
}

async fn label(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let mut store = lock(&s);
    store.task(&id)?;
    let b: LabelBody = parse(&body)?;
    Ok(Json(store.label(&id, b.labels, b.filter_reason)?).into_response())
}

async fn review(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let mut store = lock(&s);
    store.task(&id)?;
    let b: ReviewBody = parse(&body)?;
    Ok(Json(store.review(&id, &b.reviewer, b.verdict)?).into_response())
}

async fn export(State(s): State<Shared>) -> Response {
    let body = lock(&s).export_jsonl();
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn repair(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(lock(&s).repair(&id)?.clone()).into_response())
}

async fn repair_verdict(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let mut store = lock(&s);
    store.repair(&id)?;
    let b: ReviewBody = parse(&body)?;
    Ok(Json(store.repair_verdict(&id, &b.reviewer, b.verdict)?).into_response())
}

pub fn router(store: TaskStore) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/tasks", get(list))
        .route("/tasks/next", get(next))
        .route("/tasks/{id}", get(task))
        .route("/tasks/{id}/label", post(label))
        .route("/tasks/{id}/review", post(review))
        .route("/export", get(export))
        .route("/repairs/{id}", get(repair))
        .route("/repairs/{id}/verdict", post(repair_verdict))
        .with_state(Arc::new(Mutex::new(store)))
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let store = TaskStore::open(&args.store, args.required_approvals)?;
    let app = router(store);
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        eprintln!(
            "annotation service listening on http://{}",
            listener.local_addr()?
        );
        axum::serve(listener, app)
            .await
            .context("annotation service")
    })
}
