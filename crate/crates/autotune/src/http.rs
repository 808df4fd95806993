//! JSON API under `/v1`.
//!
//! | method | path                      | body           | response        |
//! |--------|---------------------------|----------------|-----------------|
//! | POST   | /v1/jobs                  | `JobRequest`   | `Job`           |
//! | GET    | /v1/jobs/{id}             |                | `Job`           |
//! | POST   | /v1/jobs/{id}/finetune    | `FineTune`     | outcome         |
//! | POST   | /v1/jobs/{id}/accept      |                | `Accepted`      |
//! | GET    | /v1/jobs/{id}/curve       |                | `CurveView`     |
//! | GET    | /v1/health                |                | `Health`        |
//!
//! Errors are `{"code": ..., "message": ...}`.

use std::sync::Arc;

use autotune_core::finetune::FineTune;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::ingest::{parse_csv, SeriesInput};
use crate::service::Service;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobRequest {
    #[serde(default)]
    pub series: Option<SeriesInput>,
    /// Inline CSV, as an alternative to `series`.
    #[serde(default)]
    pub csv: Option<String>,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub model_version: String,
    pub model_samples: usize,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        let status = match &self {
            AppError::UnknownJob(_) => StatusCode::NOT_FOUND,
            AppError::NoFeedback(_) => StatusCode::CONFLICT,
            AppError::BadRequest(_) | AppError::Json { .. } => StatusCode::BAD_REQUEST,
            AppError::Ingest(_) | AppError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AppError::NoModel(_) => StatusCode::SERVICE_UNAVAILABLE,
            AppError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { code: self.code(), message: self.to_string() })).into_response()
    }
}

type ApiResult<T> = Result<T, AppError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(|e| AppError::BadRequest(e.body_text()))
}

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| AppError::io("worker", std::io::Error::other(e.to_string())))?
}

async fn submit(State(svc): State<Arc<Service>>, payload: Result<Json<JobRequest>, JsonRejection>) -> ApiResult<Response> {
    let req = body(payload)?;
    let series = match (req.series, req.csv) {
        (Some(s), None) => s.into_series("series")?,
        (None, Some(text)) => parse_csv(&text, "series")?,
        _ => return Err(AppError::BadRequest("give exactly one of `series` or `csv`".into())),
    };
    let job = blocking(move || svc.submit(series, req.sensitivity)).await?;
    Ok(Json(job).into_response())
}

async fn get_job(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    let bytes = svc.job_bytes(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn finetune(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    payload: Result<Json<FineTune>, JsonRejection>,
) -> ApiResult<Response> {
    let ft = body(payload)?;
    let out = blocking(move || svc.finetune(&id, &ft)).await?;
    Ok(Json(out).into_response())
}

async fn accept(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(move || svc.accept(&id)).await?).into_response())
}

async fn curve(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(move || svc.curve(&id)).await?).into_response())
}

async fn health(State(svc): State<Arc<Service>>) -> Json<Health> {
    let m = svc.scorer();
    Json(Health { status: "ok".into(), model_version: m.version.clone(), model_samples: m.meta.samples })
}

async fn not_found() -> Response {
    (StatusCode::NOT_FOUND, Json(ErrorBody { code: "not_found", message: "no such route".into() })).into_response()
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/jobs", post(submit))
        .route("/v1/jobs/{id}", get(get_job))
        .route("/v1/jobs/{id}/finetune", post(finetune))
        .route("/v1/jobs/{id}/accept", post(accept))
        .route("/v1/jobs/{id}/curve", get(curve))
        .route("/v1/health", get(health))
        .fallback(not_found)
        .with_state(svc)
}

/// Serves until ctrl-c.
pub async fn serve(svc: Arc<Service>, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
