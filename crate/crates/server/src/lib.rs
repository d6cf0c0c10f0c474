//! HTTP front of the study sessions.
//!
//! ```text
//! POST /sessions                  create a session
//! GET  /sessions/{id}/next        next stimulus, or done
//! POST /sessions/{id}/responses   record one forced-choice response
//! GET  /sessions/{id}/results     per-block accuracy, only once complete
//! GET  /stimuli/{id}.png          stimulus image by opaque id
//! ```

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use agbench_core::study::{BlockCondition, CreateSession, SessionError, SessionManager};
use agbench_core::Error;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub type AppState = Arc<SessionManager>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseBody {
    pub stimulus_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub dataset: String,
    pub condition: BlockCondition,
    pub size: usize,
    pub allowed_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub total: usize,
    pub blocks: Vec<BlockSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

pub struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            Error::Session(e) => match e {
                SessionError::UnknownSession(_) | SessionError::UnknownStimulus(_) => (StatusCode::NOT_FOUND, "not_found"),
                SessionError::UnknownCondition(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_condition"),
                SessionError::InvalidCondition(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_condition"),
                SessionError::InvalidLabel { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_label"),
                SessionError::OutOfOrder { .. } => (StatusCode::CONFLICT, "out_of_order"),
                SessionError::Duplicate(_) => (StatusCode::CONFLICT, "duplicate"),
                SessionError::Complete => (StatusCode::CONFLICT, "complete"),
                SessionError::Incomplete => (StatusCode::CONFLICT, "incomplete"),
                SessionError::CorruptLog { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "corrupt_log"),
            },
            Error::InvalidParameter(_) => (StatusCode::BAD_REQUEST, "invalid_parameter"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!("{}", self.0);
        }
        let body = ErrorBody {
            error: code.to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Builds the API router; `ui_dir`, when given, is served for every other path.
pub fn router(manager: AppState, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_stimulus))
        .route("/sessions/{id}/responses", post(record_response))
        .route("/sessions/{id}/results", get(session_results))
        .route("/stimuli/{file}", get(stimulus_png))
        .with_state(manager);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails.
pub async fn serve(manager: AppState, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(manager, ui_dir)).await
}

async fn create_session(State(m): State<AppState>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<Created>)> {
    let session = m.create(&req)?;
    let created = Created {
        total: session.total(),
        blocks: session
            .blocks
            .iter()
            .map(|b| BlockSummary {
                dataset: b.dataset.to_string(),
                condition: b.condition,
                size: b.stimuli.len(),
                allowed_labels: b.allowed_labels.clone(),
            })
            .collect(),
        session_id: session.session_id,
    };
    Ok((StatusCode::CREATED, Json(created)))
}

async fn next_stimulus(State(m): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(m.next(&id)?))
}

async fn record_response(
    State(m): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<ResponseBody>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(m.respond(&id, &body.stimulus_id, &body.label)?))
}

async fn session_results(State(m): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(m.final_results(&id)?))
}

async fn stimulus_png(State(m): State<AppState>, Path(file): Path<String>) -> ApiResult<Response> {
    let unknown = || ApiError(SessionError::UnknownStimulus(file.clone()).into());
    let id = file.strip_suffix(".png").ok_or_else(unknown)?;
    let path = m.stimulus_path(id).ok_or_else(unknown)?.to_path_buf();
    let bytes = tokio::fs::read(&path).await.map_err(|e| {
        ApiError(Error::Io {
            path: path.clone(),
            source: e,
        })
    })?;
    Ok(([(header::CONTENT_TYPE, "image/png"), (header::CACHE_CONTROL, "no-store")], bytes).into_response())
}
