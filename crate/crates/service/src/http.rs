//! HTTP/JSON routes over a shared [`Platform`].
//!
//! Tutor endpoints take `Authorization: Bearer <session token>`; admin
//! endpoints take the configured admin token the same way. Every error body
//! is `{"error": {"code", "message", "detail"?}}`.

use std::sync::{Arc, Mutex};

use apprentice_core::analytics::TermWindow;
use apprentice_core::selector::Mode;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::Deserialize;
use serde_json::json;

use crate::platform::{Platform, PlatformError};

/// Seconds a client should wait after a storage failure.
pub const RETRY_AFTER_SECS: u64 = 5;

#[derive(Clone)]
pub struct AppState {
    /// One lock serialises all mutations, and so each student's.
    pub platform: Arc<Mutex<Platform>>,
    pub admin_token: Option<String>,
}

impl AppState {
    pub fn new(platform: Platform, admin_token: Option<String>) -> Self {
        AppState {
            platform: Arc::new(Mutex::new(platform)),
            admin_token,
        }
    }

    fn with<T>(&self, f: impl FnOnce(&mut Platform) -> Result<T, PlatformError>) -> Result<T, ApiError> {
        let mut p = self.platform.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        f(&mut p).map_err(ApiError::from)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Option<serde_json::Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }
}

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        let message = e.to_string();
        match e {
            PlatformError::Unauthorized => ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", message),
            PlatformError::NoConsent => ApiError::new(StatusCode::FORBIDDEN, "no_consent", message),
            PlatformError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", message),
            PlatformError::Locked(_) => ApiError::new(StatusCode::CONFLICT, "step_locked", message),
            PlatformError::Parse(p) => ApiError {
                detail: Some(json!({
                    "position": p.position,
                    "kind": p.kind,
                    "message": p.message,
                })),
                ..ApiError::new(StatusCode::BAD_REQUEST, "parse_error", message)
            },
            PlatformError::BadRequest(_) => ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message),
            PlatformError::Storage(_) => {
                log::error!("{message}");
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "storage_unavailable", message)
            }
            PlatformError::Corrupt { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(d) = self.detail {
            error["detail"] = d;
        }
        let mut res = (self.status, Json(json!({ "error": error }))).into_response();
        if self.status == StatusCode::SERVICE_UNAVAILABLE {
            res.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(RETRY_AFTER_SECS));
        }
        res
    }
}

type ApiResult = Result<Response, ApiError>;

fn bearer(headers: &HeaderMap) -> Result<&str, ApiError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| PlatformError::Unauthorized.into())
}

fn ok<T: serde::Serialize>(status: StatusCode, body: T) -> ApiResult {
    Ok((status, Json(body)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    student_id: String,
    consent: bool,
}

async fn create_session(State(s): State<AppState>, body: Result<Json<NewSession>, JsonRejection>) -> ApiResult {
    let Json(b) = body?;
    let grant = s.with(|p| p.create_session(&b.student_id, b.consent))?;
    ok(StatusCode::CREATED, grant)
}

async fn tutors(State(s): State<AppState>, headers: HeaderMap) -> ApiResult {
    let token = bearer(&headers)?;
    let tutors = s.with(|p| p.list_catalog(token))?;
    ok(StatusCode::OK, json!({ "tutors": tutors }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRequest {
    #[serde(default = "adaptive")]
    mode: Mode,
    #[serde(default)]
    problem_type: Option<String>,
}

fn adaptive() -> Mode {
    Mode::Adaptive
}

async fn new_problem(
    State(s): State<AppState>,
    headers: HeaderMap,
    Path(tutor): Path<String>,
    body: Result<Json<ProblemRequest>, JsonRejection>,
) -> ApiResult {
    let token = bearer(&headers)?;
    let Json(b) = body?;
    let created = s.with(|p| p.new_problem(token, &tutor, b.mode, b.problem_type))?;
    ok(StatusCode::CREATED, created)
}

async fn get_problem(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    let token = bearer(&headers)?;
    ok(StatusCode::OK, s.with(|p| p.problem(token, &id))?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AttemptRequest {
    input: String,
}

async fn attempt(
    State(s): State<AppState>,
    headers: HeaderMap,
    Path((id, slot)): Path<(String, String)>,
    body: Result<Json<AttemptRequest>, JsonRejection>,
) -> ApiResult {
    let token = bearer(&headers)?;
    let Json(b) = body?;
    ok(StatusCode::OK, s.with(|p| p.attempt(token, &id, &slot, &b.input))?)
}

async fn hint(State(s): State<AppState>, headers: HeaderMap, Path((id, slot)): Path<(String, String)>) -> ApiResult {
    let token = bearer(&headers)?;
    ok(StatusCode::OK, s.with(|p| p.hint(token, &id, &slot))?)
}

async fn done(State(s): State<AppState>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult {
    let token = bearer(&headers)?;
    ok(StatusCode::OK, s.with(|p| p.done(token, &id))?)
}

async fn mastery(State(s): State<AppState>, headers: HeaderMap) -> ApiResult {
    let token = bearer(&headers)?;
    let (student_id, kcs) = s.with(|p| p.mastery_report(token))?;
    ok(StatusCode::OK, json!({ "student_id": student_id, "mastery": kcs }))
}

#[derive(Deserialize)]
struct FunnelQuery {
    from: NaiveDate,
    to: NaiveDate,
    roster: u64,
}

async fn funnel(State(s): State<AppState>, headers: HeaderMap, query: Result<Query<FunnelQuery>, QueryRejection>) -> ApiResult {
    let token = bearer(&headers)?;
    if s.admin_token.as_deref() != Some(token) {
        return Err(PlatformError::Unauthorized.into());
    }
    let Query(q) = query?;
    if q.from > q.to {
        return Err(PlatformError::BadRequest("`from` must not be after `to`".into()).into());
    }
    let window = TermWindow {
        cycle: 0,
        term: format!("{}..{}", q.from, q.to),
        start: q.from,
        end: q.to,
        roster: q.roster,
        classes_deployed: None,
    };
    ok(StatusCode::OK, s.with(|p| p.funnel(&window))?)
}

async fn health() -> ApiResult {
    ok(StatusCode::OK, json!({ "status": "ok" }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/tutors", get(tutors))
        .route("/api/tutors/{tutor}/problems", post(new_problem))
        .route("/api/problems/{id}", get(get_problem))
        .route("/api/problems/{id}/steps/{slot}/attempts", post(attempt))
        .route("/api/problems/{id}/steps/{slot}/hints", post(hint))
        .route("/api/problems/{id}/done", post(done))
        .route("/api/profile/mastery", get(mastery))
        .route("/api/admin/funnel", get(funnel))
        .fallback(fallback)
        .with_state(state)
}
