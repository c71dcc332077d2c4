//! HTTP/JSON session API under `/v1`.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use softbound_core::config::RunConfig;
use softbound_core::preference::FeedbackEvent;
use softbound_core::query::QuerySet;
use softbound_core::sensitivity::{ActivityCell, AdjacentCandidate};
use softbound_core::session::{FinalSummary, PosteriorSummary, Session, SessionLog, SessionStatus};
use softbound_core::Error;

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::UnknownProblem(_) => (StatusCode::NOT_FOUND, "unknown_problem"),
            Error::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            Error::FinalizationRequired => (StatusCode::CONFLICT, "finalization_required"),
            Error::Io(_) | Error::Json(_) | Error::IllConditioned(_) | Error::DegenerateReference(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "internal")
            }
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

struct Slot {
    session: Mutex<Session>,
    computing: AtomicBool,
    /// Log records already written to disk.
    persisted: Mutex<usize>,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    /// State persisting every session log under `data_dir`, if given.
    pub fn new(data_dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &data_dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self {
            sessions: RwLock::default(),
            data_dir,
        })
    }

    fn slot(&self, id: &str) -> ApiResult<Arc<Slot>> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, id: &str, slot: &Slot, log: &SessionLog) -> ApiResult<()> {
        let Some(dir) = &self.data_dir else {
            return Ok(());
        };
        let mut done = slot.persisted.lock().expect("persist lock");
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(format!("{id}.jsonl")))
            .map_err(Error::from)?;
        let fresh = SessionLog {
            records: log.records[*done..].to_vec(),
        };
        fresh.write_jsonl(BufWriter::new(file))?;
        *done = log.records.len();
        Ok(())
    }
}

/// Everything a client needs to render one round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryPayload {
    pub session_id: String,
    pub status: SessionStatus,
    pub round: usize,
    pub query: QuerySet,
    pub posterior: PosteriorSummary,
    pub units_spent: u32,
    pub units_remaining: u32,
}

fn payload(id: &str, s: &Session) -> Option<QueryPayload> {
    s.pending_query().map(|q| QueryPayload {
        session_id: id.to_string(),
        status: s.status(),
        round: s.round(),
        query: q.clone(),
        posterior: s.posterior_summary(),
        units_spent: s.units_spent(),
        units_remaining: s.units_remaining(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepResponse {
    pub session_id: String,
    pub status: SessionStatus,
    pub units_spent: u32,
    pub units_remaining: u32,
    pub finalization_required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<QueryPayload>,
}

fn step(id: &str, s: &Session) -> StepResponse {
    StepResponse {
        session_id: id.to_string(),
        status: s.status(),
        units_spent: s.units_spent(),
        units_remaining: s.units_remaining(),
        finalization_required: s.status() == SessionStatus::AwaitingFinalization,
        next: payload(id, s),
    }
}

/// Either an explicit event or the full bound set the client would like;
/// the latter must differ from the current means in at most one value.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FeedbackRequest {
    Event(FeedbackEvent),
    Bounds { soft: Vec<f64>, hard: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
pub struct FinalizeRequest {
    pub evaluation: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityPayload {
    pub session_id: String,
    pub round: usize,
    pub epsilon: f64,
    /// Indexed `[perturbed][improved]`.
    pub matrix: Vec<Vec<Option<ActivityCell>>>,
    pub adjacent: Vec<AdjacentCandidate>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/query", get(get_query))
        .route("/v1/sessions/{id}/feedback", post(submit_feedback))
        .route("/v1/sessions/{id}/finalize", post(finalize))
        .route("/v1/sessions/{id}/sensitivity", get(sensitivity))
        .with_state(state)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn create_session(State(state): State<Arc<AppState>>, Json(config): Json<RunConfig>) -> ApiResult<Response> {
    let session = blocking(move || Session::new(config).map_err(ApiError::from)).await?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let slot = Arc::new(Slot {
        session: Mutex::new(session),
        computing: AtomicBool::new(false),
        persisted: Mutex::new(0),
    });
    let body = {
        let s = slot.session.lock().expect("session lock");
        if let Some(dir) = &state.data_dir {
            let config = serde_json::to_string_pretty(s.config()).map_err(Error::from)?;
            fs::write(dir.join(format!("{id}.config.json")), config).map_err(Error::from)?;
        }
        state.persist(&id, &slot, s.log())?;
        step(&id, &s)
    };
    state
        .sessions
        .write()
        .expect("session table lock")
        .insert(id.clone(), slot);
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_query(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let slot = state.slot(&id)?;
    if slot.computing.load(Ordering::Acquire) {
        return Ok((
            StatusCode::ACCEPTED,
            Json(json!({ "session_id": id, "status": SessionStatus::Computing })),
        )
            .into_response());
    }
    let s = slot.session.lock().expect("session lock");
    match payload(&id, &s) {
        Some(p) => Ok(Json(p).into_response()),
        None => Err(ApiError::new(
            StatusCode::CONFLICT,
            "no_pending_query",
            format!("session is {:?}", s.status()),
        )),
    }
}

/// Clears the computing flag however the update ends.
struct ComputingGuard(Arc<Slot>);

impl Drop for ComputingGuard {
    fn drop(&mut self) {
        self.0.computing.store(false, Ordering::Release);
    }
}

async fn submit_feedback(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(request): Json<FeedbackRequest>,
) -> ApiResult<Json<StepResponse>> {
    let slot = state.slot(&id)?;
    if slot.computing.swap(true, Ordering::AcqRel) {
        return Err(ApiError::new(StatusCode::CONFLICT, "computing", "an update is already running"));
    }
    let guard = ComputingGuard(slot.clone());
    let worker_state = state.clone();
    blocking(move || {
        let slot = guard.0.clone();
        let mut s = slot.session.lock().expect("session lock");
        let event = match request {
            FeedbackRequest::Event(e) => e,
            FeedbackRequest::Bounds { soft, hard } => s.event_from_bounds(&soft, &hard)?,
        };
        s.submit_feedback(event)?;
        worker_state.persist(&id, &slot, s.log())?;
        drop(guard);
        Ok(Json(step(&id, &s)))
    })
    .await
}

async fn finalize(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(request): Json<FinalizeRequest>,
) -> ApiResult<Json<FinalSummary>> {
    let slot = state.slot(&id)?;
    if slot.computing.load(Ordering::Acquire) {
        return Err(ApiError::new(StatusCode::CONFLICT, "computing", "an update is running"));
    }
    let worker_state = state.clone();
    blocking(move || {
        let mut s = slot.session.lock().expect("session lock");
        let summary = s.finalize(request.evaluation)?;
        worker_state.persist(&id, &slot, s.log())?;
        Ok(Json(summary))
    })
    .await
}

async fn sensitivity(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SensitivityPayload>> {
    let slot = state.slot(&id)?;
    if slot.computing.load(Ordering::Acquire) {
        return Err(ApiError::new(StatusCode::CONFLICT, "computing", "an update is running"));
    }
    let s = slot.session.lock().expect("session lock");
    Ok(Json(SensitivityPayload {
        session_id: id,
        round: s.round(),
        epsilon: s.config().tmosh.epsilon,
        matrix: s.sensitivity(),
        adjacent: s.adjacent().to_vec(),
    }))
}
