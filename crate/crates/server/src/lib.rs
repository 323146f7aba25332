//! Local HTTP/JSON service around the flattening pipeline.
//!
//! Meshes are uploaded once and addressed by an opaque id. A flatten job
//! runs on the blocking pool against its own handle to the stored mesh and
//! is polled through `/mesh/{id}/status`; its deformed mesh and distortion
//! report are stored beside, never over, the original.

pub mod store;
pub mod wire;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lmap::extrinsic::embedded_curvature;
use lmap::{DistortionReport, Error, ErrorClass, ExtrinsicFlow, MeshStats, RoiSelection, RunConfig, RunReport};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use store::{ErrorBody, JobState, JobStatus, SessionStore};
use wire::{parse_upload, MeshJson, Overlay};

const BODY_LIMIT: usize = 512 * 1024 * 1024;

#[derive(Debug)]
pub enum ApiError {
    Malformed(String),
    NotFound(String),
    Conflict(String),
    Rejected(Error),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e.class() {
            ErrorClass::Io => ApiError::Malformed(e.to_string()),
            _ => ApiError::Rejected(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, class, message) = match self {
            ApiError::Malformed(m) => (StatusCode::BAD_REQUEST, "malformed", m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, "conflict", m),
            ApiError::Rejected(e) => {
                let body = ErrorBody::from(&e);
                return (StatusCode::UNPROCESSABLE_ENTITY, Json(json!({ "error": body }))).into_response();
            }
        };
        (status, Json(json!({ "error": { "class": class, "message": message } }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn unknown(id: &str) -> ApiError {
    ApiError::NotFound(format!("no mesh with id {id}"))
}

fn parse_json<'a, T: Deserialize<'a>>(body: &'a [u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::Malformed(e.to_string()))
}

pub fn router(store: SessionStore) -> Router {
    Router::new()
        .route("/mesh", post(upload))
        .route("/mesh/{id}", get(mesh))
        .route("/mesh/{id}/curvature", get(curvature))
        .route("/mesh/{id}/roi", post(roi))
        .route("/mesh/{id}/flatten", post(flatten))
        .route("/mesh/{id}/status", get(status))
        .route("/mesh/{id}/result", get(result))
        .route("/mesh/{id}/metrics", get(metrics))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(store)
}

#[derive(Serialize)]
struct Uploaded {
    id: String,
    #[serde(flatten)]
    stats: MeshStats,
}

async fn upload(State(store): State<SessionStore>, body: Bytes) -> ApiResult<(StatusCode, Json<Uploaded>)> {
    let mesh = parse_upload(&body)?;
    let stats = MeshStats::new(&mesh)?;
    let id = store.insert(mesh);
    Ok((StatusCode::CREATED, Json(Uploaded { id, stats })))
}

fn stored_mesh(store: &SessionStore, id: &str) -> ApiResult<Arc<lmap::TriangleMesh>> {
    store.lock().get(id).map(|s| s.mesh.clone()).ok_or_else(|| unknown(id))
}

async fn mesh(State(store): State<SessionStore>, Path(id): Path<String>) -> ApiResult<Json<MeshJson>> {
    Ok(Json(MeshJson::from(&*stored_mesh(&store, &id)?)))
}

async fn curvature(State(store): State<SessionStore>, Path(id): Path<String>) -> ApiResult<Json<Overlay>> {
    let mesh = stored_mesh(&store, &id)?;
    let field = embedded_curvature(&mesh)?;
    Ok(Json(Overlay {
        name: "curvature".into(),
        values: field.values,
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoiBody {
    vertices: Vec<usize>,
}

#[derive(Serialize)]
struct RoiCounts {
    interior_count: usize,
    rim_count: usize,
}

async fn roi(State(store): State<SessionStore>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<RoiCounts>> {
    let RoiBody { vertices } = parse_json(&body)?;
    let mesh = stored_mesh(&store, &id)?;
    let roi = RoiSelection::new(&mesh, vertices)?;
    let counts = RoiCounts {
        interior_count: roi.interior().len(),
        rim_count: roi.rim().len(),
    };
    let mut sessions = store.lock();
    let session = sessions.get_mut(&id).ok_or_else(|| unknown(&id))?;
    if session.job.as_ref().is_some_and(|j| j.state.is_active()) {
        return Err(ApiError::Conflict("a flatten job is running on this mesh".into()));
    }
    session.roi = Some(roi);
    Ok(Json(counts))
}

async fn flatten(
    State(store): State<SessionStore>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let config: RunConfig = if body.iter().all(u8::is_ascii_whitespace) {
        RunConfig::default()
    } else {
        parse_json(&body)?
    };
    let (mesh, stored_roi, active) = {
        let sessions = store.lock();
        let s = sessions.get(&id).ok_or_else(|| unknown(&id))?;
        (s.mesh.clone(), s.roi.clone(), s.job.as_ref().is_some_and(|j| j.state.is_active()))
    };
    if active {
        return Err(ApiError::Conflict("a flatten job is already running on this mesh".into()));
    }
    config.validate()?;
    let roi = match (config.ball(&mesh)?, stored_roi) {
        (Some(ball), _) => ball,
        (None, Some(roi)) => roi,
        (None, None) => return Err(Error::InvalidRoi("no ROI submitted and no seed/radius given".into()).into()),
    };
    // rejects empty or interior-free selections before anything is queued
    let flow = ExtrinsicFlow::new(&mesh, &roi, config.extrinsic())?;

    let (job, status) = {
        let mut sessions = store.lock();
        let s = sessions.get_mut(&id).ok_or_else(|| unknown(&id))?;
        if s.job.as_ref().is_some_and(|j| j.state.is_active()) {
            return Err(ApiError::Conflict("a flatten job is already running on this mesh".into()));
        }
        let job = s.begin_job();
        (job, s.job.clone())
    };
    tokio::task::spawn_blocking(move || run_job(store, id, job, flow, config));
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": status }))))
}

fn run_job(store: SessionStore, id: String, job: u64, mut flow: ExtrinsicFlow, config: RunConfig) {
    let advance = |state: JobState| {
        if let Some(s) = store.lock().get_mut(&id) {
            s.advance(job, state);
        }
    };
    advance(JobState::Running);
    let outcome = (|| {
        while !flow.is_done() {
            flow.step()?;
        }
        let result = flow.finish();
        let report = RunReport::new(config, &result, true)?;
        let metrics = DistortionReport::for_roi(&result.original, &result.mesh, &result.roi)?;
        Ok::<_, Error>((result.mesh, report, metrics))
    })();
    match outcome {
        Ok((mesh, report, metrics)) => {
            let mut sessions = store.lock();
            if let Some(s) = sessions.get_mut(&id).filter(|s| s.job.as_ref().is_some_and(|j| j.id == job)) {
                s.result = Some(Arc::new(mesh));
                s.metrics = Some(Arc::new(metrics));
                s.advance(
                    job,
                    JobState::Done {
                        report: Box::new(report),
                    },
                );
            }
        }
        Err(e) => advance(JobState::Failed {
            error: ErrorBody::from(&e),
        }),
    }
}

async fn status(State(store): State<SessionStore>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    let sessions = store.lock();
    let s = sessions.get(&id).ok_or_else(|| unknown(&id))?;
    s.job
        .clone()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("no flatten job has been submitted for {id}")))
}

async fn result(State(store): State<SessionStore>, Path(id): Path<String>) -> ApiResult<Json<MeshJson>> {
    let mesh = {
        let sessions = store.lock();
        let s = sessions.get(&id).ok_or_else(|| unknown(&id))?;
        s.result.clone().ok_or_else(|| ApiError::NotFound(format!("no result for {id}")))?
    };
    Ok(Json(MeshJson::from(&*mesh)))
}

async fn metrics(State(store): State<SessionStore>, Path(id): Path<String>) -> ApiResult<Json<DistortionReport>> {
    let report = {
        let sessions = store.lock();
        let s = sessions.get(&id).ok_or_else(|| unknown(&id))?;
        s.metrics.clone().ok_or_else(|| ApiError::NotFound(format!("no metrics for {id}")))?
    };
    Ok(Json((*report).clone()))
}
