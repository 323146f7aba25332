use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use lmap::{DistortionReport, Error, ErrorClass, RoiSelection, RunReport, TriangleMesh};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub class: ErrorClass,
    pub message: String,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        ErrorBody {
            class: e.class(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Running,
    Done { report: Box<RunReport> },
    Failed { error: ErrorBody },
}

impl JobState {
    pub fn is_active(&self) -> bool {
        matches!(self, JobState::Pending | JobState::Running)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JobStatus {
    pub id: u64,
    #[serde(flatten)]
    pub state: JobState,
}

#[derive(Debug)]
pub struct Session {
    pub mesh: Arc<TriangleMesh>,
    pub roi: Option<RoiSelection>,
    pub job: Option<JobStatus>,
    pub result: Option<Arc<TriangleMesh>>,
    pub metrics: Option<Arc<DistortionReport>>,
    jobs_started: u64,
}

impl Session {
    pub fn new(mesh: TriangleMesh) -> Self {
        Session {
            mesh: Arc::new(mesh),
            roi: None,
            job: None,
            result: None,
            metrics: None,
            jobs_started: 0,
        }
    }

    /// Starts a pending job, dropping any earlier result.
    pub fn begin_job(&mut self) -> u64 {
        self.jobs_started += 1;
        self.result = None;
        self.metrics = None;
        self.job = Some(JobStatus {
            id: self.jobs_started,
            state: JobState::Pending,
        });
        self.jobs_started
    }

    /// Advances job `id`; stale ids and backward transitions are ignored.
    pub fn advance(&mut self, id: u64, state: JobState) {
        let Some(job) = self.job.as_mut().filter(|j| j.id == id) else {
            return;
        };
        let forward = matches!(
            (&job.state, &state),
            (JobState::Pending, JobState::Running)
                | (JobState::Pending | JobState::Running, JobState::Done { .. } | JobState::Failed { .. })
        );
        if forward {
            job.state = state;
        }
    }
}

/// In-memory sessions keyed by opaque id.
#[derive(Debug, Clone, Default)]
pub struct SessionStore {
    inner: Arc<Mutex<HashMap<String, Session>>>,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lock(&self) -> MutexGuard<'_, HashMap<String, Session>> {
        // a panic while holding the lock leaves plain data behind; keep serving
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn insert(&self, mesh: TriangleMesh) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.lock().insert(id.clone(), Session::new(mesh));
        id
    }
}
