use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of errors, used by front ends to pick exit codes and
/// HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Usage,
    Io,
    Topology,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Io => 2,
            ErrorClass::Topology => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("vertex index {index} out of range (mesh has {len} vertices)")]
    OutOfRange { index: usize, len: usize },

    #[error("region spans no complete face")]
    EmptySubmesh,

    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate metric on face {face}: triangle inequality violated")]
    DegenerateMetric { face: usize },

    #[error("edge {edge} cannot be flipped: {reason}")]
    NotFlippable { edge: usize, reason: &'static str },

    #[error("delaunay flipping exceeded the cap of {cap} flips")]
    FlipCapExceeded { cap: usize },

    #[error("conformal factor {value} at vertex {vertex} exceeds the overflow guard")]
    FactorOverflow { vertex: usize, value: f64 },

    #[error("ricci flow did not converge after {iterations} iterations (max residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("vertex {vertex} has a vanishing normal")]
    ZeroNormal { vertex: usize },

    #[error("line search failed to decrease the deformation energy")]
    LineSearchFailed,

    #[error("vanishing one-ring area at vertex {vertex}")]
    ZeroArea { vertex: usize },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) | Error::Parse { .. } => ErrorClass::Io,
            Error::Topology(_) | Error::DegenerateFace { .. } | Error::EmptySubmesh => {
                ErrorClass::Topology
            }
            Error::OutOfRange { .. } | Error::InvalidRoi(_) | Error::InvalidConfig(_) => {
                ErrorClass::Usage
            }
            Error::DegenerateMetric { .. }
            | Error::NotFlippable { .. }
            | Error::FlipCapExceeded { .. }
            | Error::FactorOverflow { .. }
            | Error::NonConvergence { .. }
            | Error::SolveFailed(_)
            | Error::ZeroNormal { .. }
            | Error::LineSearchFailed
            | Error::ZeroArea { .. } => ErrorClass::Numerical,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
