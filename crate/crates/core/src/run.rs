//! Run configuration and machine-readable summaries shared by the command
//! line and HTTP front ends.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extrinsic::{embedded_curvature, ExtrinsicConfig, ExtrinsicResult, StepReport};
use crate::intrinsic::FlowConfig;
use crate::mesh::{RoiSelection, TriangleMesh};
use crate::metric::{gauss_bonnet_residual, CurvatureField};
use crate::select::geodesic_ball;
use crate::topology::VertexId;

pub const SCHEMA: &str = "lmap/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub steps: usize,
    pub epsilon: f64,
    pub max_newton: usize,
    pub max_gd: usize,
    pub pin_rim: bool,
    pub seed: Option<VertexId>,
    pub radius: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let flow = FlowConfig::default();
        let ext = ExtrinsicConfig::default();
        RunConfig {
            steps: ext.steps,
            epsilon: flow.epsilon,
            max_newton: flow.max_iters,
            max_gd: ext.max_gd_iters,
            pin_rim: ext.pin_rim,
            seed: None,
            radius: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_newton < 1 {
            return Err(Error::InvalidConfig("max_newton must be at least 1".into()));
        }
        if self.seed.is_some() != self.radius.is_some() {
            return Err(Error::InvalidConfig("seed and radius must be given together".into()));
        }
        Ok(())
    }

    pub fn extrinsic(&self) -> ExtrinsicConfig {
        ExtrinsicConfig {
            steps: self.steps,
            flow: FlowConfig {
                epsilon: self.epsilon,
                max_iters: self.max_newton,
                ..FlowConfig::default()
            },
            max_gd_iters: self.max_gd,
            pin_rim: self.pin_rim,
            ..ExtrinsicConfig::default()
        }
    }

    /// The geodesic ball named by `seed`/`radius`, if both are set.
    pub fn ball(&self, mesh: &TriangleMesh) -> Result<Option<RoiSelection>> {
        match (self.seed, self.radius) {
            (Some(seed), Some(radius)) => Ok(Some(RoiSelection::new(mesh, geodesic_ball(mesh, seed, radius)?)?)),
            _ => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub v: usize,
    pub e: usize,
    pub f: usize,
    pub chi: i64,
    pub boundary_loops: usize,
    pub curvature_min: f64,
    pub curvature_max: f64,
    pub curvature_sum: f64,
    pub gb_residual: f64,
}

impl MeshStats {
    pub fn new(mesh: &TriangleMesh) -> Result<Self> {
        let k = embedded_curvature(mesh)?;
        let chi = mesh.euler_characteristic();
        Ok(MeshStats {
            v: mesh.vertex_count(),
            e: mesh.edge_count(),
            f: mesh.face_count(),
            chi,
            boundary_loops: mesh.boundary_loop_count(),
            curvature_min: k.values.iter().copied().fold(f64::INFINITY, f64::min),
            curvature_max: k.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            curvature_sum: k.total(),
            gb_residual: gauss_bonnet_residual(&k, chi),
        })
    }
}

/// Curvature summary over a vertex set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStats {
    pub count: usize,
    pub max_abs: f64,
    pub sum_abs: f64,
    pub sum: f64,
}

impl CurvatureStats {
    pub fn over(field: &CurvatureField, vertices: &[VertexId]) -> Self {
        let values = vertices.iter().map(|&v| field.values[v]);
        CurvatureStats {
            count: vertices.len(),
            max_abs: field.max_abs_over(vertices),
            sum_abs: values.clone().map(f64::abs).sum(),
            sum: values.sum(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoiSummary {
    pub vertices: usize,
    pub interior: usize,
    pub rim: usize,
}

impl From<&RoiSelection> for RoiSummary {
    fn from(roi: &RoiSelection) -> Self {
        RoiSummary {
            vertices: roi.len(),
            interior: roi.interior().len(),
            rim: roi.rim().len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub steps_ms: Vec<f64>,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub config: RunConfig,
    pub roi: RoiSummary,
    pub steps: Vec<StepReport>,
    pub flips: usize,
    /// Interior curvature of the ROI before and after flattening.
    pub curvature_before: CurvatureStats,
    pub curvature_after: CurvatureStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    pub fn new(config: RunConfig, result: &ExtrinsicResult, with_timing: bool) -> Result<Self> {
        let interior = result.roi.interior();
        let before = embedded_curvature(&result.original)?;
        let after = embedded_curvature(&result.mesh)?;
        let timings = with_timing.then(|| {
            let steps_ms: Vec<f64> = result.steps.iter().map(|s| s.elapsed.as_secs_f64() * 1e3).collect();
            Timings {
                total_ms: steps_ms.iter().sum(),
                steps_ms,
            }
        });
        Ok(RunReport {
            schema: SCHEMA.to_string(),
            config,
            roi: RoiSummary::from(&result.roi),
            steps: result.steps.clone(),
            flips: result.flips.len(),
            curvature_before: CurvatureStats::over(&before, interior),
            curvature_after: CurvatureStats::over(&after, interior),
            timings,
        })
    }
}
