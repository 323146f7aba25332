//! Stepwise flattening of an ROI on an embedded mesh.
//!
//! Step `k` of `n` asks the ROI interior for curvature `(1 - k/n) K₀`,
//! solves the intrinsic flow on the ROI submesh (rim vertices frozen at
//! `u = 0`), replays any intrinsic flips onto the embedded mesh, and then
//! moves each ROI vertex along its step-`k` normal, `p + λ n`, minimizing
//!
//! ```text
//! E(λ) = Σ_edges (|p_i + λ_i n_i - p_j - λ_j n_j|² - L_ij)²
//! ```
//!
//! by gradient descent with Armijo backtracking. Only edges touching the ROI
//! enter the energy; vertices outside the ROI are never written to.

use std::time::{Duration, Instant};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intrinsic::{run_intrinsic_flow, ConformalFactor, FlowConfig, FlowReport, TargetCurvature};
use crate::mesh::{extract_roi_submesh, triangle_cross, Point, RoiSelection, TriangleMesh};
use crate::metric::{CurvatureField, DiscreteMetric};
use crate::topology::{FaceId, FlipRecord, VertexId};

/// Normals shorter than this (before normalization) are rejected.
pub const MIN_NORMAL_LENGTH: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtrinsicConfig {
    pub steps: usize,
    pub flow: FlowConfig,
    pub max_gd_iters: usize,
    /// Stop descent when `max |∂E/∂λ|` drops below this. Defaults to
    /// `1e-6 * (mean edge length)²` of the input mesh.
    pub grad_tol: Option<f64>,
    /// Keep rim vertices in place; only the ROI interior moves.
    pub pin_rim: bool,
    pub armijo: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for ExtrinsicConfig {
    fn default() -> Self {
        ExtrinsicConfig {
            steps: 5,
            flow: FlowConfig::default(),
            max_gd_iters: 500,
            grad_tol: None,
            pin_rim: false,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 30,
        }
    }
}

/// `(1 - k/n) K₀`.
pub fn scheduled_curvature(initial: f64, k: usize, n: usize) -> f64 {
    (1.0 - k as f64 / n as f64) * initial
}

/// Targets for step `k` of `n`: scheduled on `constrained` vertices, unset
/// (free) everywhere else.
pub fn schedule_target_curvature(
    initial: &CurvatureField,
    constrained: &[bool],
    k: usize,
    n: usize,
) -> TargetCurvature {
    TargetCurvature {
        kbar: initial
            .values
            .iter()
            .zip(constrained)
            .map(|(&k0, &c)| c.then(|| scheduled_curvature(k0, k, n)))
            .collect(),
    }
}

/// Area and unit normal of face `f`, oriented by its vertex order.
pub fn face_area_normal(positions: &[Point], faces: &[[VertexId; 3]], f: FaceId) -> Result<(f64, Vector3<f64>)> {
    let [a, b, c] = faces[f].map(|v| &positions[v]);
    let cross = triangle_cross(a, b, c);
    let area = 0.5 * cross.norm();
    if !(area > crate::mesh::MIN_FACE_AREA) {
        return Err(Error::DegenerateFace { face: f, area });
    }
    Ok((area, cross / (2.0 * area)))
}

/// Area-weighted vertex normal `Σ s n / |Σ s n|` over incident faces.
pub fn vertex_normal(positions: &[Point], mesh: &TriangleMesh, v: VertexId) -> Result<Vector3<f64>> {
    // s * n is half the face cross product, which stays finite on slivers
    let d: Vector3<f64> = mesh
        .vertex_faces(v)
        .iter()
        .map(|&f| {
            let [a, b, c] = mesh.faces()[f].map(|x| &positions[x]);
            0.5 * triangle_cross(a, b, c)
        })
        .sum();
    let len = d.norm();
    if !(len > MIN_NORMAL_LENGTH) {
        return Err(Error::ZeroNormal { vertex: v });
    }
    Ok(d / len)
}

/// Squared target lengths for the edges that enter the energy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepTargets {
    pub edges: Vec<[VertexId; 2]>,
    pub lengths_sq: Vec<f64>,
}

#[inline]
fn deformed_difference(
    positions: &[Point],
    lambda: &[f64],
    normals: &[Vector3<f64>],
    i: VertexId,
    j: VertexId,
) -> Vector3<f64> {
    (positions[i] - positions[j]) + normals[i] * lambda[i] - normals[j] * lambda[j]
}

/// `Σ (|p'_i - p'_j|² - L_ij)²` with `p' = p + λ n`. `lambda` and `normals`
/// are per vertex; entries of fixed vertices must be zero.
pub fn deformation_energy(
    positions: &[Point],
    lambda: &[f64],
    normals: &[Vector3<f64>],
    targets: &StepTargets,
) -> f64 {
    targets
        .edges
        .iter()
        .zip(&targets.lengths_sq)
        .map(|(&[i, j], &l)| {
            let d = deformed_difference(positions, lambda, normals, i, j);
            let r = d.norm_squared() - l;
            r * r
        })
        .sum()
}

/// Exact gradient of [`deformation_energy`] with respect to `λ`:
/// `∂E/∂λ_i = Σ_j 4 r_ij ⟨d_ij, n_i⟩` where `d_ij = p'_i - p'_j`.
pub fn deformation_gradient(
    positions: &[Point],
    lambda: &[f64],
    normals: &[Vector3<f64>],
    targets: &StepTargets,
) -> Vec<f64> {
    let mut g = vec![0.0; positions.len()];
    for (&[i, j], &l) in targets.edges.iter().zip(&targets.lengths_sq) {
        let d = deformed_difference(positions, lambda, normals, i, j);
        let r = d.norm_squared() - l;
        g[i] += 4.0 * r * d.dot(&normals[i]);
        g[j] -= 4.0 * r * d.dot(&normals[j]);
    }
    g
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub final_gradient: f64,
    pub converged: bool,
    #[serde(skip)]
    pub energy_history: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub step: usize,
    pub flow: FlowReport,
    pub descent: DescentReport,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Minimizes the energy over `λ` restricted to `movable` vertices.
fn descend(
    positions: &[Point],
    normals: &[Vector3<f64>],
    targets: &StepTargets,
    movable: &[VertexId],
    config: &ExtrinsicConfig,
    grad_tol: f64,
) -> Result<(Vec<f64>, DescentReport)> {
    let mut lambda = vec![0.0; positions.len()];
    let mut energy = deformation_energy(positions, &lambda, normals, targets);
    let mut report = DescentReport {
        initial_energy: energy,
        energy_history: vec![energy],
        ..DescentReport::default()
    };
    let mut trial = lambda.clone();
    loop {
        let full = deformation_gradient(positions, &lambda, normals, targets);
        let mut g = vec![0.0; positions.len()];
        let mut gmax: f64 = 0.0;
        let mut gsq = 0.0;
        for &v in movable {
            g[v] = full[v];
            gmax = gmax.max(full[v].abs());
            gsq += full[v] * full[v];
        }
        report.final_gradient = gmax;
        if gmax < grad_tol {
            report.converged = true;
            break;
        }
        if report.iterations >= config.max_gd_iters {
            break;
        }
        let mut step = 1.0 / gmax;
        let mut backtracks = 0;
        loop {
            for &v in movable {
                trial[v] = lambda[v] - step * g[v];
            }
            let e = deformation_energy(positions, &trial, normals, targets);
            if e <= energy - config.armijo * step * gsq {
                energy = e;
                std::mem::swap(&mut lambda, &mut trial);
                break;
            }
            backtracks += 1;
            if backtracks >= config.max_backtracks {
                return Err(Error::LineSearchFailed);
            }
            step *= config.shrink;
        }
        report.iterations += 1;
        report.energy_history.push(energy);
    }
    report.final_energy = energy;
    Ok((lambda, report))
}

/// Step-by-step driver. Holds the deformation state between steps so
/// callers can inspect intermediate meshes.
#[derive(Debug, Clone)]
pub struct ExtrinsicFlow {
    config: ExtrinsicConfig,
    grad_tol: f64,
    roi: RoiSelection,
    /// Input positions with replayed connectivity.
    original: TriangleMesh,
    mesh: TriangleMesh,
    to_parent: Vec<VertexId>,
    from_parent: Vec<Option<VertexId>>,
    metric: DiscreteMetric,
    factor: ConformalFactor,
    initial_curvature: CurvatureField,
    constrained: Vec<bool>,
    movable: Vec<VertexId>,
    replayed: Vec<FlipRecord>,
    step_index: usize,
    lambda: Vec<f64>,
    normals: Vec<Vector3<f64>>,
    reports: Vec<StepReport>,
}

impl ExtrinsicFlow {
    pub fn new(mesh: &TriangleMesh, roi: &RoiSelection, config: ExtrinsicConfig) -> Result<Self> {
        if config.steps < 1 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if !(config.flow.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if !(config.shrink > 0.0 && config.shrink < 1.0) {
            return Err(Error::InvalidConfig("line-search shrink must lie in (0, 1)".into()));
        }
        if roi.is_empty() {
            return Err(Error::InvalidRoi("selection is empty".into()));
        }
        if roi.interior().is_empty() {
            return Err(Error::InvalidRoi("selection has no interior vertex".into()));
        }
        let sub = extract_roi_submesh(mesh, roi)?;
        let mut metric = DiscreteMetric::from_mesh(&sub.mesh)?;

        // parent edges between submesh vertices that the submesh lacks;
        // intrinsic flips must not recreate them
        let external = (0..mesh.edge_count()).filter_map(|e| {
            let [a, b] = mesh.topology().edge_vertices(e);
            let (sa, sb) = (sub.from_parent[a]?, sub.from_parent[b]?);
            metric.triangulation().find_edge(sa, sb).is_none().then_some((sa, sb))
        });
        let external: Vec<_> = external.collect();
        metric.set_external_edges(external);

        let constrained: Vec<bool> = sub.to_parent.iter().map(|&v| roi.is_interior(v)).collect();
        if !constrained.iter().any(|&c| c) {
            return Err(Error::InvalidRoi("no interior vertex lies on a complete face".into()));
        }
        let initial_curvature = metric.vertex_curvature()?;
        let factor = ConformalFactor::with_frozen(constrained.iter().map(|c| !c).collect());
        let movable = if config.pin_rim {
            roi.interior().to_vec()
        } else {
            roi.vertices().to_vec()
        };
        let grad_tol = config
            .grad_tol
            .unwrap_or_else(|| 1e-6 * mesh.mean_edge_length().powi(2));

        Ok(ExtrinsicFlow {
            config,
            grad_tol,
            roi: roi.clone(),
            original: mesh.clone(),
            mesh: mesh.clone(),
            to_parent: sub.to_parent,
            from_parent: sub.from_parent,
            metric,
            factor,
            initial_curvature,
            constrained,
            movable,
            replayed: Vec::new(),
            step_index: 0,
            lambda: vec![0.0; mesh.vertex_count()],
            normals: vec![Vector3::zeros(); mesh.vertex_count()],
            reports: Vec::new(),
        })
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn total_steps(&self) -> usize {
        self.config.steps
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.config.steps
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn positions(&self) -> &[Point] {
        self.mesh.positions()
    }

    /// Normal offsets applied in the most recent step (zero off the ROI).
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Normals used in the most recent step (zero for fixed vertices).
    pub fn normals(&self) -> &[Vector3<f64>] {
        &self.normals
    }

    /// Flips applied to the embedded connectivity so far, in parent ids.
    pub fn flip_replay_log(&self) -> &[FlipRecord] {
        &self.replayed
    }

    pub fn reports(&self) -> &[StepReport] {
        &self.reports
    }

    pub fn grad_tol(&self) -> f64 {
        self.grad_tol
    }

    /// Current intrinsic lengths, keyed by parent vertex pairs.
    pub fn intrinsic_metric(&self) -> &DiscreteMetric {
        &self.metric
    }

    fn replay_new_flips(&mut self) -> Result<()> {
        let log = self.metric.flip_log();
        for rec in &log[self.replayed.len()..] {
            let parent = FlipRecord {
                removed: rec.removed.map(|v| self.to_parent[v]),
                added: rec.added.map(|v| self.to_parent[v]),
            };
            self.mesh.apply_flip(&parent)?;
            self.original.apply_flip(&parent)?;
            self.replayed.push(parent);
        }
        Ok(())
    }

    /// Active edges (at least one endpoint in the ROI) with squared targets:
    /// intrinsic lengths where the submesh has the edge, input lengths
    /// otherwise.
    fn step_targets(&self) -> StepTargets {
        let tri = self.mesh.topology();
        let mut targets = StepTargets::default();
        for e in 0..tri.edge_count() {
            let [a, b] = tri.edge_vertices(e);
            if !self.roi.contains(a) && !self.roi.contains(b) {
                continue;
            }
            let intrinsic = match (self.from_parent[a], self.from_parent[b]) {
                (Some(sa), Some(sb)) => self
                    .metric
                    .triangulation()
                    .find_edge(sa, sb)
                    .map(|se| self.metric.length(se)),
                _ => None,
            };
            let length = intrinsic.unwrap_or_else(|| self.original.edge_length(a, b));
            targets.edges.push([a, b]);
            targets.lengths_sq.push(length * length);
        }
        targets
    }

    /// Runs one step. Does nothing once all steps are done.
    pub fn step(&mut self) -> Result<&StepReport> {
        if self.is_done() {
            return self
                .reports
                .last()
                .ok_or_else(|| Error::InvalidConfig("flow has no steps".into()));
        }
        let started = Instant::now();
        let k = self.step_index + 1;
        let target = schedule_target_curvature(&self.initial_curvature, &self.constrained, k, self.config.steps);
        let flow = run_intrinsic_flow(&mut self.metric, &target, &mut self.factor, &self.config.flow)?;
        self.replay_new_flips()?;

        let targets = self.step_targets();
        let positions = self.mesh.positions().to_vec();
        let mut normals = vec![Vector3::zeros(); positions.len()];
        for &v in &self.movable {
            normals[v] = vertex_normal(&positions, &self.mesh, v)?;
        }
        let (lambda, descent) = descend(&positions, &normals, &targets, &self.movable, &self.config, self.grad_tol)?;

        let out = self.mesh.positions_mut();
        for &v in &self.movable {
            out[v] = positions[v] + normals[v] * lambda[v];
        }
        self.lambda = lambda;
        self.normals = normals;
        self.step_index = k;
        self.reports.push(StepReport {
            step: k,
            flow,
            descent,
            elapsed: started.elapsed(),
        });
        Ok(self.reports.last().expect("just pushed"))
    }

    pub fn finish(self) -> ExtrinsicResult {
        ExtrinsicResult {
            mesh: self.mesh,
            original: self.original,
            roi: self.roi,
            steps: self.reports,
            flips: self.replayed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtrinsicResult {
    /// Deformed mesh, with intrinsic flips replayed onto its connectivity.
    pub mesh: TriangleMesh,
    /// Input positions on the same (replayed) connectivity as `mesh`.
    pub original: TriangleMesh,
    pub roi: RoiSelection,
    pub steps: Vec<StepReport>,
    pub flips: Vec<FlipRecord>,
}

/// Flattens `roi` in `config.steps` steps.
pub fn run_extrinsic_flow(mesh: &TriangleMesh, roi: &RoiSelection, config: ExtrinsicConfig) -> Result<ExtrinsicResult> {
    let mut flow = ExtrinsicFlow::new(mesh, roi, config)?;
    while !flow.is_done() {
        flow.step()?;
    }
    Ok(flow.finish())
}

/// Angle-deficit curvature of an embedded mesh.
pub fn embedded_curvature(mesh: &TriangleMesh) -> Result<CurvatureField> {
    DiscreteMetric::from_mesh(mesh)?.vertex_curvature()
}
