//! Dynamic discrete Ricci (Yamabe) flow.
//!
//! Edge lengths follow `l_ij = e^{u_i} β_ij e^{u_j}`. Newton's method on
//! the Ricci energy drives the vertex curvature `K(u)` to a prescribed
//! target, re-flipping the triangulation to Delaunay before every
//! evaluation. Hessian entries are cotangent weights: `∂K_i/∂u_j = w_ij`
//! and `∂K_i/∂u_i = -Σ_j w_ij`.
//!
//! Vertices can be frozen: they keep `u = 0`, are dropped from the unknowns
//! and their curvature is left unconstrained. On a mesh without frozen
//! vertices the solution is only defined up to an additive constant, which
//! is pinned by keeping `mean(u) = 0`.

use std::f64::consts::PI;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{CurvatureField, DiscreteMetric};
use crate::solve::solve_symmetric;
use crate::topology::VertexId;

/// Largest |u| accepted before lengths are considered to overflow.
pub const MAX_ABS_FACTOR: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    pub u: Vec<f64>,
    pub frozen: Vec<bool>,
}

impl ConformalFactor {
    pub fn zeros(vertex_count: usize) -> Self {
        ConformalFactor {
            u: vec![0.0; vertex_count],
            frozen: vec![false; vertex_count],
        }
    }

    pub fn with_frozen(frozen: Vec<bool>) -> Self {
        ConformalFactor {
            u: vec![0.0; frozen.len()],
            frozen,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn unknowns(&self) -> Vec<VertexId> {
        (0..self.u.len()).filter(|&v| !self.frozen[v]).collect()
    }
}

/// Target curvature per vertex; `None` leaves a vertex unconstrained.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCurvature {
    pub kbar: Vec<Option<f64>>,
}

impl TargetCurvature {
    pub fn uniform(vertex_count: usize, value: f64) -> Self {
        TargetCurvature {
            kbar: vec![Some(value); vertex_count],
        }
    }

    pub fn from_field(field: &CurvatureField) -> Self {
        TargetCurvature {
            kbar: field.values.iter().copied().map(Some).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            epsilon: 1e-6,
            max_iters: 50,
            max_halvings: 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    pub iterations: usize,
    pub max_residual: f64,
    pub flips_total: usize,
    pub converged: bool,
    /// Max residual before the first step and after every accepted step.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

/// `e^{u_i} β_ij e^{u_j}` for every edge of the metric's current
/// triangulation.
pub fn conformal_lengths(factor: &ConformalFactor, metric: &DiscreteMetric) -> Result<Vec<f64>> {
    if let Some((vertex, &value)) = factor
        .u
        .iter()
        .enumerate()
        .find(|(_, u)| !(u.abs() <= MAX_ABS_FACTOR))
    {
        return Err(Error::FactorOverflow { vertex, value });
    }
    let tri = metric.triangulation();
    Ok(metric
        .initial_lengths()
        .iter()
        .enumerate()
        .map(|(e, beta)| {
            let [a, b] = tri.edge_vertices(e);
            factor.u[a].exp() * beta * factor.u[b].exp()
        })
        .collect())
}

/// `K̄_i - K_i` on unfrozen vertices, zero elsewhere.
pub fn ricci_energy_gradient(
    metric: &DiscreteMetric,
    factor: &ConformalFactor,
    target: &TargetCurvature,
) -> Result<Vec<f64>> {
    let k = metric.vertex_curvature()?;
    Ok(gradient_from_curvature(&k, factor, target))
}

fn gradient_from_curvature(
    k: &CurvatureField,
    factor: &ConformalFactor,
    target: &TargetCurvature,
) -> Vec<f64> {
    (0..k.values.len())
        .map(|v| match (factor.frozen[v], target.kbar[v]) {
            (false, Some(kbar)) => kbar - k.values[v],
            _ => 0.0,
        })
        .collect()
}

/// Hessian of the Ricci energy (whose gradient is `K̄ - K`), restricted to
/// unfrozen vertices. Its negation is the curvature Jacobian `∂K/∂u`.
#[derive(Debug, Clone)]
pub struct RicciHessian {
    /// Row/column `r` corresponds to vertex `unknowns[r]`.
    pub unknowns: Vec<VertexId>,
    pub matrix: CsrMatrix<f64>,
    triplets: Vec<(usize, usize, f64)>,
}

impl RicciHessian {
    pub fn dim(&self) -> usize {
        self.unknowns.len()
    }

    /// Entry by matrix row and column (zero when structurally absent).
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix
            .get_entry(row, col)
            .map(|e| e.into_value())
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        for (i, j, v) in self.matrix.triplet_iter() {
            d[i][j] += v;
        }
        d
    }
}

/// Assembles `H[i][j] = w_ij`, `H[i][i] = -Σ_j w_ij` over unfrozen vertices.
/// Diagonals include edges to frozen neighbours.
pub fn ricci_hessian(metric: &DiscreteMetric, frozen: &[bool]) -> Result<RicciHessian> {
    let weights = metric.cotangent_weights()?;
    let mut index = vec![None; metric.vertex_count()];
    let mut unknowns = Vec::new();
    for v in 0..metric.vertex_count() {
        if !frozen[v] {
            index[v] = Some(unknowns.len());
            unknowns.push(v);
        }
    }
    let tri = metric.triangulation();
    let mut triplets = Vec::with_capacity(4 * weights.len());
    for (e, &w) in weights.iter().enumerate() {
        let [a, b] = tri.edge_vertices(e);
        match (index[a], index[b]) {
            (Some(i), Some(j)) => {
                triplets.extend([(i, j, w), (j, i, w), (i, i, -w), (j, j, -w)]);
            }
            (Some(i), None) => triplets.push((i, i, -w)),
            (None, Some(j)) => triplets.push((j, j, -w)),
            (None, None) => {}
        }
    }
    let n = unknowns.len();
    let mut coo = CooMatrix::new(n, n);
    for &(i, j, v) in &triplets {
        coo.push(i, j, v);
    }
    Ok(RicciHessian {
        unknowns,
        matrix: CsrMatrix::from(&coo),
        triplets,
    })
}

fn max_residual(k: &CurvatureField, factor: &ConformalFactor, target: &TargetCurvature) -> f64 {
    gradient_from_curvature(k, factor, target)
        .iter()
        .fold(0.0, |m, g| m.max(g.abs()))
}

/// Sets conformal lengths, restores the Delaunay property and evaluates
/// curvature. New edges get `β = l / (e^{u_k} e^{u_l})` so lengths stay
/// conformal across flips.
fn evaluate(metric: &mut DiscreteMetric, u: &[f64], factor: &ConformalFactor) -> Result<(CurvatureField, usize)> {
    let trial = ConformalFactor {
        u: u.to_vec(),
        frozen: factor.frozen.clone(),
    };
    let lengths = conformal_lengths(&trial, metric)?;
    metric.set_lengths(lengths);
    metric.check_triangle_inequality()?;
    let flips = metric.make_delaunay_with(|k, l, len| Some(len / (u[k].exp() * u[l].exp())))?;
    Ok((metric.vertex_curvature()?, flips))
}

fn validate(metric: &DiscreteMetric, target: &TargetCurvature, factor: &ConformalFactor) -> Result<()> {
    let n = metric.vertex_count();
    if factor.u.len() != n || factor.frozen.len() != n || target.kbar.len() != n {
        return Err(Error::InvalidConfig(format!(
            "flow inputs sized for {} / {} / {} vertices, metric has {n}",
            factor.u.len(),
            factor.frozen.len(),
            target.kbar.len()
        )));
    }
    for v in 0..n {
        match (factor.frozen[v], target.kbar[v]) {
            (false, None) => {
                return Err(Error::InvalidConfig(format!(
                    "vertex {v} is free but has no target curvature"
                )))
            }
            (false, Some(k)) if !(k < 2.0 * PI) => {
                return Err(Error::InvalidConfig(format!(
                    "target curvature {k} at vertex {v} is not below 2π"
                )))
            }
            (true, _) if factor.u[v] != 0.0 => {
                return Err(Error::InvalidConfig(format!(
                    "frozen vertex {v} has nonzero conformal factor"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Runs the damped Newton iteration until every constrained vertex is within
/// `config.epsilon` of its target curvature.
///
/// `factor.u` is the starting point and receives the solution; `metric`
/// receives the final triangulation and lengths, and logs every flip.
/// A step is halved until the triangle inequality holds and the maximum
/// residual does not grow.
pub fn run_intrinsic_flow(
    metric: &mut DiscreteMetric,
    target: &TargetCurvature,
    factor: &mut ConformalFactor,
    config: &FlowConfig,
) -> Result<FlowReport> {
    if !(config.epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }
    validate(metric, target, factor)?;
    let unknowns = factor.unknowns();
    let closed_gauge = unknowns.len() == metric.vertex_count();

    let mut report = FlowReport::default();
    let (mut curvature, flips) = evaluate(metric, &factor.u.clone(), factor)?;
    report.flips_total += flips;
    let mut residual = max_residual(&curvature, factor, target);
    report.residual_history.push(residual);

    while residual >= config.epsilon {
        if report.iterations >= config.max_iters {
            return Err(Error::NonConvergence {
                iterations: report.iterations,
                residual,
            });
        }
        let hessian = ricci_hessian(metric, &factor.frozen)?;
        // -H = ∂K/∂u is positive semidefinite; Newton solves (-H) δu = K̄ - K
        let neg: Vec<(usize, usize, f64)> = hessian.triplets.iter().map(|&(i, j, v)| (i, j, -v)).collect();
        let rhs: Vec<f64> = unknowns
            .iter()
            .map(|&v| target.kbar[v].expect("validated") - curvature.values[v])
            .collect();
        let step = solve_symmetric(unknowns.len(), &neg, &rhs, closed_gauge)?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let mut u = factor.u.clone();
            for (r, &v) in unknowns.iter().enumerate() {
                u[v] += scale * step[r];
            }
            if closed_gauge {
                let mean = u.iter().sum::<f64>() / u.len() as f64;
                u.iter_mut().for_each(|x| *x -= mean);
            }
            let mut trial = metric.clone();
            match evaluate(&mut trial, &u, factor) {
                Ok((k, flips)) => {
                    let r = max_residual(&k, factor, target);
                    if r <= residual {
                        accepted = Some((trial, u, k, flips, r));
                        break;
                    }
                }
                Err(Error::DegenerateMetric { .. } | Error::FactorOverflow { .. }) => {}
                Err(e) => return Err(e),
            }
            scale *= 0.5;
        }
        let Some((trial, u, k, flips, r)) = accepted else {
            return Err(Error::NonConvergence {
                iterations: report.iterations,
                residual,
            });
        };
        *metric = trial;
        factor.u = u;
        curvature = k;
        residual = r;
        report.iterations += 1;
        report.flips_total += flips;
        report.residual_history.push(residual);
    }

    report.max_residual = residual;
    report.converged = true;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn conformal_length_examples() {
        let mut m = DiscreteMetric::from_faces(3, vec![[0, 1, 2]], |a, b| {
            if a + b == 1 {
                1.0
            } else {
                1.5
            }
        })
        .unwrap();
        let f = ConformalFactor::zeros(3);
        assert_eq!(conformal_lengths(&f, &m).unwrap(), m.initial_lengths());

        let e01 = m.triangulation().find_edge(0, 1).unwrap();
        let e02 = m.triangulation().find_edge(0, 2).unwrap();
        let mut f = ConformalFactor::zeros(3);
        f.u = vec![2f64.ln(), 2f64.ln(), 0.0];
        let l = conformal_lengths(&f, &m).unwrap();
        assert!((l[e01] - 4.0).abs() < 1e-14);
        assert!((l[e02] - 3.0).abs() < 1e-14);

        f.u[2] = 41.0;
        assert!(matches!(conformal_lengths(&f, &m), Err(Error::FactorOverflow { vertex: 2, .. })));
        m.set_lengths(l);
    }

    #[test]
    fn gradient_examples() {
        let m = DiscreteMetric::from_mesh(&fixtures::tetrahedron()).unwrap();
        let f = ConformalFactor::zeros(4);
        let g = ricci_energy_gradient(&m, &f, &TargetCurvature::uniform(4, PI)).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-12));

        let grid = fixtures::grid(3, 3, 1.0, |_, _| 0.0);
        let m = DiscreteMetric::from_mesh(&grid).unwrap();
        let mut frozen = vec![true; 9];
        frozen[4] = false;
        let f = ConformalFactor::with_frozen(frozen);
        let mut t = TargetCurvature { kbar: vec![None; 9] };
        t.kbar[4] = Some(0.1);
        let g = ricci_energy_gradient(&m, &f, &t).unwrap();
        assert!((g[4] - 0.1).abs() < 1e-12);
        assert!(g.iter().enumerate().all(|(v, x)| v == 4 || *x == 0.0));
    }

    #[test]
    fn hessian_structure() {
        let m = DiscreteMetric::from_mesh(&fixtures::torus(8, 6, 2.0, 0.7)).unwrap();
        let h = ricci_hessian(&m, &vec![false; m.vertex_count()]).unwrap();
        let d = h.to_dense();
        for i in 0..d.len() {
            assert!(d[i].iter().sum::<f64>().abs() < 1e-12);
            for j in 0..d.len() {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    #[test]
    fn hessian_equilateral_pair() {
        let m = DiscreteMetric::from_faces(4, vec![[0, 1, 2], [1, 0, 3]], |_, _| 1.0).unwrap();
        let h = ricci_hessian(&m, &[false; 4]).unwrap();
        assert!((h.get(0, 1) - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fixed_point_takes_no_steps() {
        let mut m = DiscreteMetric::from_mesh(&fixtures::icosahedron()).unwrap();
        let target = TargetCurvature::from_field(&m.vertex_curvature().unwrap());
        let mut f = ConformalFactor::zeros(12);
        let r = run_intrinsic_flow(&mut m, &target, &mut f, &FlowConfig::default()).unwrap();
        assert!(r.converged && r.iterations <= 1 && r.flips_total == 0);
        assert!(f.u.iter().all(|u| u.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_targets() {
        let mut m = DiscreteMetric::from_mesh(&fixtures::tetrahedron()).unwrap();
        let mut f = ConformalFactor::zeros(4);
        let t = TargetCurvature::uniform(4, 2.0 * PI);
        assert!(matches!(
            run_intrinsic_flow(&mut m, &t, &mut f, &FlowConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
        let t = TargetCurvature { kbar: vec![None; 4] };
        assert!(run_intrinsic_flow(&mut m, &t, &mut f, &FlowConfig::default()).is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut m = DiscreteMetric::from_mesh(&fixtures::icosahedron()).unwrap();
        let mut f = ConformalFactor::zeros(12);
        f.u[0] = 0.3;
        let t = TargetCurvature::uniform(12, 4.0 * PI / 12.0);
        let cfg = FlowConfig { max_iters: 0, ..FlowConfig::default() };
        assert!(matches!(
            run_intrinsic_flow(&mut m, &t, &mut f, &cfg),
            Err(Error::NonConvergence { iterations: 0, .. })
        ));
    }
}
