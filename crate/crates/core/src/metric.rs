//! Edge-length metrics on a flippable triangulation.
//!
//! Angles come from the cosine law, curvature is the angle deficit
//! (`2π - Σθ` inside, `π - Σθ` on the boundary) and cotangent weights are
//! evaluated directly from lengths as `(a² + b² - c²) / 4A`, which is exact
//! for right angles.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::topology::{next, prev, EdgeId, FlipRecord, HalfedgeId, Triangulation, VertexId};

/// Interior edges with weight below this are considered non-Delaunay.
pub const DELAUNAY_TOLERANCE: f64 = -1e-10;

/// Relative slack of the strict triangle inequality.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Allowed overshoot of the cosine-law argument outside [-1, 1].
const COSINE_BAND: f64 = 1e-9;

/// Flips allowed per edge before `make_delaunay` gives up.
const FLIP_CAP_PER_EDGE: usize = 50;

const PARALLEL_FACES: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    pub values: Vec<f64>,
    pub is_boundary: Vec<bool>,
}

impl CurvatureField {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max_abs_over(&self, vertices: &[VertexId]) -> f64 {
        vertices
            .iter()
            .map(|&v| self.values[v].abs())
            .fold(0.0, f64::max)
    }
}

/// `Σ K - 2πχ`.
pub fn gauss_bonnet_residual(field: &CurvatureField, chi: i64) -> f64 {
    field.total() - 2.0 * PI * chi as f64
}

/// Kahan's stable Heron formula.
fn triangle_area_from_lengths(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

fn satisfies_triangle_inequality(a: f64, b: f64, c: f64) -> bool {
    let ok = |x: f64, y: f64, z: f64| y + z - x > TRIANGLE_SLACK * (y + z);
    a > 0.0 && b > 0.0 && c > 0.0 && ok(a, b, c) && ok(b, c, a) && ok(c, a, b)
}

/// Angle opposite `opp` in a triangle with the other sides `a`, `b`.
fn cosine_law_angle(opp: f64, a: f64, b: f64) -> Option<f64> {
    let cos = (a * a + b * b - opp * opp) / (2.0 * a * b);
    if !(cos.abs() <= 1.0 + COSINE_BAND) {
        return None;
    }
    Some(cos.clamp(-1.0, 1.0).acos())
}

/// Planar layout of the two triangles around an interior halfedge `i -> j`
/// with apexes `k` (left) and `l` (right). Returns the length of the other
/// diagonal, or `None` when the quadrilateral is not strictly convex.
fn flipped_diagonal(l_ij: f64, l_jk: f64, l_ki: f64, l_il: f64, l_lj: f64) -> Option<f64> {
    let xk = (l_ij * l_ij + l_ki * l_ki - l_jk * l_jk) / (2.0 * l_ij);
    let yk = (l_ki * l_ki - xk * xk).max(0.0).sqrt();
    let xl = (l_ij * l_ij + l_il * l_il - l_lj * l_lj) / (2.0 * l_ij);
    let yl = -(l_il * l_il - xl * xl).max(0.0).sqrt();
    if yk <= 0.0 || yl >= 0.0 {
        return None;
    }
    // where segment k-l crosses the line through i and j
    let cross = xk + (xl - xk) * yk / (yk - yl);
    let tol = TRIANGLE_SLACK * l_ij;
    if cross <= tol || cross >= l_ij - tol {
        return None;
    }
    Some(((xk - xl).powi(2) + (yk - yl).powi(2)).sqrt())
}

/// Edge lengths over a triangulation that may diverge from the embedded mesh
/// through flips. Flips are logged so they can be replayed elsewhere.
#[derive(Debug, Clone)]
pub struct DiscreteMetric {
    tri: Triangulation,
    lengths: Vec<f64>,
    initial: Vec<f64>,
    boundary: Vec<bool>,
    /// Vertex pairs joined outside this triangulation; flips may not
    /// create them.
    external_edges: HashSet<(VertexId, VertexId)>,
    flip_log: Vec<FlipRecord>,
}

impl DiscreteMetric {
    pub fn new(tri: Triangulation, lengths: Vec<f64>) -> Result<Self> {
        assert_eq!(tri.edge_count(), lengths.len());
        let boundary = tri.boundary_vertices();
        let metric = DiscreteMetric {
            tri,
            initial: lengths.clone(),
            lengths,
            boundary,
            external_edges: HashSet::new(),
            flip_log: Vec::new(),
        };
        metric.check_triangle_inequality()?;
        Ok(metric)
    }

    /// Euclidean edge lengths of an embedded mesh.
    pub fn from_mesh(mesh: &TriangleMesh) -> Result<Self> {
        let tri = mesh.topology().clone();
        let lengths = (0..tri.edge_count())
            .map(|e| {
                let [a, b] = tri.edge_vertices(e);
                mesh.edge_length(a, b)
            })
            .collect();
        Self::new(tri, lengths)
    }

    /// Builds a metric from connectivity and a length for every vertex pair
    /// that forms an edge.
    pub fn from_faces(
        vertex_count: usize,
        faces: Vec<[VertexId; 3]>,
        length: impl Fn(VertexId, VertexId) -> f64,
    ) -> Result<Self> {
        let tri = Triangulation::new(vertex_count, faces)?;
        let lengths = (0..tri.edge_count())
            .map(|e| {
                let [a, b] = tri.edge_vertices(e);
                length(a, b)
            })
            .collect();
        Self::new(tri, lengths)
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.tri
    }

    pub fn vertex_count(&self) -> usize {
        self.tri.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.tri.edge_count()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn length(&self, e: EdgeId) -> f64 {
        self.lengths[e]
    }

    pub fn initial_lengths(&self) -> &[f64] {
        &self.initial
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn flip_log(&self) -> &[FlipRecord] {
        &self.flip_log
    }

    /// Replaces all current lengths; initial lengths are untouched.
    pub fn set_lengths(&mut self, lengths: Vec<f64>) {
        assert_eq!(lengths.len(), self.lengths.len());
        self.lengths = lengths;
    }

    pub fn set_external_edges(&mut self, pairs: impl IntoIterator<Item = (VertexId, VertexId)>) {
        self.external_edges = pairs
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
    }

    /// First face violating the strict triangle inequality, if any.
    pub fn find_degenerate_face(&self) -> Option<usize> {
        (0..self.tri.face_count()).find(|&f| {
            let [a, b, c] = self.face_lengths(f);
            !satisfies_triangle_inequality(a, b, c)
        })
    }

    pub fn check_triangle_inequality(&self) -> Result<()> {
        match self.find_degenerate_face() {
            Some(face) => Err(Error::DegenerateMetric { face }),
            None => Ok(()),
        }
    }

    /// Lengths of the edges opposite corners 0, 1, 2 of face `f`.
    pub fn face_lengths(&self, f: usize) -> [f64; 3] {
        let base = 3 * f;
        [
            self.lengths[self.tri.edge_of(base + 1)],
            self.lengths[self.tri.edge_of(base + 2)],
            self.lengths[self.tri.edge_of(base)],
        ]
    }

    fn face_angles(&self, f: usize) -> Result<[f64; 3]> {
        let [a, b, c] = self.face_lengths(f);
        let angles = [
            cosine_law_angle(a, b, c),
            cosine_law_angle(b, c, a),
            cosine_law_angle(c, a, b),
        ];
        match angles {
            [Some(x), Some(y), Some(z)] => Ok([x, y, z]),
            _ => Err(Error::DegenerateMetric { face: f }),
        }
    }

    /// Corner angles per face, indexed like the face's vertex triple.
    pub fn corner_angles(&self) -> Result<Vec<[f64; 3]>> {
        let n = self.tri.face_count();
        if n >= PARALLEL_FACES {
            (0..n).into_par_iter().map(|f| self.face_angles(f)).collect()
        } else {
            (0..n).map(|f| self.face_angles(f)).collect()
        }
    }

    pub fn vertex_curvature(&self) -> Result<CurvatureField> {
        let angles = self.corner_angles()?;
        let mut sums = vec![0.0; self.vertex_count()];
        for (face, a) in self.tri.faces().iter().zip(&angles) {
            for c in 0..3 {
                sums[face[c]] += a[c];
            }
        }
        let values = sums
            .iter()
            .zip(&self.boundary)
            .map(|(s, &b)| if b { PI - s } else { 2.0 * PI - s })
            .collect();
        Ok(CurvatureField {
            values,
            is_boundary: self.boundary.clone(),
        })
    }

    /// Cotangent of the angle opposite halfedge `h` in its face.
    fn half_cotangent(&self, h: HalfedgeId) -> Result<f64> {
        let opp = self.lengths[self.tri.edge_of(h)];
        let a = self.lengths[self.tri.edge_of(next(h))];
        let b = self.lengths[self.tri.edge_of(prev(h))];
        let face = h / 3;
        if !satisfies_triangle_inequality(opp, a, b) {
            return Err(Error::DegenerateMetric { face });
        }
        let area = triangle_area_from_lengths(opp, a, b);
        if !(area > 0.0) {
            return Err(Error::DegenerateMetric { face });
        }
        Ok((a * a + b * b - opp * opp) / (4.0 * area))
    }

    /// `cot θ_k + cot θ_l` for an interior edge, `cot θ_k` on the boundary.
    pub fn edge_weight(&self, e: EdgeId) -> Result<f64> {
        let h = self.tri.edge_halfedge(e);
        let mut w = self.half_cotangent(h)?;
        if let Some(t) = self.tri.twin(h) {
            w += self.half_cotangent(t)?;
        }
        Ok(w)
    }

    pub fn cotangent_weights(&self) -> Result<Vec<f64>> {
        (0..self.edge_count()).map(|e| self.edge_weight(e)).collect()
    }

    /// Flips an interior edge to the other diagonal of its flattened
    /// quadrilateral. The new edge's initial length is set to its measured
    /// length.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<FlipRecord> {
        let h = self.tri.edge_halfedge(e);
        let t = self.tri.twin(h).ok_or(Error::NotFlippable {
            edge: e,
            reason: "boundary edge",
        })?;
        let len = |x: HalfedgeId| self.lengths[self.tri.edge_of(x)];
        let diagonal = flipped_diagonal(len(h), len(next(h)), len(prev(h)), len(next(t)), len(prev(t)))
            .ok_or(Error::NotFlippable {
                edge: e,
                reason: "flattened quadrilateral is not convex",
            })?;
        let (k, l) = (self.tri.opposite(h), self.tri.opposite(t));
        let pair = if k < l { (k, l) } else { (l, k) };
        if self.external_edges.contains(&pair) {
            return Err(Error::NotFlippable {
                edge: e,
                reason: "new diagonal already exists",
            });
        }
        let record = self.tri.flip(e)?;
        self.lengths[e] = diagonal;
        self.initial[e] = diagonal;
        self.flip_log.push(record);
        Ok(record)
    }

    /// Flips non-Delaunay edges until every interior cotangent weight is at
    /// least [`DELAUNAY_TOLERANCE`]. Returns the number of flips.
    ///
    /// Edges whose flip would duplicate an existing edge are left in place.
    pub fn make_delaunay(&mut self) -> Result<usize> {
        self.make_delaunay_with(|_, _, _| None)
    }

    /// As [`make_delaunay`](Self::make_delaunay), letting the caller choose
    /// the initial length recorded for each new edge from its endpoints and
    /// measured length.
    pub(crate) fn make_delaunay_with(
        &mut self,
        mut initial_for: impl FnMut(VertexId, VertexId, f64) -> Option<f64>,
    ) -> Result<usize> {
        let edge_count = self.edge_count();
        let cap = FLIP_CAP_PER_EDGE * edge_count;
        let mut queued = vec![false; edge_count];
        let mut queue: VecDeque<EdgeId> = VecDeque::new();
        for e in 0..edge_count {
            if !self.tri.is_boundary_edge(e) {
                queued[e] = true;
                queue.push_back(e);
            }
        }
        let mut flips = 0;
        while let Some(e) = queue.pop_front() {
            queued[e] = false;
            if self.tri.is_boundary_edge(e) || self.edge_weight(e)? >= DELAUNAY_TOLERANCE {
                continue;
            }
            let record = match self.flip_edge(e) {
                Ok(r) => r,
                Err(Error::NotFlippable { .. }) => continue,
                Err(err) => return Err(err),
            };
            flips += 1;
            if flips > cap {
                return Err(Error::FlipCapExceeded { cap });
            }
            let [k, l] = record.added;
            if let Some(beta) = initial_for(k, l, self.lengths[e]) {
                self.initial[e] = beta;
            }
            let h = self.tri.edge_halfedge(e);
            let t = self.tri.twin(h).expect("flipped edge is interior");
            for x in [next(h), prev(h), next(t), prev(t)] {
                let o = self.tri.edge_of(x);
                if !queued[o] && !self.tri.is_boundary_edge(o) {
                    queued[o] = true;
                    queue.push_back(o);
                }
            }
        }
        Ok(flips)
    }
}
