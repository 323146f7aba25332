//! Area and angle distortion between two embeddings of one connectivity.
//!
//! Logs are taken as `ln(mapped) - ln(original)` so swapping the two meshes
//! negates every sample exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{triangle_area, Point, RoiSelection, TriangleMesh, MIN_FACE_AREA};
use crate::topology::{FaceId, VertexId};

/// One-ring area sums at or below this are rejected.
pub const MIN_RING_AREA: f64 = 1e-15;
pub const DEFAULT_BINS: usize = 64;
pub const DEFAULT_RANGE: [f64; 2] = [-2.0, 2.0];

fn check_shared(original: &TriangleMesh, mapped: &TriangleMesh) -> Result<()> {
    if original.vertex_count() != mapped.vertex_count() || original.faces() != mapped.faces() {
        return Err(Error::Topology("distortion needs both meshes on the same connectivity".into()));
    }
    Ok(())
}

fn ring_area(mesh: &TriangleMesh, v: VertexId) -> f64 {
    mesh.vertex_faces(v)
        .iter()
        .map(|&f| {
            let [a, b, c] = mesh.faces()[f].map(|x| mesh.position(x));
            triangle_area(a, b, c)
        })
        .sum()
}

/// `ε_i = log(Σ mapped one-ring area / Σ original one-ring area)` for each
/// vertex in `scope`, in scope order.
pub fn area_distortion(original: &TriangleMesh, mapped: &TriangleMesh, scope: &[VertexId]) -> Result<Vec<f64>> {
    check_shared(original, mapped)?;
    scope
        .iter()
        .map(|&v| {
            if v >= original.vertex_count() {
                return Err(Error::OutOfRange {
                    index: v,
                    len: original.vertex_count(),
                });
            }
            let (a0, a1) = (ring_area(original, v), ring_area(mapped, v));
            if !(a0 > MIN_RING_AREA && a1 > MIN_RING_AREA) {
                return Err(Error::ZeroArea { vertex: v });
            }
            Ok(a1.ln() - a0.ln())
        })
        .collect()
}

/// Interior angle at `a` in triangle `a b c`.
fn corner_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let (u, v) = (b - a, c - a);
    u.cross(&v).norm().atan2(u.dot(&v))
}

fn face_angles(mesh: &TriangleMesh, f: FaceId) -> Result<[f64; 3]> {
    let [a, b, c] = mesh.faces()[f].map(|x| mesh.position(x));
    let area = triangle_area(a, b, c);
    if !(area > MIN_FACE_AREA) {
        return Err(Error::DegenerateFace { face: f, area });
    }
    Ok([corner_angle(a, b, c), corner_angle(b, c, a), corner_angle(c, a, b)])
}

/// `η = log(mapped angle / original angle)` for the three corners of each
/// face in `scope`, in face order then corner order.
pub fn angle_distortion(original: &TriangleMesh, mapped: &TriangleMesh, scope: &[FaceId]) -> Result<Vec<f64>> {
    check_shared(original, mapped)?;
    let mut out = Vec::with_capacity(3 * scope.len());
    for &f in scope {
        if f >= original.face_count() {
            return Err(Error::OutOfRange {
                index: f,
                len: original.face_count(),
            });
        }
        let (t0, t1) = (face_angles(original, f)?, face_angles(mapped, f)?);
        out.extend((0..3).map(|c| t1[c].ln() - t0[c].ln()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` uniform bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Rows of `edge_lo,edge_hi,count` under a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge_lo,edge_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.edges[i], self.edges[i + 1], c);
        }
        s
    }
}

/// Uniform bins over `[lo, hi]`; out-of-range samples land in the end bins
/// and non-finite samples are dropped.
pub fn histogram(samples: &[f64], bins: usize, range: [f64; 2]) -> Histogram {
    let [lo, hi] = range;
    assert!(bins >= 1 && lo < hi, "histogram needs at least one bin over a nonempty range");
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0u64; bins];
    for &x in samples.iter().filter(|x| x.is_finite()) {
        let bin = ((x - lo) / width).floor();
        let bin = if bin < 0.0 { 0 } else { (bin as usize).min(bins - 1) };
        counts[bin] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub area_eps: Vec<f64>,
    pub angle_eta: Vec<f64>,
    pub area_hist: Histogram,
    pub angle_hist: Histogram,
}

impl DistortionReport {
    /// Distortion over an ROI: its vertices for ε and the faces with all
    /// three corners selected for η.
    pub fn for_roi(original: &TriangleMesh, mapped: &TriangleMesh, roi: &RoiSelection) -> Result<Self> {
        Self::new(original, mapped, roi.vertices(), &roi.faces(original))
    }

    pub fn new(
        original: &TriangleMesh,
        mapped: &TriangleMesh,
        vertices: &[VertexId],
        faces: &[FaceId],
    ) -> Result<Self> {
        let area_eps = area_distortion(original, mapped, vertices)?;
        let angle_eta = angle_distortion(original, mapped, faces)?;
        Ok(DistortionReport {
            area_hist: histogram(&area_eps, DEFAULT_BINS, DEFAULT_RANGE),
            angle_hist: histogram(&angle_eta, DEFAULT_BINS, DEFAULT_RANGE),
            area_eps,
            angle_eta,
        })
    }

    /// Fraction of corners with `|η| < threshold`.
    pub fn angle_fraction_within(&self, threshold: f64) -> f64 {
        fraction_within(&self.angle_eta, threshold)
    }

    /// Both histograms as `{"area":{edges,counts},"angle":{edges,counts}}`.
    pub fn histograms_json(&self) -> serde_json::Value {
        serde_json::json!({ "area": self.area_hist, "angle": self.angle_hist })
    }
}

/// Fraction of samples with `|x| < threshold`; zero for no samples.
pub fn fraction_within(samples: &[f64], threshold: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|x| x.abs() < threshold).count() as f64 / samples.len() as f64
}
