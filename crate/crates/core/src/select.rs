//! Geodesic-ball ROI selection over the edge graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::topology::VertexId;

#[derive(PartialEq)]
struct Entry(f64, VertexId);

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (distance, index)
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Edge-graph distances from `seed`, exploring only up to `limit`.
/// Unreached vertices are `f64::INFINITY`.
pub fn graph_distances(mesh: &TriangleMesh, seed: VertexId, limit: f64) -> Result<Vec<f64>> {
    let n = mesh.vertex_count();
    if seed >= n {
        return Err(Error::OutOfRange { index: seed, len: n });
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::from([Entry(0.0, seed)]);
    dist[seed] = 0.0;
    while let Some(Entry(d, v)) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &w in mesh.neighbors(v) {
            let nd = d + mesh.edge_length(v, w);
            if nd <= limit && nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    Ok(dist)
}

/// Ascending vertex ids within edge-graph distance `radius` of `seed`.
pub fn geodesic_ball(mesh: &TriangleMesh, seed: VertexId, radius: f64) -> Result<Vec<VertexId>> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidRoi(format!("radius {radius} must be non-negative")));
    }
    let dist = graph_distances(mesh, seed, radius)?;
    Ok((0..dist.len()).filter(|&v| dist[v] <= radius).collect())
}
