//! Halfedge connectivity for oriented triangle meshes.
//!
//! Halfedges are implicit: halfedge `3 * f + c` runs from corner `c` of face
//! `f` to corner `c + 1`. Each halfedge knows its twin (if any) and the
//! undirected edge it belongs to. Edge ids are stable across flips: a flipped
//! edge keeps its id and only changes endpoints.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type FaceId = usize;
pub type EdgeId = usize;
pub type HalfedgeId = usize;

#[inline]
pub fn face_of(h: HalfedgeId) -> FaceId {
    h / 3
}

#[inline]
pub fn next(h: HalfedgeId) -> HalfedgeId {
    3 * (h / 3) + (h + 1) % 3
}

#[inline]
pub fn prev(h: HalfedgeId) -> HalfedgeId {
    3 * (h / 3) + (h + 2) % 3
}

/// Endpoints of a flip, in vertex ids: `removed` is the old diagonal and
/// `added` the new one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FlipRecord {
    pub removed: [VertexId; 2],
    pub added: [VertexId; 2],
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    vertex_count: usize,
    faces: Vec<[VertexId; 3]>,
    twin: Vec<Option<HalfedgeId>>,
    edge_of: Vec<EdgeId>,
    /// One halfedge per edge; interior edges store either side.
    edge_halfedge: Vec<HalfedgeId>,
    edge_lookup: HashMap<(VertexId, VertexId), EdgeId>,
}

#[inline]
fn key(a: VertexId, b: VertexId) -> (VertexId, VertexId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Triangulation {
    /// Builds connectivity, rejecting out-of-range or repeated vertex ids,
    /// edges shared by more than two faces, and inconsistent orientation.
    pub fn new(vertex_count: usize, faces: Vec<[VertexId; 3]>) -> Result<Self> {
        let mut directed: HashMap<(VertexId, VertexId), HalfedgeId> =
            HashMap::with_capacity(faces.len() * 3);
        let mut undirected_count: HashMap<(VertexId, VertexId), u32> =
            HashMap::with_capacity(faces.len() * 3 / 2 + 1);

        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= vertex_count {
                    return Err(Error::OutOfRange {
                        index: v,
                        len: vertex_count,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                return Err(Error::Topology(format!(
                    "face {f} repeats a vertex: {face:?}"
                )));
            }
            for c in 0..3 {
                let (a, b) = (face[c], face[(c + 1) % 3]);
                *undirected_count.entry(key(a, b)).or_default() += 1;
                // duplicates are classified below
                directed.insert((a, b), 3 * f + c);
            }
        }

        for (&(a, b), &count) in &undirected_count {
            if count > 2 {
                return Err(Error::Topology(format!(
                    "non-manifold edge ({a}, {b}) shared by {count} faces"
                )));
            }
        }
        // With at most two faces per edge, a repeated directed halfedge can
        // only mean the two faces disagree on orientation.
        let halfedge_total: usize = undirected_count.values().map(|&c| c as usize).sum();
        if directed.len() != halfedge_total {
            let mut seen = HashMap::new();
            for (f, face) in faces.iter().enumerate() {
                for c in 0..3 {
                    let (a, b) = (face[c], face[(c + 1) % 3]);
                    if let Some(g) = seen.insert((a, b), f) {
                        return Err(Error::Topology(format!(
                            "faces {g} and {f} traverse edge ({a}, {b}) in the same direction"
                        )));
                    }
                }
            }
        }

        let mut twin = vec![None; faces.len() * 3];
        let mut edge_of = vec![usize::MAX; faces.len() * 3];
        let mut edge_halfedge = Vec::with_capacity(undirected_count.len());
        let mut edge_lookup = HashMap::with_capacity(undirected_count.len());
        for (f, face) in faces.iter().enumerate() {
            for c in 0..3 {
                let h = 3 * f + c;
                let (a, b) = (face[c], face[(c + 1) % 3]);
                if let Some(&t) = directed.get(&(b, a)) {
                    twin[h] = Some(t);
                }
                if edge_of[h] == usize::MAX {
                    let e = edge_halfedge.len();
                    edge_halfedge.push(h);
                    edge_lookup.insert(key(a, b), e);
                    edge_of[h] = e;
                    if let Some(t) = twin[h] {
                        edge_of[t] = e;
                    }
                }
            }
        }

        Ok(Triangulation {
            vertex_count,
            faces,
            twin,
            edge_of,
            edge_halfedge,
            edge_lookup,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_halfedge.len()
    }

    pub fn faces(&self) -> &[[VertexId; 3]] {
        &self.faces
    }

    pub fn face(&self, f: FaceId) -> [VertexId; 3] {
        self.faces[f]
    }

    /// Source vertex of a halfedge.
    pub fn tail(&self, h: HalfedgeId) -> VertexId {
        self.faces[h / 3][h % 3]
    }

    /// Target vertex of a halfedge.
    pub fn head(&self, h: HalfedgeId) -> VertexId {
        self.faces[h / 3][(h + 1) % 3]
    }

    /// Vertex across the face from a halfedge.
    pub fn opposite(&self, h: HalfedgeId) -> VertexId {
        self.faces[h / 3][(h + 2) % 3]
    }

    pub fn twin(&self, h: HalfedgeId) -> Option<HalfedgeId> {
        self.twin[h]
    }

    pub fn edge_of(&self, h: HalfedgeId) -> EdgeId {
        self.edge_of[h]
    }

    pub fn edge_halfedge(&self, e: EdgeId) -> HalfedgeId {
        self.edge_halfedge[e]
    }

    pub fn edge_vertices(&self, e: EdgeId) -> [VertexId; 2] {
        let h = self.edge_halfedge[e];
        [self.tail(h), self.head(h)]
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.twin[self.edge_halfedge[e]].is_none()
    }

    pub fn find_edge(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.edge_lookup.get(&key(a, b)).copied()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.twin.iter().filter(|t| t.is_none()).count()
    }

    /// Per-vertex flag: true when the vertex touches a boundary halfedge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertex_count];
        for (h, t) in self.twin.iter().enumerate() {
            if t.is_none() {
                flags[self.tail(h)] = true;
                flags[self.head(h)] = true;
            }
        }
        flags
    }

    /// Number of closed boundary cycles.
    pub fn boundary_loop_count(&self) -> usize {
        let mut outgoing: HashMap<VertexId, Vec<HalfedgeId>> = HashMap::new();
        for (h, t) in self.twin.iter().enumerate() {
            if t.is_none() {
                outgoing.entry(self.tail(h)).or_default().push(h);
            }
        }
        let mut visited = vec![false; self.twin.len()];
        let mut loops = 0;
        let mut starts: Vec<HalfedgeId> = outgoing.values().flatten().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited[start] {
                continue;
            }
            loops += 1;
            let mut h = start;
            loop {
                visited[h] = true;
                let candidates = &outgoing[&self.head(h)];
                match candidates.iter().find(|&&c| !visited[c]) {
                    Some(&c) => h = c,
                    None => break,
                }
            }
        }
        loops
    }

    /// Rotates an interior edge inside its two-face quadrilateral.
    ///
    /// Faces `[i, j, k]` and `[j, i, l]` become `[k, l, j]` and `[l, k, i]`.
    /// Geometric validity is the caller's concern; this only rejects
    /// boundary edges and flips that would duplicate an existing edge.
    pub fn flip(&mut self, e: EdgeId) -> Result<FlipRecord> {
        let h = self.edge_halfedge[e];
        let t = self.twin[h].ok_or(Error::NotFlippable {
            edge: e,
            reason: "boundary edge",
        })?;
        let (f0, f1) = (face_of(h), face_of(t));
        let (i, j, k) = (self.tail(h), self.head(h), self.opposite(h));
        let l = self.opposite(t);
        if k == l || self.edge_lookup.contains_key(&key(k, l)) {
            return Err(Error::NotFlippable {
                edge: e,
                reason: "new diagonal already exists",
            });
        }

        // Outer halfedges: j->k and k->i in f0, i->l and l->j in f1.
        let jk = next(h);
        let ki = prev(h);
        let il = next(t);
        let lj = prev(t);
        let outer = |tri: &Self, x: HalfedgeId| (tri.twin[x], tri.edge_of[x]);
        let (jk_twin, jk_edge) = outer(self, jk);
        let (ki_twin, ki_edge) = outer(self, ki);
        let (il_twin, il_edge) = outer(self, il);
        let (lj_twin, lj_edge) = outer(self, lj);

        self.faces[f0] = [k, l, j];
        self.faces[f1] = [l, k, i];
        let (a0, a1, a2) = (3 * f0, 3 * f0 + 1, 3 * f0 + 2);
        let (b0, b1, b2) = (3 * f1, 3 * f1 + 1, 3 * f1 + 2);

        // f0: k->l (new), l->j, j->k ; f1: l->k (new), k->i, i->l
        let link = |tri: &mut Self, x: HalfedgeId, tw: Option<HalfedgeId>, edge: EdgeId| {
            tri.twin[x] = tw;
            tri.edge_of[x] = edge;
            if let Some(y) = tw {
                tri.twin[y] = Some(x);
            }
            tri.edge_halfedge[edge] = x;
        };
        link(self, a0, Some(b0), e);
        link(self, a1, lj_twin, lj_edge);
        link(self, a2, jk_twin, jk_edge);
        link(self, b1, ki_twin, ki_edge);
        link(self, b2, il_twin, il_edge);
        self.twin[b0] = Some(a0);
        self.edge_of[b0] = e;

        self.edge_lookup.remove(&key(i, j));
        self.edge_lookup.insert(key(k, l), e);

        Ok(FlipRecord {
            removed: [i, j],
            added: [k, l],
        })
    }

    /// Faces incident to each vertex, in ascending face order.
    pub fn vertex_faces(&self) -> Vec<Vec<FaceId>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for (f, face) in self.faces.iter().enumerate() {
            for &v in face {
                out[v].push(f);
            }
        }
        out
    }

    /// Sorted neighbor lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.vertex_count];
        for e in 0..self.edge_count() {
            let [a, b] = self.edge_vertices(e);
            out[a].push(b);
            out[b].push(a);
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }
}
