//! Embedded triangle meshes, regions of interest and submesh extraction.

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::topology::{face_of, FaceId, FlipRecord, Triangulation, VertexId};

/// Faces with area at or below this are rejected at load time.
pub const MIN_FACE_AREA: f64 = 1e-12;

pub type Point = Point3<f64>;

/// Twice-area cross product of a triangle, oriented by vertex order.
#[inline]
pub fn triangle_cross(a: &Point, b: &Point, c: &Point) -> Vector3<f64> {
    (b - a).cross(&(c - a))
}

#[inline]
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * triangle_cross(a, b, c).norm()
}

/// An oriented manifold (possibly bounded) triangle mesh embedded in R^3.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    positions: Vec<Point>,
    topology: Triangulation,
    vertex_faces: Vec<Vec<FaceId>>,
    neighbors: Vec<Vec<VertexId>>,
}

impl TriangleMesh {
    /// Builds and validates a mesh. Every face must be a non-degenerate
    /// triangle with consistent orientation and manifold edges.
    pub fn new(positions: Vec<Point>, faces: Vec<[VertexId; 3]>) -> Result<Self> {
        let mesh = Self::from_parts(positions, faces)?;
        for (f, face) in mesh.topology.faces().iter().enumerate() {
            let [a, b, c] = face.map(|v| &mesh.positions[v]);
            let area = triangle_area(a, b, c);
            // also catches NaN coordinates
            if !(area > MIN_FACE_AREA) {
                return Err(Error::DegenerateFace { face: f, area });
            }
        }
        Ok(mesh)
    }

    /// Builds a mesh without the face-area check. Used for deformed
    /// geometry, where connectivity is inherited from a validated mesh.
    pub fn from_parts(positions: Vec<Point>, faces: Vec<[VertexId; 3]>) -> Result<Self> {
        let topology = Triangulation::new(positions.len(), faces)?;
        let vertex_faces = topology.vertex_faces();
        let neighbors = topology.vertex_neighbors();
        Ok(TriangleMesh {
            positions,
            topology,
            vertex_faces,
            neighbors,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.topology.face_count()
    }

    pub fn edge_count(&self) -> usize {
        self.topology.edge_count()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn position(&self, v: VertexId) -> &Point {
        &self.positions[v]
    }

    pub fn faces(&self) -> &[[VertexId; 3]] {
        self.topology.faces()
    }

    pub fn topology(&self) -> &Triangulation {
        &self.topology
    }

    pub fn vertex_faces(&self, v: VertexId) -> &[FaceId] {
        &self.vertex_faces[v]
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.neighbors[v]
    }

    pub fn boundary_vertices(&self) -> Vec<bool> {
        self.topology.boundary_vertices()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.topology.boundary_edge_count()
    }

    pub fn boundary_loop_count(&self) -> usize {
        self.topology.boundary_loop_count()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.face_count() as i64
    }

    pub fn edge_length(&self, a: VertexId, b: VertexId) -> f64 {
        (self.positions[a] - self.positions[b]).norm()
    }

    pub fn mean_edge_length(&self) -> f64 {
        let n = self.edge_count();
        if n == 0 {
            return 0.0;
        }
        let total: f64 = (0..n)
            .map(|e| {
                let [a, b] = self.topology.edge_vertices(e);
                self.edge_length(a, b)
            })
            .sum();
        total / n as f64
    }

    /// Same connectivity, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Point>) -> TriangleMesh {
        assert_eq!(positions.len(), self.positions.len());
        TriangleMesh {
            positions,
            ..self.clone()
        }
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [Point] {
        &mut self.positions
    }

    /// Replays a connectivity flip recorded on an intrinsic triangulation
    /// over the same vertex set.
    pub fn apply_flip(&mut self, record: &FlipRecord) -> Result<()> {
        let [i, j] = record.removed;
        let e = self.topology.find_edge(i, j).ok_or_else(|| {
            Error::Topology(format!("cannot replay flip: edge ({i}, {j}) is absent"))
        })?;
        let applied = self.topology.flip(e)?;
        let mut expected = record.added;
        let mut got = applied.added;
        expected.sort_unstable();
        got.sort_unstable();
        if expected != got {
            return Err(Error::Topology(format!(
                "flip replay diverged: expected diagonal {:?}, got {:?}",
                record.added, applied.added
            )));
        }
        let [k, l] = applied.added;
        let h = self.topology.edge_halfedge(e);
        let t = self.topology.twin(h).expect("flipped edge is interior");
        for f in [face_of(h), face_of(t)] {
            let corners = self.topology.faces()[f];
            for v in [i, j, k, l] {
                let list = &mut self.vertex_faces[v];
                match (list.binary_search(&f), corners.contains(&v)) {
                    (Ok(at), false) => {
                        list.remove(at);
                    }
                    (Err(at), true) => list.insert(at, f),
                    _ => {}
                }
            }
        }
        self.neighbors[i].retain(|&x| x != j);
        self.neighbors[j].retain(|&x| x != i);
        for (a, b) in [(k, l), (l, k)] {
            let list = &mut self.neighbors[a];
            let at = list.binary_search(&b).unwrap_or_else(|x| x);
            list.insert(at, b);
        }
        Ok(())
    }
}

/// A vertex subset together with its interior/rim split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiSelection {
    vertices: Vec<VertexId>,
    interior: Vec<VertexId>,
    rim: Vec<VertexId>,
    member: Vec<bool>,
}

impl RoiSelection {
    /// Deduplicates `indices` and classifies each vertex against `mesh`.
    /// Empty selections are allowed here; flows reject them later.
    pub fn new(mesh: &TriangleMesh, indices: impl IntoIterator<Item = VertexId>) -> Result<Self> {
        let n = mesh.vertex_count();
        let mut member = vec![false; n];
        for v in indices {
            if v >= n {
                return Err(Error::OutOfRange { index: v, len: n });
            }
            member[v] = true;
        }
        let vertices: Vec<VertexId> = (0..n).filter(|&v| member[v]).collect();
        let (interior, rim) = vertices
            .iter()
            .partition(|&&v| mesh.neighbors(v).iter().all(|&w| member[w]));
        Ok(RoiSelection {
            vertices,
            interior,
            rim,
            member,
        })
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    pub fn rim(&self) -> &[VertexId] {
        &self.rim
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.member.get(v).copied().unwrap_or(false)
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        self.contains(v) && self.interior.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Faces whose three vertices are all selected.
    pub fn faces(&self, mesh: &TriangleMesh) -> Vec<FaceId> {
        mesh.faces()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.iter().all(|&v| self.contains(v)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// A mesh cut out of a parent, with vertex and face correspondences.
#[derive(Debug, Clone)]
pub struct Submesh {
    pub mesh: TriangleMesh,
    /// Submesh vertex id -> parent vertex id (ascending).
    pub to_parent: Vec<VertexId>,
    /// Parent vertex id -> submesh vertex id.
    pub from_parent: Vec<Option<VertexId>>,
    /// Submesh face id -> parent face id.
    pub parent_faces: Vec<FaceId>,
}

/// Extracts every face whose three vertices lie in the selection. Vertices
/// are renumbered in ascending parent order, so selecting everything of a
/// mesh without isolated vertices yields the identity map.
pub fn extract_roi_submesh(mesh: &TriangleMesh, roi: &RoiSelection) -> Result<Submesh> {
    let parent_faces = roi.faces(mesh);
    if parent_faces.is_empty() {
        return Err(Error::EmptySubmesh);
    }
    let mut used = vec![false; mesh.vertex_count()];
    for &f in &parent_faces {
        for v in mesh.faces()[f] {
            used[v] = true;
        }
    }
    let to_parent: Vec<VertexId> = (0..mesh.vertex_count()).filter(|&v| used[v]).collect();
    let mut from_parent = vec![None; mesh.vertex_count()];
    for (local, &v) in to_parent.iter().enumerate() {
        from_parent[v] = Some(local);
    }
    let positions = to_parent.iter().map(|&v| mesh.positions[v]).collect();
    let faces = parent_faces
        .iter()
        .map(|&f| mesh.faces()[f].map(|v| from_parent[v].expect("face vertex is used")))
        .collect();
    let sub = TriangleMesh::new(positions, faces)?;
    Ok(Submesh {
        mesh: sub,
        to_parent,
        from_parent,
        parent_faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tetrahedron_euler() {
        let m = fixtures::tetrahedron();
        assert_eq!((m.vertex_count(), m.edge_count(), m.face_count()), (4, 6, 4));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn torus_and_disk_euler() {
        assert_eq!(fixtures::torus(12, 8, 2.0, 0.7).euler_characteristic(), 0);
        assert_eq!(fixtures::grid(5, 4, 1.0, |_, _| 0.0).euler_characteristic(), 1);
    }

    #[test]
    fn edge_face_relation() {
        for m in [fixtures::tetrahedron(), fixtures::icosahedron(), fixtures::torus(10, 6, 2.0, 0.5)] {
            assert_eq!(3 * m.face_count(), 2 * m.edge_count());
        }
        let g = fixtures::grid(6, 5, 1.0, |_, _| 0.0);
        assert_eq!(3 * g.face_count(), 2 * g.edge_count() - g.boundary_edge_count());
    }

    #[test]
    fn degenerate_face_rejected() {
        let p = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(
            TriangleMesh::new(p, vec![[0, 1, 2]]),
            Err(Error::DegenerateFace { face: 0, .. })
        ));
    }

    #[test]
    fn roi_partition_on_tetrahedron() {
        let m = fixtures::tetrahedron();
        let roi = RoiSelection::new(&m, [0, 1, 2, 2]).unwrap();
        assert_eq!(roi.vertices(), &[0, 1, 2]);
        assert!(roi.interior().is_empty());
        assert_eq!(roi.rim(), &[0, 1, 2]);
        assert!(matches!(
            RoiSelection::new(&m, [99]),
            Err(Error::OutOfRange { index: 99, .. })
        ));
    }

    #[test]
    fn roi_interior_on_grid() {
        let g = fixtures::grid(3, 3, 1.0, |_, _| 0.0);
        let roi = RoiSelection::new(&g, 0..9).unwrap();
        // grid vertices all selected: everything is interior to the selection
        assert_eq!(roi.interior().len(), 9);
        // the centre also neighbours corners 0 and 8 through the diagonals
        let roi = RoiSelection::new(&g, [1, 3, 4, 5, 7]).unwrap();
        assert!(roi.interior().is_empty());
        let roi = RoiSelection::new(&g, [0, 1, 3, 4, 5, 7, 8]).unwrap();
        // corners 0 and 8 only touch selected vertices as well
        assert_eq!(roi.interior(), &[0, 4, 8]);
        assert_eq!(roi.rim(), &[1, 3, 5, 7]);
    }

    #[test]
    fn submesh_of_everything_is_identity() {
        let g = fixtures::grid(4, 4, 1.0, |x, y| 0.1 * x * y);
        let roi = RoiSelection::new(&g, 0..g.vertex_count()).unwrap();
        let sub = extract_roi_submesh(&g, &roi).unwrap();
        assert_eq!(sub.to_parent, (0..g.vertex_count()).collect::<Vec<_>>());
        assert_eq!(sub.mesh.faces(), g.faces());
        assert_eq!(sub.mesh.positions(), g.positions());
    }

    #[test]
    fn submesh_single_face_and_empty() {
        let m = fixtures::tetrahedron();
        let f = m.faces()[0];
        let roi = RoiSelection::new(&m, f).unwrap();
        let sub = extract_roi_submesh(&m, &roi).unwrap();
        assert_eq!(sub.mesh.face_count(), 1);
        assert_eq!(sub.parent_faces, vec![0]);

        let roi = RoiSelection::new(&m, [f[0], f[1]]).unwrap();
        assert!(matches!(extract_roi_submesh(&m, &roi), Err(Error::EmptySubmesh)));
    }

    #[test]
    fn replayed_flip_matches_rebuild() {
        let mut g = fixtures::grid(3, 3, 1.0, |_, _| 0.0);
        let [a, b] = g.topology().edge_vertices(
            (0..g.edge_count())
                .find(|&e| !g.topology().is_boundary_edge(e))
                .unwrap(),
        );
        let mut scratch = g.topology().clone();
        let rec = scratch.flip(scratch.find_edge(a, b).unwrap()).unwrap();
        g.apply_flip(&rec).unwrap();
        let rebuilt = TriangleMesh::from_parts(g.positions().to_vec(), g.faces().to_vec()).unwrap();
        for v in 0..g.vertex_count() {
            assert_eq!(g.neighbors(v), rebuilt.neighbors(v));
            assert_eq!(g.vertex_faces(v), rebuilt.vertex_faces(v));
        }
    }
}
