//! Synthetic meshes with known topology and curvature, used by tests,
//! benchmarks and the command line tools.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::mesh::{Point, TriangleMesh};
use crate::topology::VertexId;

/// Orients every face of a convex, origin-centred polyhedron outward.
fn orient_outward(positions: &[Point], faces: &mut [[VertexId; 3]]) {
    for f in faces.iter_mut() {
        let [a, b, c] = f.map(|v| positions[v]);
        let n = (b - a).cross(&(c - a));
        let centroid = (a.coords + b.coords + c.coords) / 3.0;
        if n.dot(&centroid) < 0.0 {
            f.swap(1, 2);
        }
    }
}

fn convex(positions: Vec<Point>, mut faces: Vec<[VertexId; 3]>) -> TriangleMesh {
    orient_outward(&positions, &mut faces);
    TriangleMesh::new(positions, faces).expect("fixture is valid")
}

/// Regular tetrahedron inscribed in the cube [-1, 1]^3.
pub fn tetrahedron() -> TriangleMesh {
    let p = vec![
        Point::new(1.0, 1.0, 1.0),
        Point::new(1.0, -1.0, -1.0),
        Point::new(-1.0, 1.0, -1.0),
        Point::new(-1.0, -1.0, 1.0),
    ];
    convex(p, vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]])
}

/// Unit cube centred at the origin, two triangles per side.
pub fn cube() -> TriangleMesh {
    let mut p = Vec::new();
    for i in 0..8 {
        let c = |bit: usize| if i & bit != 0 { 0.5 } else { -0.5 };
        p.push(Point::new(c(1), c(2), c(4)));
    }
    let quads = [
        [0, 1, 3, 2],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [0, 2, 6, 4],
        [1, 3, 7, 5],
    ];
    let faces = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    convex(p, faces)
}

pub fn icosahedron() -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let p = vec![
        Point::new(-1.0, t, 0.0),
        Point::new(1.0, t, 0.0),
        Point::new(-1.0, -t, 0.0),
        Point::new(1.0, -t, 0.0),
        Point::new(0.0, -1.0, t),
        Point::new(0.0, 1.0, t),
        Point::new(0.0, -1.0, -t),
        Point::new(0.0, 1.0, -t),
        Point::new(t, 0.0, -1.0),
        Point::new(t, 0.0, 1.0),
        Point::new(-t, 0.0, -1.0),
        Point::new(-t, 0.0, 1.0),
    ];
    let faces = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    convex(p, faces)
}

/// Torus with `nu` segments around the main ring and `nv` around the tube.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> TriangleMesh {
    assert!(nu >= 3 && nv >= 3);
    let mut p = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let a = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let b = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * b.cos();
            p.push(Point::new(r * a.cos(), r * a.sin(), minor * b.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(p, faces).expect("torus fixture is valid")
}

/// Grid vertex id for column `i`, row `j`.
pub fn grid_index(nx: usize, i: usize, j: usize) -> VertexId {
    j * nx + i
}

/// `nx` by `ny` vertex grid with the given spacing, centred at the origin
/// in x and y, lifted by `height(x, y)`. Each cell is split along its
/// (i, j)-(i+1, j+1) diagonal.
pub fn grid(nx: usize, ny: usize, spacing: f64, height: impl Fn(f64, f64) -> f64) -> TriangleMesh {
    assert!(nx >= 2 && ny >= 2);
    let x0 = -0.5 * spacing * (nx - 1) as f64;
    let y0 = -0.5 * spacing * (ny - 1) as f64;
    let mut p = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = x0 + spacing * i as f64;
            let y = y0 + spacing * j as f64;
            p.push(Point::new(x, y, height(x, y)));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = grid_index(nx, i, j);
            let b = grid_index(nx, i + 1, j);
            let c = grid_index(nx, i + 1, j + 1);
            let d = grid_index(nx, i, j + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(p, faces).expect("grid fixture is valid")
}

/// Gaussian bump `height * exp(-r^2 / (2 sigma^2))` on an `n` by `n` unit grid.
pub fn gaussian_bump(n: usize, height: f64, sigma: f64) -> TriangleMesh {
    grid(n, n, 1.0, |x, y| {
        height * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    })
}

/// The standard flattening fixture: 21 x 21 unit grid, bump of height 0.5
/// and sigma 1 at the centre vertex.
pub fn bump_fixture() -> TriangleMesh {
    gaussian_bump(21, 0.5, 1.0)
}

/// Centre vertex of an odd `n` by `n` grid.
pub fn grid_center(n: usize) -> VertexId {
    grid_index(n, n / 2, n / 2)
}

/// Vertices within Euclidean distance `radius` of `center`, measured in
/// the xy-plane.
pub fn planar_disk(mesh: &TriangleMesh, center: VertexId, radius: f64) -> Vec<VertexId> {
    let c = mesh.position(center);
    (0..mesh.vertex_count())
        .filter(|&v| {
            let p = mesh.position(v);
            Vector3::new(p.x - c.x, p.y - c.y, 0.0).norm() <= radius + 1e-9
        })
        .collect()
}
