//! Independent oracles and fixtures shared by the integration tests.
//!
//! Nothing here calls into the library's geometry; oracles recompute from
//! raw coordinates so that agreement is meaningful.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use lmap::{Point, TriangleMesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Interior angle at `a` of triangle `a b c`, from vectors.
pub fn vector_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let (u, v) = (b - a, c - a);
    (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// Angle-deficit curvature recomputed from positions.
pub fn embedded_curvature(mesh: &TriangleMesh) -> Vec<f64> {
    let n = mesh.vertex_count();
    let mut sum = vec![0.0; n];
    let mut edge_faces: HashMap<(usize, usize), u32> = HashMap::new();
    for f in mesh.faces() {
        for c in 0..3 {
            let (a, b, d) = (f[c], f[(c + 1) % 3], f[(c + 2) % 3]);
            sum[a] += vector_angle(mesh.position(a), mesh.position(b), mesh.position(d));
            *edge_faces.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut boundary = vec![false; n];
    for (&(a, b), &count) in &edge_faces {
        if count == 1 {
            boundary[a] = true;
            boundary[b] = true;
        }
    }
    (0..n)
        .map(|v| if boundary[v] { PI - sum[v] } else { 2.0 * PI - sum[v] })
        .collect()
}

/// Largest distance of any point from the least-squares plane through
/// `points` (normal = smallest-eigenvalue eigenvector of the covariance).
pub fn plane_fit_max_distance(points: &[Point]) -> f64 {
    let n = points.len() as f64;
    let c = points.iter().fold([0.0; 3], |acc, p| [acc[0] + p.x / n, acc[1] + p.y / n, acc[2] + p.z / n]);
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = [p.x - c[0], p.y - c[1], p.z - c[2]];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| cov[i][j]);
    let eig = m.symmetric_eigen();
    let (k, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    let normal = eig.eigenvectors.column(k).into_owned();
    points
        .iter()
        .map(|p| (normal[0] * (p.x - c[0]) + normal[1] * (p.y - c[1]) + normal[2] * (p.z - c[2])).abs())
        .fold(0.0, f64::max)
}

// ---- planar Lawson flips with the incircle predicate -----------------------

/// `> 0` when `d` lies strictly inside the circumcircle of ccw `a b c`.
pub fn incircle(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    let row = |p: [f64; 2]| {
        let (x, y) = (p[0] - d[0], p[1] - d[1]);
        [x, y, x * x + y * y]
    };
    let (a, b, c) = (row(a), row(b), row(c));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

pub fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Result of the planar oracle.
pub struct LawsonOutcome {
    pub flips: usize,
    /// Faces of the final triangulation, each rotated so its smallest index
    /// comes first, sorted.
    pub faces: Vec<[usize; 3]>,
}

pub fn canonical_faces(faces: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut out: Vec<[usize; 3]> = faces
        .iter()
        .map(|f| {
            let r = (0..3).min_by_key(|&c| f[c]).unwrap();
            [f[r], f[(r + 1) % 3], f[(r + 2) % 3]]
        })
        .collect();
    out.sort_unstable();
    out
}

/// Lawson flipping on a ccw planar triangulation. Edges are numbered by
/// first appearance while scanning faces and corners; a flipped edge keeps
/// its number. The work queue starts with every interior edge in number
/// order, and a flip of `ij` (with `k` left of `i->j`, `l` right) enqueues
/// `lj, jk, ki, il`.
pub fn planar_lawson(points: &[[f64; 2]], faces: &[[usize; 3]]) -> LawsonOutcome {
    // directed edge -> apex of the face on its left
    let mut apex: HashMap<(usize, usize), usize> = HashMap::new();
    let mut number: HashMap<(usize, usize), usize> = HashMap::new();
    let mut ends: Vec<(usize, usize)> = Vec::new();
    for f in faces {
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            apex.insert((a, b), f[(c + 2) % 3]);
            let key = (a.min(b), a.max(b));
            number.entry(key).or_insert_with(|| {
                ends.push((a, b));
                ends.len() - 1
            });
        }
    }
    let interior = |apex: &HashMap<(usize, usize), usize>, (a, b): (usize, usize)| {
        apex.contains_key(&(a, b)) && apex.contains_key(&(b, a))
    };
    let mut queue: VecDeque<usize> = (0..ends.len()).filter(|&e| interior(&apex, ends[e])).collect();
    let mut queued = vec![false; ends.len()];
    for &e in &queue {
        queued[e] = true;
    }
    let mut flips = 0;
    while let Some(e) = queue.pop_front() {
        queued[e] = false;
        let (i, j) = ends[e];
        if !interior(&apex, (i, j)) {
            continue;
        }
        let k = apex[&(i, j)];
        let l = apex[&(j, i)];
        if incircle(points[i], points[j], points[k], points[l]) <= 0.0 {
            continue;
        }
        // the quad is strictly convex whenever l is inside the circle of a
        // ccw triangle and on the far side of i-j
        assert!(orient(points[k], points[l], points[j]) > 0.0 && orient(points[l], points[k], points[i]) > 0.0);
        apex.remove(&(i, j));
        apex.remove(&(j, i));
        for (a, b, c) in [(k, l, j), (l, j, k), (j, k, l), (l, k, i), (k, i, l), (i, l, k)] {
            apex.insert((a, b), c);
        }
        number.remove(&(i.min(j), i.max(j)));
        number.insert((k.min(l), k.max(l)), e);
        ends[e] = (k, l);
        flips += 1;
        for (a, b) in [(l, j), (j, k), (k, i), (i, l)] {
            let o = number[&(a.min(b), a.max(b))];
            if !queued[o] && interior(&apex, ends[o]) {
                queued[o] = true;
                queue.push_back(o);
            }
        }
    }
    let mut out = Vec::new();
    for (&(a, b), &c) in &apex {
        if a < b && a < c {
            out.push([a, b, c]);
        }
    }
    out.sort_unstable();
    LawsonOutcome { flips, faces: out }
}

/// The random planar fixture: a jittered 5 x 10 lattice of 50 points,
/// triangulated along one diagonal per cell, then scrambled by random
/// flips of strictly convex quads so that long skinny triangles appear.
pub fn planar_random_fixture(seed: u64) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let mut r = rng(seed);
    let (nx, ny) = (10, 5);
    let mut points = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            points.push([
                i as f64 + r.random_range(-0.3..0.3),
                j as f64 + r.random_range(-0.3..0.3),
            ]);
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let (b, c, d) = (a + 1, a + nx + 1, a + nx);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    for _ in 0..200 {
        let f = r.random_range(0..faces.len());
        let c = r.random_range(0..3);
        let (i, j) = (faces[f][c], faces[f][(c + 1) % 3]);
        let k = faces[f][(c + 2) % 3];
        let Some(g) = faces.iter().position(|h| (0..3).any(|x| h[x] == j && h[(x + 1) % 3] == i)) else {
            continue;
        };
        let l = faces[g].iter().copied().find(|&v| v != i && v != j).unwrap();
        let exists = faces.iter().any(|h| h.contains(&k) && h.contains(&l));
        let convex = orient(points[k], points[l], points[j]) > 1e-3 && orient(points[l], points[k], points[i]) > 1e-3;
        if convex && !exists {
            faces[f] = [k, l, j];
            faces[g] = [l, k, i];
        }
    }
    (points, faces)
}

pub fn planar_mesh(points: &[[f64; 2]], faces: &[[usize; 3]]) -> TriangleMesh {
    TriangleMesh::new(points.iter().map(|p| Point::new(p[0], p[1], 0.0)).collect(), faces.to_vec()).unwrap()
}

// ---- single-vertex fan -----------------------------------------------------

/// Apex angle of an isoceles triangle with legs `leg` and base `base`, by
/// the law of sines.
pub fn isoceles_apex_angle(leg: f64, base: f64) -> f64 {
    2.0 * (base / (2.0 * leg)).asin()
}

/// Solves `m * apex_angle(e^u * leg, base) = 2π` for `u` by bisection.
pub fn fan_bisection(m: usize, leg: f64, base: f64) -> f64 {
    let f = |u: f64| m as f64 * isoceles_apex_angle(u.exp() * leg, base) - 2.0 * PI;
    // the angle sum falls as the legs lengthen; legs must exceed base / 2
    let (mut lo, mut hi) = (((base / 2.0) / leg).ln() + 1e-12, 5.0f64);
    assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---- finite differences ----------------------------------------------------

pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// A jittered `nx x ny` grid with random heights.
pub fn random_patch(seed: u64, nx: usize, ny: usize, jitter: f64, height: f64) -> TriangleMesh {
    let mut r = rng(seed);
    let mesh = lmap::fixtures::grid(nx, ny, 1.0, |_, _| 0.0);
    let positions = mesh
        .positions()
        .iter()
        .map(|p| {
            Point::new(
                p.x + r.random_range(-jitter..jitter),
                p.y + r.random_range(-jitter..jitter),
                r.random_range(-height..height),
            )
        })
        .collect();
    mesh.with_positions(positions)
}
