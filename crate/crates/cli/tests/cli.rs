use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lmap::io::{parse_roi_indices, save_mesh};
use lmap::{fixtures, TriangleMesh};
use serde_json::Value;
use tempfile::TempDir;

fn lmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lmap")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn save(dir: &TempDir, name: &str, mesh: &TriangleMesh) -> PathBuf {
    let path = dir.path().join(name);
    save_mesh(mesh, &path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn analyze(path: &Path) -> Value {
    let out = lmap(&["analyze", s(path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn analyze_examples() {
    let dir = TempDir::new().unwrap();
    let tet = analyze(&save(&dir, "tet.obj", &fixtures::tetrahedron()));
    assert_eq!((tet["v"].as_u64(), tet["f"].as_u64(), tet["chi"].as_i64()), (Some(4), Some(4), Some(2)));
    assert!((tet["curvature_sum"].as_f64().unwrap() - 12.56637).abs() < 1e-5);
    assert!(tet["gb_residual"].as_f64().unwrap().abs() < 1e-9);

    let disk = analyze(&save(&dir, "disk.off", &fixtures::grid(9, 9, 1.0, |_, _| 0.0)));
    assert_eq!((disk["chi"].as_i64(), disk["boundary_loops"].as_u64()), (Some(1), Some(1)));
    assert!(disk["gb_residual"].as_f64().unwrap().abs() < 1e-9);

    let torus = analyze(&save(&dir, "torus.obj", &fixtures::torus(24, 12, 2.0, 0.7)));
    assert_eq!(torus["chi"].as_i64(), Some(0));
    assert!(torus["curvature_sum"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn io_and_topology_errors() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&lmap(&["analyze", s(&dir.path().join("missing.obj"))])), 2);

    let bad = dir.path().join("bad.obj");
    std::fs::write(&bad, "v 0 0 0\nv 1 0 x\n").unwrap();
    assert_eq!(code(&lmap(&["analyze", s(&bad)])), 2);

    // three faces on one edge
    let fin = dir.path().join("fin.obj");
    std::fs::write(&fin, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n").unwrap();
    assert_eq!(code(&lmap(&["analyze", s(&fin)])), 3);

    assert_eq!(code(&lmap(&["analyze"])), 1);
    assert_eq!(code(&lmap(&["frobnicate"])), 1);
}

fn select(mesh: &Path, seed: usize, radius: f64, out: &Path) -> Output {
    lmap(&["select", s(mesh), "--seed", &seed.to_string(), "--radius", &radius.to_string(), "-o", s(out)])
}

fn read_roi(path: &Path) -> Vec<usize> {
    parse_roi_indices(std::fs::read(path).unwrap().as_slice()).unwrap()
}

#[test]
fn select_examples() {
    let dir = TempDir::new().unwrap();
    let bump = save(&dir, "bump.obj", &fixtures::bump_fixture());
    let center = fixtures::grid_center(21);
    let roi = dir.path().join("roi.txt");

    assert!(select(&bump, center, 0.0, &roi).status.success());
    assert_eq!(read_roi(&roi), vec![center]);

    assert!(select(&bump, center, 1e6, &roi).status.success());
    assert_eq!(read_roi(&roi), (0..21 * 21).collect::<Vec<_>>());

    assert!(select(&bump, center, 3.0, &roi).status.success());
    let first = std::fs::read(&roi).unwrap();
    let again = dir.path().join("again.txt");
    assert!(select(&bump, center, 3.0, &again).status.success());
    assert_eq!(first, std::fs::read(&again).unwrap());
    let ball = read_roi(&roi);
    assert!(ball.contains(&center) && ball.len() > 9);

    assert_eq!(code(&select(&bump, 10_000, 3.0, &roi)), 1);
    assert_eq!(code(&select(&bump, center, -1.0, &roi)), 1);
}

struct Flattened {
    mesh: String,
    report: Value,
    report_bytes: Vec<u8>,
    distortion: Vec<u8>,
}

fn flatten(dir: &TempDir, tag: &str, mesh: &Path, extra: &[&str], threads: &str) -> Flattened {
    let out = dir.path().join(format!("{tag}.obj"));
    let report = dir.path().join(format!("{tag}.json"));
    let dist = dir.path().join(format!("{tag}-dist.json"));
    let mut args = vec!["flatten", s(mesh), "-o", s(&out), "--report", s(&report), "--distortion", s(&dist)];
    args.extend_from_slice(extra);
    let res = Command::new(env!("CARGO_BIN_EXE_lmap"))
        .args(&args)
        .env("LMAP_THREADS", threads)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report_bytes = std::fs::read(&report).unwrap();
    Flattened {
        mesh: std::fs::read_to_string(&out).unwrap(),
        report: serde_json::from_slice(&report_bytes).unwrap(),
        report_bytes,
        distortion: std::fs::read(&dist).unwrap(),
    }
}

fn bump_with_disk(dir: &TempDir) -> (PathBuf, PathBuf, Vec<usize>) {
    let mesh = fixtures::bump_fixture();
    let roi: Vec<usize> = fixtures::planar_disk(&mesh, fixtures::grid_center(21), 3.0);
    let path = save(dir, "bump.obj", &mesh);
    let roi_path = dir.path().join("roi.txt");
    std::fs::write(&roi_path, roi.iter().map(|v| format!("{v}\n")).collect::<String>()).unwrap();
    (path, roi_path, roi)
}

#[test]
fn flatten_bump_with_roi_file() {
    let dir = TempDir::new().unwrap();
    let (mesh, roi_path, roi) = bump_with_disk(&dir);
    let out = flatten(&dir, "a", &mesh, &["--roi", s(&roi_path)], "2");

    let input = std::fs::read_to_string(&mesh).unwrap();
    let vertex_lines = |text: &str| text.lines().filter(|l| l.starts_with("v ")).map(str::to_owned).collect::<Vec<_>>();
    let (before, after) = (vertex_lines(&input), vertex_lines(&out.mesh));
    assert_eq!(before.len(), after.len());
    for v in 0..before.len() {
        if !roi.contains(&v) {
            assert_eq!(before[v], after[v], "vertex {v} moved");
        }
    }

    let r = &out.report;
    assert_eq!(r["schema"], "lmap/1");
    let steps = r["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 5);
    assert!(steps.iter().all(|s| s["flow"]["converged"] == true));
    assert!(r["curvature_after"]["max_abs"].as_f64().unwrap() < 0.02);
    assert!(r["timings"]["total_ms"].as_f64().unwrap() >= 0.0);

    let d: Value = serde_json::from_slice(&out.distortion).unwrap();
    assert_eq!(d["area_eps"].as_array().unwrap().len(), roi.len());
    assert_eq!(d["angle_hist"]["counts"].as_array().unwrap().len(), 64);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (mesh, _, _) = bump_with_disk(&dir);
    let center = fixtures::grid_center(21).to_string();
    let args = ["--seed", center.as_str(), "--radius", "3", "--steps", "3", "--no-timing"];
    let a = flatten(&dir, "a", &mesh, &args, "1");
    let b = flatten(&dir, "b", &mesh, &args, "4");
    assert_eq!(a.mesh, b.mesh);
    assert_eq!(a.report_bytes, b.report_bytes);
    assert_eq!(a.distortion, b.distortion);
    assert!(a.report.get("timings").is_none());
    assert_eq!(a.report["config"]["steps"], 3);
}

#[test]
fn distortion_csv_and_off_output() {
    let dir = TempDir::new().unwrap();
    let mesh = save(&dir, "bump.off", &fixtures::gaussian_bump(11, 0.5, 1.0));
    let out = dir.path().join("flat.off");
    let csv = dir.path().join("dist.csv");
    let res = lmap(&[
        "flatten", s(&mesh), "--seed", "60", "--radius", "2.5", "--steps", "2", "-o", s(&out), "--distortion", s(&csv),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("OFF\n"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("metric,edge_lo,edge_hi,count"));
    assert_eq!(lines.filter(|l| l.starts_with("area,")).count(), 64);
}

#[test]
fn flatten_usage_and_numerical_errors() {
    let dir = TempDir::new().unwrap();
    let (mesh, roi_path, _) = bump_with_disk(&dir);
    let out = dir.path().join("out.obj");
    let run = |extra: &[&str]| {
        let mut args = vec!["flatten", s(&mesh), "-o", s(&out)];
        args.extend_from_slice(extra);
        code(&lmap(&args))
    };
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "# nothing selected\n").unwrap();
    assert_eq!(run(&["--roi", s(&empty)]), 1);
    assert_eq!(run(&["--roi", s(&roi_path), "--steps", "0"]), 1);
    assert_eq!(run(&["--roi", s(&roi_path), "--epsilon", "-1"]), 1);
    assert_eq!(run(&["--seed", "3"]), 1);
    assert_eq!(run(&[]), 1);
    // one Newton iteration cannot reach a 1e-14 residual
    assert_eq!(run(&["--roi", s(&roi_path), "--max-newton", "1", "--epsilon", "1e-14"]), 4);
    assert!(!out.exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_lmap"))
        .args(["flatten", s(&mesh), "-o", s(&out), "--roi", s(&roi_path)])
        .env("LMAP_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}
