//! ASCII OBJ / OFF mesh files and plain-text ROI lists.
//!
//! OBJ: only `v` and `f` records are read; `vt`, `vn`, groups and material
//! statements are skipped. Face entries may use the `v/vt/vn` forms and
//! negative (relative) indices. OFF: the classic `OFF` header followed by
//! counts, vertex lines and `3 a b c` face lines. Positions are written
//! with nine significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Point, RoiSelection, TriangleMesh};
use crate::topology::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }

    /// Guesses the format of in-memory text: OFF files start with an `OFF`
    /// header, everything else is treated as OBJ.
    pub fn sniff(text: &str) -> Self {
        let first = text
            .lines()
            .map(|l| strip_comment(l).trim())
            .find(|l| !l.is_empty());
        match first {
            Some(l) if l.starts_with("OFF") => MeshFormat::Off,
            _ => MeshFormat::Obj,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite coordinate `{tok}`")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid integer `{tok}`")))
}

pub fn read_mesh(reader: impl BufRead, format: MeshFormat) -> Result<TriangleMesh> {
    let (positions, faces) = match format {
        MeshFormat::Obj => read_obj(reader)?,
        MeshFormat::Off => read_off(reader)?,
    };
    TriangleMesh::new(positions, faces)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriangleMesh> {
    read_mesh(text.as_bytes(), format)
}

pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::parse(0, format!("unknown mesh extension for {}", path.display()))
    })?;
    read_mesh(BufReader::new(File::open(path)?), format)
}

type RawMesh = (Vec<Point>, Vec<[VertexId; 3]>);

fn read_obj(reader: impl BufRead) -> Result<RawMesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let mut toks = strip_comment(&line).split_whitespace();
        match toks.next() {
            Some("v") => {
                let coords: Vec<&str> = toks.collect();
                if coords.len() < 3 {
                    return Err(Error::parse(line_no, "vertex needs three coordinates"));
                }
                positions.push(Point::new(
                    parse_f64(coords[0], line_no)?,
                    parse_f64(coords[1], line_no)?,
                    parse_f64(coords[2], line_no)?,
                ));
            }
            Some("f") => {
                let refs: Vec<&str> = toks.collect();
                if refs.len() != 3 {
                    return Err(Error::parse(
                        line_no,
                        format!("non-triangle face with {} vertices", refs.len()),
                    ));
                }
                let mut face = [0; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    let idx = r.split('/').next().unwrap_or_default();
                    let i: i64 = idx
                        .parse()
                        .map_err(|_| Error::parse(line_no, format!("invalid face index `{r}`")))?;
                    let resolved = match i {
                        0 => return Err(Error::parse(line_no, "face index 0 is invalid in OBJ")),
                        i if i > 0 => i - 1,
                        i => positions.len() as i64 + i,
                    };
                    if resolved < 0 {
                        return Err(Error::parse(line_no, format!("face index {i} out of range")));
                    }
                    *slot = resolved as usize;
                }
                faces.push((line_no, face));
            }
            _ => {}
        }
    }
    // forward references are legal, so bounds are checked once all vertices are in
    for &(line_no, face) in &faces {
        if let Some(&v) = face.iter().find(|&&v| v >= positions.len()) {
            return Err(Error::parse(line_no, format!("face index {} out of range", v + 1)));
        }
    }
    Ok((positions, faces.into_iter().map(|(_, f)| f).collect()))
}

fn read_off(reader: impl BufRead) -> Result<RawMesh> {
    // (line number, tokens) for every non-empty, comment-stripped line
    let mut lines = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let toks: Vec<String> = strip_comment(&line)
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        if !toks.is_empty() {
            lines.push((n + 1, toks));
        }
    }
    let mut it = lines.into_iter();
    let (hline, mut header) = it
        .next()
        .ok_or_else(|| Error::parse(1, "empty OFF file"))?;
    if header[0] != "OFF" {
        return Err(Error::parse(hline, "missing OFF header"));
    }
    header.remove(0);
    let (cline, counts) = if header.is_empty() {
        it.next().ok_or_else(|| Error::parse(hline, "missing OFF counts"))?
    } else {
        (hline, header)
    };
    if counts.len() < 2 {
        return Err(Error::parse(cline, "OFF counts need vertex and face totals"));
    }
    let nv = parse_usize(&counts[0], cline)?;
    let nf = parse_usize(&counts[1], cline)?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, toks) = it
            .next()
            .ok_or_else(|| Error::parse(cline, "unexpected end of vertex list"))?;
        if toks.len() < 3 {
            return Err(Error::parse(ln, "vertex needs three coordinates"));
        }
        positions.push(Point::new(
            parse_f64(&toks[0], ln)?,
            parse_f64(&toks[1], ln)?,
            parse_f64(&toks[2], ln)?,
        ));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, toks) = it
            .next()
            .ok_or_else(|| Error::parse(cline, "unexpected end of face list"))?;
        let arity = parse_usize(&toks[0], ln)?;
        if arity != 3 {
            return Err(Error::parse(ln, format!("non-triangle face with {arity} vertices")));
        }
        if toks.len() < 4 {
            return Err(Error::parse(ln, "truncated face"));
        }
        let face = [
            parse_usize(&toks[1], ln)?,
            parse_usize(&toks[2], ln)?,
            parse_usize(&toks[3], ln)?,
        ];
        if let Some(&v) = face.iter().find(|&&v| v >= nv) {
            return Err(Error::parse(ln, format!("face index {v} out of range")));
        }
        faces.push(face);
    }
    Ok((positions, faces))
}

/// Rounds to nine significant digits and prints the shortest decimal that
/// parses back to the rounded value.
pub fn format_coordinate(x: f64) -> String {
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

pub fn write_mesh(mesh: &TriangleMesh, mut w: impl Write, format: MeshFormat) -> std::io::Result<()> {
    let coord = |p: &Point| {
        format!(
            "{} {} {}",
            format_coordinate(p.x),
            format_coordinate(p.y),
            format_coordinate(p.z)
        )
    };
    match format {
        MeshFormat::Obj => {
            for p in mesh.positions() {
                writeln!(w, "v {}", coord(p))?;
            }
            for f in mesh.faces() {
                writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
        }
        MeshFormat::Off => {
            writeln!(w, "OFF")?;
            writeln!(w, "{} {} {}", mesh.vertex_count(), mesh.face_count(), mesh.edge_count())?;
            for p in mesh.positions() {
                writeln!(w, "{}", coord(p))?;
            }
            for f in mesh.faces() {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
    }
    w.flush()
}

pub fn mesh_to_string(mesh: &TriangleMesh, format: MeshFormat) -> String {
    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf, format).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("mesh output is ASCII")
}

pub fn save_mesh(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::parse(0, format!("unknown mesh extension for {}", path.display()))
    })?;
    write_mesh(mesh, BufWriter::new(File::create(path)?), format)?;
    Ok(())
}

/// Reads newline-separated 0-based vertex indices; `#` starts a comment.
pub fn parse_roi_indices(reader: impl BufRead) -> Result<Vec<VertexId>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let tok = strip_comment(&line).trim();
        if tok.is_empty() {
            continue;
        }
        out.push(parse_usize(tok, n + 1)?);
    }
    Ok(out)
}

pub fn read_roi(reader: impl BufRead, mesh: &TriangleMesh) -> Result<RoiSelection> {
    RoiSelection::new(mesh, parse_roi_indices(reader)?)
}

pub fn load_roi(path: &Path, mesh: &TriangleMesh) -> Result<RoiSelection> {
    read_roi(BufReader::new(File::open(path)?), mesh)
}

pub fn write_roi(vertices: &[VertexId], mut w: impl Write) -> std::io::Result<()> {
    for v in vertices {
        writeln!(w, "{v}")?;
    }
    w.flush()
}
