//! JSON wire formats.

use lmap::io::{parse_mesh, MeshFormat};
use lmap::{Error, Point, Result, TriangleMesh};
use serde::{Deserialize, Serialize};

/// Flat coordinate and index arrays, ready for typed-array upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshJson {
    pub positions: Vec<f64>,
    pub faces: Vec<usize>,
}

impl From<&TriangleMesh> for MeshJson {
    fn from(mesh: &TriangleMesh) -> Self {
        MeshJson {
            positions: mesh.positions().iter().flat_map(|p| [p.x, p.y, p.z]).collect(),
            faces: mesh.faces().iter().flatten().copied().collect(),
        }
    }
}

impl MeshJson {
    pub fn to_mesh(&self) -> Result<TriangleMesh> {
        if !self.positions.len().is_multiple_of(3) || !self.faces.len().is_multiple_of(3) {
            return Err(Error::Parse {
                line: 0,
                message: "positions and faces must have lengths divisible by 3".into(),
            });
        }
        if self.positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line: 0,
                message: "non-finite coordinate".into(),
            });
        }
        let positions = self.positions.chunks(3).map(|c| Point::new(c[0], c[1], c[2])).collect();
        let faces = self.faces.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        TriangleMesh::new(positions, faces)
    }
}

/// A per-vertex scalar field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub name: String,
    pub values: Vec<f64>,
}

/// Mesh JSON when the body looks like an object, OBJ or OFF text otherwise.
pub fn parse_upload(body: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(body).map_err(|_| Error::Parse {
        line: 0,
        message: "body is not UTF-8".into(),
    })?;
    if text.trim_start().starts_with('{') {
        let json: MeshJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        return json.to_mesh();
    }
    parse_mesh(text, MeshFormat::sniff(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lmap::fixtures;

    #[test]
    fn json_round_trip() {
        let mesh = fixtures::icosahedron();
        let json = MeshJson::from(&mesh);
        assert_eq!(json.positions.len(), 36);
        let back = json.to_mesh().unwrap();
        assert_eq!(back.positions(), mesh.positions());
        assert_eq!(back.faces(), mesh.faces());
    }

    #[test]
    fn uploads_in_all_formats() {
        let obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        let off = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let json = r#"{"positions":[0,0,0,1,0,0,0,1,0],"faces":[0,1,2]}"#;
        for body in [obj, off, json] {
            let m = parse_upload(body.as_bytes()).unwrap();
            assert_eq!((m.vertex_count(), m.face_count()), (3, 1));
        }
    }

    #[test]
    fn malformed_uploads() {
        for body in [
            r#"{"positions":[0,0],"faces":[]}"#,
            r#"{"positions":[0,0,0],"faces":[0,1]}"#,
            r#"{"positions":"x"}"#,
            "v 0 0\n",
        ] {
            let err = parse_upload(body.as_bytes()).unwrap_err();
            assert_eq!(err.class(), lmap::ErrorClass::Io, "{body}");
        }
        assert!(parse_upload(&[0xff, 0xfe]).is_err());
    }
}
