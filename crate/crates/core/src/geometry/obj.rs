//! Minimal ASCII Wavefront OBJ support: `v`, `l`, and `f` records with 1-based indices.

use std::io::Write;
use std::path::Path;

use super::TriangleMesh;
use crate::{Error, Result, Vec3};

/// Geometry parsed from an OBJ file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ObjData {
    pub vertices: Vec<Vec3>,
    /// Polylines from `l` records, as 0-based vertex indices.
    pub lines: Vec<Vec<usize>>,
    /// Triangles from `f` records (polygons are fan-triangulated).
    pub faces: Vec<[usize; 3]>,
}

impl ObjData {
    pub fn into_mesh(self) -> Result<TriangleMesh> {
        TriangleMesh::new(self.vertices, self.faces)
    }
}

pub fn write_obj<W: Write>(mesh: &TriangleMesh, mut out: W) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_obj(path: impl AsRef<Path>) -> Result<ObjData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    read_obj_str(&text, path)
}

/// Parses OBJ text; `path` is only used in error messages.
pub fn read_obj_str(text: &str, path: &Path) -> Result<ObjData> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    };
    let mut data = ObjData::default();
    let mut pending: Vec<(usize, &str, Vec<&str>)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let mut fields = raw.split_whitespace();
        match fields.next() {
            Some("v") => {
                let coords: Vec<f64> = fields
                    .take(3)
                    .map(|f| f.parse::<f64>().map_err(|e| err(line, format!("bad coordinate {f:?}: {e}"))))
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(err(line, "vertex needs three coordinates".into()));
                }
                data.vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some(kind @ ("l" | "f")) => pending.push((line, kind, fields.collect())),
            _ => {}
        }
    }
    let n = data.vertices.len();
    for (line, kind, fields) in pending {
        let idx: Vec<usize> = fields
            .iter()
            .map(|f| {
                let head = f.split('/').next().unwrap_or("");
                let i: i64 = head.parse().map_err(|e| err(line, format!("bad index {f:?}: {e}")))?;
                let resolved = if i < 0 { n as i64 + i } else { i - 1 };
                if resolved < 0 || resolved as usize >= n {
                    return Err(err(line, format!("index {i} out of range")));
                }
                Ok(resolved as usize)
            })
            .collect::<Result<_>>()?;
        if kind == "l" {
            if idx.len() < 2 {
                return Err(err(line, "line record needs two vertices".into()));
            }
            data.lines.push(idx);
        } else {
            if idx.len() < 3 {
                return Err(err(line, "face record needs three vertices".into()));
            }
            for k in 1..idx.len() - 1 {
                data.faces.push([idx[0], idx[k], idx[k + 1]]);
            }
        }
    }
    Ok(data)
}
