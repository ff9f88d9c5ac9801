//! Mesh and table writers. Coordinates are printed with six decimals so
//! artifacts are byte-stable across runs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::mesh::{ContourLevel, TriMesh};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("refusing to export an empty mesh")]
    EmptyMesh,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed {format} data at line {line}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Vtk,
}

impl MeshFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::Vtk => "vtk",
        }
    }
}

impl FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "vtk" => Ok(MeshFormat::Vtk),
            other => Err(format!("unknown mesh format {other:?}")),
        }
    }
}

/// Wavefront OBJ text: `v x y z` lines then 1-based `f i j k` lines.
/// A planar mesh is written with z = 0.
pub fn mesh_to_obj(m: &TriMesh) -> Result<String, ExportError> {
    if m.is_empty() {
        return Err(ExportError::EmptyMesh);
    }
    let mut s = String::with_capacity(m.vertex_count() * 40 + m.triangle_count() * 24);
    for i in 0..m.vertex_count() {
        let [x, y, z] = m.position3(i);
        let _ = writeln!(s, "v {x:.6} {y:.6} {z:.6}");
    }
    for [a, b, c] in &m.triangles {
        let _ = writeln!(s, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    Ok(s)
}

/// Legacy ASCII VTK POLYDATA with POINTS and POLYGONS.
pub fn mesh_to_vtk(m: &TriMesh) -> Result<String, ExportError> {
    if m.is_empty() {
        return Err(ExportError::EmptyMesh);
    }
    let (nv, nt) = (m.vertex_count(), m.triangle_count());
    let mut s = String::with_capacity(nv * 40 + nt * 24 + 128);
    s.push_str("# vtk DataFile Version 3.0\nDSM surface\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for i in 0..nv {
        let [x, y, z] = m.position3(i);
        let _ = writeln!(s, "{x:.6} {y:.6} {z:.6}");
    }
    let _ = writeln!(s, "POLYGONS {nt} {}", nt * 4);
    for [a, b, c] in &m.triangles {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    Ok(s)
}

pub fn export_mesh(m: &TriMesh, format: MeshFormat, path: &Path) -> Result<(), ExportError> {
    let text = match format {
        MeshFormat::Obj => mesh_to_obj(m)?,
        MeshFormat::Vtk => mesh_to_vtk(m)?,
    };
    write_text(path, &text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(|source| ExportError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Vertices and 0-based triangles read back from an exported file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

fn parse_err(format: &'static str, line: usize, message: impl Into<String>) -> ExportError {
    ExportError::Parse {
        format,
        line,
        message: message.into(),
    }
}

fn floats<const N: usize>(
    format: &'static str,
    line: usize,
    fields: &[&str],
) -> Result<[f64; N], ExportError> {
    if fields.len() != N {
        return Err(parse_err(format, line, format!("expected {N} values")));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse().map_err(|_| parse_err(format, line, format!("bad number {f:?}")))?;
    }
    Ok(out)
}

pub fn parse_obj(text: &str) -> Result<ParsedMesh, ExportError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"v") => vertices.push(floats::<3>("OBJ", n + 1, &fields[1..])?),
            Some(&"f") => {
                let idx = floats::<3>("OBJ", n + 1, &fields[1..])?;
                let mut t = [0usize; 3];
                for (slot, v) in t.iter_mut().zip(idx) {
                    if !(v >= 1.0 && v.fract() == 0.0) {
                        return Err(parse_err("OBJ", n + 1, "face index must be a positive integer"));
                    }
                    *slot = v as usize - 1;
                }
                triangles.push(t);
            }
            _ => {}
        }
    }
    check_indices("OBJ", &vertices, &triangles)?;
    Ok(ParsedMesh {
        vertices,
        triangles,
    })
}

pub fn parse_vtk(text: &str) -> Result<ParsedMesh, ExportError> {
    let mut lines = text.lines().enumerate();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    while let Some((n, line)) = lines.next() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first() {
            Some(&"POINTS") => {
                let count: usize = fields
                    .get(1)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err("VTK", n + 1, "bad POINTS count"))?;
                for _ in 0..count {
                    let (m, l) = lines.next().ok_or_else(|| parse_err("VTK", n + 1, "truncated POINTS"))?;
                    let f: Vec<&str> = l.split_whitespace().collect();
                    vertices.push(floats::<3>("VTK", m + 1, &f)?);
                }
            }
            Some(&"POLYGONS") => {
                let count: usize = fields
                    .get(1)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err("VTK", n + 1, "bad POLYGONS count"))?;
                for _ in 0..count {
                    let (m, l) = lines.next().ok_or_else(|| parse_err("VTK", n + 1, "truncated POLYGONS"))?;
                    let f: Vec<usize> = l
                        .split_whitespace()
                        .map(|v| v.parse().map_err(|_| parse_err("VTK", m + 1, "bad index")))
                        .collect::<Result<_, _>>()?;
                    if f.len() != 4 || f[0] != 3 {
                        return Err(parse_err("VTK", m + 1, "only triangles are supported"));
                    }
                    triangles.push([f[1], f[2], f[3]]);
                }
            }
            _ => {}
        }
    }
    check_indices("VTK", &vertices, &triangles)?;
    Ok(ParsedMesh {
        vertices,
        triangles,
    })
}

fn check_indices(format: &'static str, v: &[[f64; 3]], t: &[[usize; 3]]) -> Result<(), ExportError> {
    match t.iter().position(|tri| tri.iter().any(|&i| i >= v.len())) {
        Some(k) => Err(parse_err(format, 0, format!("triangle {k} references a missing vertex"))),
        None => Ok(()),
    }
}

/// `level,polyline,closed,point,x,y` rows, one per contour vertex.
pub fn contours_to_csv(levels: &[ContourLevel]) -> String {
    let mut s = String::from("level,polyline,closed,point,x,y\n");
    for l in levels {
        for (k, p) in l.polylines.iter().enumerate() {
            for (j, q) in p.points.iter().enumerate() {
                let _ = writeln!(s, "{:.6},{k},{},{j},{:.6},{:.6}", l.level, p.closed, q.x, q.y);
            }
        }
    }
    s
}
