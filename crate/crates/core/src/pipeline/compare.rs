//! Kriging versus IDW on one planar mesh.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::interpolate::{lift_mesh, samples_from_points};
use crate::mesh::TriMesh;

use super::{acquire, at, build_mesh, lift_method, region_quad, variogram_stage, Method, PipelineConfig, PipelineError, Stage};

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub vertices: usize,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
    /// Mean dihedral angle between adjacent triangles, degrees.
    pub roughness_uk: f64,
    pub roughness_idw: f64,
    pub uk_fallbacks: usize,
    /// Per-vertex `z_uk − z_idw`.
    pub differences: Vec<f64>,
}

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        let _ = writeln!(s, "vertices,{}", self.vertices);
        let _ = writeln!(s, "max_abs_diff,{:.6}", self.max_abs_diff);
        let _ = writeln!(s, "mean_abs_diff,{:.6}", self.mean_abs_diff);
        let _ = writeln!(s, "roughness_uk_deg,{:.6}", self.roughness_uk);
        let _ = writeln!(s, "roughness_idw_deg,{:.6}", self.roughness_idw);
        let _ = writeln!(s, "uk_fallback_vertices,{}", self.uk_fallbacks);
        s
    }
}

/// Mean angle, in degrees, between the normals of triangles sharing an
/// edge. Zero for a plane; larger for bumpier surfaces.
pub fn dihedral_roughness(m: &TriMesh) -> f64 {
    let normal = |t: &[usize; 3]| {
        let [a, b, c] = t.map(|i| m.position3(i));
        let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
        let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
        let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        n.map(|x| x / len)
    };
    let normals: Vec<[f64; 3]> = m.triangles.iter().map(normal).collect();
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in m.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            by_edge.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let mut pairs: Vec<(usize, usize)> = by_edge
        .values()
        .filter(|ts| ts.len() == 2)
        .map(|ts| (ts[0], ts[1]))
        .collect();
    // Fixed summation order for reproducible output.
    pairs.sort_unstable();
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|&(s, t)| {
            let (p, q) = (normals[s], normals[t]);
            let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0);
            dot.acos().to_degrees()
        })
        .sum();
    total / pairs.len() as f64
}

/// Lifts one planar mesh with both methods and compares the surfaces.
pub fn compare_methods(cfg: &PipelineConfig) -> Result<CompareReport, PipelineError> {
    cfg.validate()?;
    let acquired = acquire(cfg)?;
    let quad = region_quad(cfg, acquired.utm.crs())?;
    let planar = build_mesh(cfg, &quad)?;
    let samples = samples_from_points(&acquired.utm).map_err(at(Stage::Interpolate))?;
    let vg = variogram_stage(cfg, &samples, &quad)?;
    let uk = lift_mesh(
        &planar.mesh,
        &samples,
        &lift_method(cfg, Method::Kriging, Some(vg.model))?,
    )
    .map_err(at(Stage::Interpolate))?;
    let idw = lift_mesh(&planar.mesh, &samples, &lift_method(cfg, Method::Idw, None)?)
        .map_err(at(Stage::Interpolate))?;
    let zu = uk.mesh.elevations.as_deref().unwrap_or_default();
    let zi = idw.mesh.elevations.as_deref().unwrap_or_default();
    let differences: Vec<f64> = zu.iter().zip(zi).map(|(a, b)| a - b).collect();
    let n = differences.len().max(1) as f64;
    let report = CompareReport {
        vertices: differences.len(),
        max_abs_diff: differences.iter().fold(0.0, |m, d| m.max(d.abs())),
        mean_abs_diff: differences.iter().map(|d| d.abs()).sum::<f64>() / n,
        roughness_uk: dihedral_roughness(&uk.mesh),
        roughness_idw: dihedral_roughness(&idw.mesh),
        uk_fallbacks: uk.summary.fallback_vertices.len(),
        differences,
    };
    log::info!(
        "roughness: uk {:.4}°, idw {:.4}°; |Δz| max {:.4} m, mean {:.4} m",
        report.roughness_uk,
        report.roughness_idw,
        report.max_abs_diff,
        report.mean_abs_diff
    );
    Ok(report)
}
