//! Lifting a planar mesh to a surface by predicting an elevation at every
//! vertex.

use super::idw::{idw_predict, IdwConfig};
use super::kriging::{uk_predict_each, KrigingSystem};
use super::{InterpolateError, Neighborhood, Sample};
use crate::mesh::{surface_quality, MeshQuality, TriMesh};
use crate::variogram::VariogramModel;

/// Share of vertices allowed to need the IDW fallback before a kriging lift
/// is abandoned.
pub const MAX_FALLBACK_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum LiftMethod {
    Kriging {
        model: VariogramModel,
        drift_degree: u32,
        neighborhood: Neighborhood,
    },
    Idw(IdwConfig),
}

impl LiftMethod {
    pub fn name(&self) -> &'static str {
        match self {
            LiftMethod::Kriging { .. } => "uk",
            LiftMethod::Idw(_) => "idw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftSummary {
    pub z_min: f64,
    pub z_max: f64,
    /// 3D quality of the lifted surface.
    pub quality: MeshQuality,
    /// Vertices where kriging failed and IDW supplied the elevation.
    pub fallback_vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftOutput {
    pub mesh: TriMesh,
    pub summary: LiftSummary,
}

/// Predicts the elevation of every vertex of `planar` from `samples`
/// (same projected frame). Connectivity is unchanged.
///
/// Kriging failures at single vertices (a degenerate neighbourhood) are
/// filled by IDW with power 2 over the same neighbourhood and listed in the
/// summary; more than 1% of such vertices aborts the lift.
pub fn lift_mesh(planar: &TriMesh, samples: &[Sample], method: &LiftMethod) -> Result<LiftOutput, InterpolateError> {
    if samples.is_empty() {
        return Err(InterpolateError::NoSamples);
    }
    let targets: Vec<(f64, f64)> = planar.vertices.iter().map(|p| (p.x, p.y)).collect();
    let mut fallback_vertices = Vec::new();
    let z = match method {
        LiftMethod::Idw(cfg) => idw_predict(samples, &targets, cfg)?,
        LiftMethod::Kriging {
            model,
            drift_degree,
            neighborhood,
        } => {
            let sys = KrigingSystem::new(samples.to_vec(), *model, *drift_degree, *neighborhood)?;
            let results = uk_predict_each(&sys, &targets);
            let mut first_error = None;
            for (v, r) in results.iter().enumerate() {
                if let Err(e) = r {
                    fallback_vertices.push(v);
                    first_error.get_or_insert_with(|| (v, e.clone()));
                }
            }
            let limit = (MAX_FALLBACK_FRACTION * targets.len() as f64).floor() as usize;
            if let Some((first_vertex, e)) = first_error {
                if fallback_vertices.len() > limit {
                    return Err(InterpolateError::TooManyFailures {
                        failed: fallback_vertices.len(),
                        total: targets.len(),
                        first_vertex,
                        first_error: Box::new(e),
                    });
                }
                log::warn!(
                    "kriging failed at {} vertices (first: {first_vertex}: {e}); using IDW there",
                    fallback_vertices.len()
                );
            }
            let fb_targets: Vec<(f64, f64)> = fallback_vertices.iter().map(|&v| targets[v]).collect();
            let fb_cfg = IdwConfig::new(2.0, *neighborhood)?;
            let mut fb = idw_predict(samples, &fb_targets, &fb_cfg)?.into_iter();
            results
                .into_iter()
                .map(|r| r.unwrap_or_else(|_| fb.next().unwrap_or(f64::NAN)))
                .collect()
        }
    };
    let (z_min, z_max) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mesh = planar
        .clone()
        .with_elevations(z)
        .map_err(|e| InterpolateError::InvalidParameter(e.to_string()))?;
    let quality = surface_quality(&mesh).map_err(|e| InterpolateError::InvalidParameter(e.to_string()))?;
    Ok(LiftOutput {
        mesh,
        summary: LiftSummary {
            z_min,
            z_max,
            quality,
            fallback_vertices,
        },
    })
}
