//! Elevation prediction at planar locations: universal kriging with a
//! polynomial drift, inverse distance weighting, and lifting planar meshes
//! into surfaces.

mod idw;
mod kriging;
mod lift;
mod linalg;

pub use idw::{idw_predict, IdwConfig};
pub use kriging::{drift_basis, drift_term_count, uk_predict, uk_predict_each, uk_solve, KrigingSolution, KrigingSystem};
pub use lift::{lift_mesh, LiftMethod, LiftOutput, LiftSummary};
pub use linalg::LuFactors;

use thiserror::Error;

use crate::acquisition::{Crs, PointSet};
use crate::variogram::VariogramError;

/// Targets closer than this to a sample take the sample value.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpolateError {
    #[error("no samples")]
    NoSamples,
    #[error("need at least {needed} samples for this system, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("samples {0} and {1} share a location")]
    DuplicateSample(usize, usize),
    #[error("drift degree {0} unsupported; use 0 or 1")]
    UnsupportedDegree(u32),
    #[error("kriging matrix is singular; drift term `{term}` is not identifiable from the samples")]
    SingularDrift { term: &'static str },
    #[error("kriging matrix is singular at sample {0}")]
    Singular(usize),
    #[error("target {index}: {source}")]
    Target {
        index: usize,
        #[source]
        source: Box<InterpolateError>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{failed} of {total} vertices failed (first: vertex {first_vertex}: {first_error})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_vertex: usize,
        first_error: Box<InterpolateError>,
    },
    #[error(transparent)]
    Variogram(#[from] VariogramError),
}

/// A sample location (metres) with its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Sample {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }
}

/// Which samples take part in a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Global,
    /// The `n` nearest samples, ties broken by sample index.
    KNearest(usize),
}

impl Default for Neighborhood {
    fn default() -> Self {
        Neighborhood::KNearest(16)
    }
}

impl Neighborhood {
    /// Neighbourhood size, `None` for all samples.
    pub fn size(&self) -> Option<usize> {
        match self {
            Neighborhood::Global => None,
            Neighborhood::KNearest(n) => Some(*n),
        }
    }
}

impl std::fmt::Display for Neighborhood {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Neighborhood::Global => f.write_str("global"),
            Neighborhood::KNearest(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Neighborhood {
    type Err = InterpolateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("global") {
            return Ok(Neighborhood::Global);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Neighborhood::KNearest(n)),
            _ => Err(InterpolateError::InvalidParameter(format!(
                "neighbourhood must be `global` or a positive count, got {s:?}"
            ))),
        }
    }
}

/// Converts a projected point set to samples; geographic input is refused
/// because distances in degrees are meaningless to the predictors.
pub fn samples_from_points(points: &PointSet) -> Result<Vec<Sample>, InterpolateError> {
    if points.crs() == Crs::Wgs84 {
        return Err(InterpolateError::InvalidParameter(
            "samples must be in UTM metres, not WGS-84 degrees".into(),
        ));
    }
    Ok(points.points().iter().map(|c| Sample::new(c.x, c.y, c.z)).collect())
}

/// Indices of the samples used for a prediction at (x, y), ordered by
/// (distance, index).
pub(crate) fn select_neighbors(samples: &[Sample], x: f64, y: f64, hood: Neighborhood) -> Vec<usize> {
    let key = |i: usize| {
        let s = &samples[i];
        (s.x - x).powi(2) + (s.y - y).powi(2)
    };
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    let cmp = |a: &usize, b: &usize| key(*a).total_cmp(&key(*b)).then(a.cmp(b));
    match hood.size() {
        Some(n) if n < samples.len() => {
            idx.select_nth_unstable_by(n - 1, cmp);
            idx.truncate(n);
            idx.sort_unstable_by(cmp);
        }
        _ => idx.sort_unstable_by(cmp),
    }
    idx
}
