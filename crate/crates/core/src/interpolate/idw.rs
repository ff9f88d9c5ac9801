//! Shepard inverse distance weighting: `Z(x) = Σ ωᵢ zᵢ / Σ ωⱼ` with
//! `ωᵢ = d(x, xᵢ)^-p`.

use rayon::prelude::*;

use super::{select_neighbors, InterpolateError, Neighborhood, Sample, COINCIDENCE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdwConfig {
    pub power: f64,
    pub neighborhood: Neighborhood,
}

impl Default for IdwConfig {
    fn default() -> Self {
        Self {
            power: 2.0,
            neighborhood: Neighborhood::default(),
        }
    }
}

impl IdwConfig {
    pub fn new(power: f64, neighborhood: Neighborhood) -> Result<Self, InterpolateError> {
        let cfg = Self { power, neighborhood };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), InterpolateError> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(InterpolateError::InvalidParameter(format!(
                "IDW power must be positive, got {}",
                self.power
            )));
        }
        if self.neighborhood == Neighborhood::KNearest(0) {
            return Err(InterpolateError::InvalidParameter(
                "neighbourhood must contain at least one sample".into(),
            ));
        }
        Ok(())
    }
}

/// Predictions at each target, in target order.
pub fn idw_predict(
    samples: &[Sample],
    targets: &[(f64, f64)],
    cfg: &IdwConfig,
) -> Result<Vec<f64>, InterpolateError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(InterpolateError::NoSamples);
    }
    Ok(targets
        .par_iter()
        .map(|&(x, y)| idw_one(samples, x, y, cfg))
        .collect())
}

fn idw_one(samples: &[Sample], x: f64, y: f64, cfg: &IdwConfig) -> f64 {
    let dist = |s: &Sample| (s.x - x).hypot(s.y - y);
    let hood: Vec<usize> = match cfg.neighborhood {
        Neighborhood::Global => (0..samples.len()).collect(),
        n => select_neighbors(samples, x, y, n),
    };
    let d: Vec<f64> = hood.iter().map(|&i| dist(&samples[i])).collect();
    // Nearest sample, lowest index on ties.
    let (mut near, mut dmin) = (hood[0], d[0]);
    for (&i, &di) in hood.iter().zip(&d).skip(1) {
        if di < dmin || (di == dmin && i < near) {
            near = i;
            dmin = di;
        }
    }
    if dmin < COINCIDENCE_TOLERANCE {
        return samples[near].z;
    }
    // Weights relative to the nearest sample's keep the sums in range for
    // large powers; the ratio is unchanged.
    let (mut num, mut den) = (0.0, 0.0);
    for (&i, &di) in hood.iter().zip(&d) {
        let w = (dmin / di).powf(cfg.power);
        num += w * samples[i].z;
        den += w;
    }
    num / den
}
