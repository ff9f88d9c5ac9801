//! Universal kriging in semivariogram form with a polynomial drift of
//! degree 0 (constant mean) or 1 (linear trend `μ₀ + μ₁x + μ₂y`).

use rayon::prelude::*;

use super::linalg::LuFactors;
use super::{select_neighbors, InterpolateError, Neighborhood, Sample, COINCIDENCE_TOLERANCE};
use crate::variogram::VariogramModel;

const DRIFT_TERMS: [&str; 3] = ["1", "x", "y"];

/// Number of drift functions for degree `k`: 1 for a constant mean, 3 for a
/// linear trend.
pub fn drift_term_count(k: u32) -> Result<usize, InterpolateError> {
    match k {
        0 => Ok(1),
        1 => Ok(3),
        _ => Err(InterpolateError::UnsupportedDegree(k)),
    }
}

/// Drift functions evaluated at (x, y): `[1]` for k = 0, `[1, x, y]` for k = 1.
pub fn drift_basis(k: u32, x: f64, y: f64) -> Result<Vec<f64>, InterpolateError> {
    Ok(match drift_term_count(k)? {
        1 => vec![1.0],
        _ => vec![1.0, x, y],
    })
}

/// Samples, variogram and drift settings. Immutable once built, so one
/// system can serve concurrent predictions.
#[derive(Debug, Clone)]
pub struct KrigingSystem {
    samples: Vec<Sample>,
    model: VariogramModel,
    drift_degree: u32,
    neighborhood: Neighborhood,
}

impl KrigingSystem {
    pub fn new(
        samples: Vec<Sample>,
        model: VariogramModel,
        drift_degree: u32,
        neighborhood: Neighborhood,
    ) -> Result<Self, InterpolateError> {
        let terms = drift_term_count(drift_degree)?;
        if samples.is_empty() {
            return Err(InterpolateError::NoSamples);
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()))
        {
            return Err(InterpolateError::InvalidParameter(format!(
                "sample {i} has a non-finite coordinate"
            )));
        }
        let needed = terms + 1;
        if samples.len() < needed {
            return Err(InterpolateError::TooFewSamples {
                needed,
                got: samples.len(),
            });
        }
        if let Some(n) = neighborhood.size() {
            if n < needed {
                return Err(InterpolateError::InvalidParameter(format!(
                    "neighbourhood of {n} samples is too small for drift degree {drift_degree}; need {needed}"
                )));
            }
        }
        if let Some((a, b)) = find_duplicate(&samples) {
            return Err(InterpolateError::DuplicateSample(a, b));
        }
        Ok(Self {
            samples,
            model,
            drift_degree,
            neighborhood,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn model(&self) -> &VariogramModel {
        &self.model
    }

    pub fn drift_degree(&self) -> u32 {
        self.drift_degree
    }

    pub fn neighborhood(&self) -> Neighborhood {
        self.neighborhood
    }
}

/// First pair (by index) of samples closer than the coincidence tolerance.
fn find_duplicate(samples: &[Sample]) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_unstable_by(|&a, &b| samples[a].x.total_cmp(&samples[b].x).then(a.cmp(&b)));
    let mut found: Option<(usize, usize)> = None;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if samples[j].x - samples[i].x >= COINCIDENCE_TOLERANCE {
                break;
            }
            let d = (samples[j].x - samples[i].x).hypot(samples[j].y - samples[i].y);
            if d < COINCIDENCE_TOLERANCE {
                let pair = (i.min(j), i.max(j));
                found = Some(found.map_or(pair, |f| f.min(pair)));
            }
        }
    }
    found
}

/// Result of one kriging solve.
#[derive(Debug, Clone, PartialEq)]
pub struct KrigingSolution {
    /// Sample indices taking part, aligned with `weights`.
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// Lagrange multipliers in the original (uncentred) drift basis.
    pub drift_multipliers: Vec<f64>,
    pub prediction: f64,
    /// Kriging variance `Σ λᵢ γ(xᵢ, x₀) + Σ μₗ fₗ(x₀)`.
    pub variance: f64,
}

/// Solves the bordered kriging system for target (x0, y0).
///
/// The system is assembled in coordinates centred on the target, which keeps
/// the drift columns small; predictions are unaffected and the multipliers
/// are mapped back to the original basis.
pub fn uk_solve(sys: &KrigingSystem, x0: f64, y0: f64) -> Result<KrigingSolution, InterpolateError> {
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(InterpolateError::InvalidParameter(format!(
            "non-finite target ({x0}, {y0})"
        )));
    }
    let terms = drift_term_count(sys.drift_degree)?;
    let samples = &sys.samples;
    let indices: Vec<usize> = match sys.neighborhood {
        Neighborhood::Global => (0..samples.len()).collect(),
        hood => select_neighbors(samples, x0, y0, hood),
    };
    let n = indices.len();

    // Exactness: a target on a sample takes its value.
    let mut hit: Option<(f64, usize)> = None;
    for (k, &i) in indices.iter().enumerate() {
        let d = (samples[i].x - x0).hypot(samples[i].y - y0);
        if d < COINCIDENCE_TOLERANCE && hit.is_none_or(|(hd, _)| d < hd) {
            hit = Some((d, k));
        }
    }
    if let Some((_, k)) = hit {
        let mut weights = vec![0.0; n];
        weights[k] = 1.0;
        return Ok(KrigingSolution {
            prediction: samples[indices[k]].z,
            indices,
            weights,
            drift_multipliers: vec![0.0; terms],
            variance: 0.0,
        });
    }

    let local: Vec<(f64, f64)> = indices
        .iter()
        .map(|&i| (samples[i].x - x0, samples[i].y - y0))
        .collect();
    if let Some(term) = dependent_drift_term(&local, terms) {
        return Err(InterpolateError::SingularDrift { term });
    }

    let m = n + terms;
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    let model = &sys.model;
    for i in 0..n {
        let (xi, yi) = local[i];
        for j in i + 1..n {
            let (xj, yj) = local[j];
            let g = model.gamma_unchecked((xi - xj).hypot(yi - yj));
            a[i * m + j] = g;
            a[j * m + i] = g;
        }
        let f = [1.0, xi, yi];
        for l in 0..terms {
            a[i * m + n + l] = f[l];
            a[(n + l) * m + i] = f[l];
        }
        b[i] = model.gamma_unchecked(xi.hypot(yi));
    }
    // Drift functions at the centred target: [1, 0, 0].
    b[n] = 1.0;

    let lu = LuFactors::factor(a, m).map_err(|col| {
        if col >= n {
            InterpolateError::SingularDrift {
                term: DRIFT_TERMS[col - n],
            }
        } else {
            InterpolateError::Singular(indices[col])
        }
    })?;
    let sol = lu.solve(&b);
    let weights = sol[..n].to_vec();
    let mu_c = &sol[n..];

    let prediction = weights
        .iter()
        .zip(&indices)
        .map(|(w, &i)| w * samples[i].z)
        .sum();
    let variance = weights.iter().zip(&b[..n]).map(|(w, g)| w * g).sum::<f64>() + mu_c[0];
    let drift_multipliers = if terms == 3 {
        vec![mu_c[0] - x0 * mu_c[1] - y0 * mu_c[2], mu_c[1], mu_c[2]]
    } else {
        mu_c.to_vec()
    };
    Ok(KrigingSolution {
        indices,
        weights,
        drift_multipliers,
        prediction,
        variance,
    })
}

/// Name of the first drift function that is linearly dependent on the
/// earlier ones over the given locations, e.g. `y` for collinear samples.
fn dependent_drift_term(local: &[(f64, f64)], terms: usize) -> Option<&'static str> {
    if terms < 3 {
        return None;
    }
    let n = local.len() as f64;
    let extent = local
        .iter()
        .fold(0.0_f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()));
    let tol = 1e-10 * extent.max(f64::MIN_POSITIVE) * n.sqrt();
    // Gram–Schmidt on the columns 1, x, y.
    let mx = local.iter().map(|p| p.0).sum::<f64>() / n;
    let my = local.iter().map(|p| p.1).sum::<f64>() / n;
    let xc: Vec<f64> = local.iter().map(|p| p.0 - mx).collect();
    let yc: Vec<f64> = local.iter().map(|p| p.1 - my).collect();
    let xx: f64 = xc.iter().map(|v| v * v).sum();
    if xx.sqrt() <= tol {
        return Some(DRIFT_TERMS[1]);
    }
    let xy: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
    let resid: f64 = xc
        .iter()
        .zip(&yc)
        .map(|(a, b)| (b - xy / xx * a).powi(2))
        .sum();
    if resid.sqrt() <= tol {
        return Some(DRIFT_TERMS[2]);
    }
    None
}

/// Per-target predictions in target order; a failure at any target is
/// reported with its index (the lowest failing index).
pub fn uk_predict(sys: &KrigingSystem, targets: &[(f64, f64)]) -> Result<Vec<f64>, InterpolateError> {
    uk_predict_each(sys, targets)
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| InterpolateError::Target {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Per-target predictions, keeping individual failures.
pub fn uk_predict_each(sys: &KrigingSystem, targets: &[(f64, f64)]) -> Vec<Result<f64, InterpolateError>> {
    targets
        .par_iter()
        .map(|&(x, y)| uk_solve(sys, x, y).map(|s| s.prediction))
        .collect()
}
