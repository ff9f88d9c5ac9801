//! Experimental semivariograms and theoretical model fitting.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VariogramError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("no sample pairs within max lag {0} m")]
    Empty(f64),
    #[error("need at least 3 non-empty bins to fit, got {0}")]
    InsufficientBins(usize),
    #[error("negative lag {0}")]
    NegativeLag(f64),
    #[error("invalid variogram parameter: {0}")]
    InvalidParameter(String),
}

/// One lag class of an experimental variogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagBin {
    /// Mean separation of the pairs in the bin (m).
    pub lag: f64,
    /// Semivariance estimate (m²).
    pub gamma: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalVariogram {
    pub bins: Vec<LagBin>,
    pub max_lag: f64,
}

impl ExperimentalVariogram {
    /// Wraps precomputed bins. Lags must be strictly increasing.
    pub fn from_bins(bins: Vec<LagBin>, max_lag: f64) -> Result<Self, VariogramError> {
        if !(max_lag > 0.0) {
            return Err(VariogramError::InvalidParameter(format!("max_lag {max_lag}")));
        }
        if bins.windows(2).any(|w| !(w[1].lag > w[0].lag)) {
            return Err(VariogramError::InvalidParameter(
                "lags must be strictly increasing".into(),
            ));
        }
        if bins.iter().any(|b| b.pairs == 0 || !(b.gamma >= 0.0)) {
            return Err(VariogramError::InvalidParameter(
                "bins need at least one pair and non-negative semivariance".into(),
            ));
        }
        Ok(Self { bins, max_lag })
    }

    /// `lag_center,gamma,pair_count` CSV.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lag_center,gamma,pair_count\n");
        for b in &self.bins {
            s.push_str(&format!("{:.6},{:.6},{}\n", b.lag, b.gamma, b.pairs));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Spherical,
    Gaussian,
    Exponential,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Spherical => "spherical",
            ModelKind::Gaussian => "gaussian",
            ModelKind::Exponential => "exponential",
        })
    }
}

impl FromStr for ModelKind {
    type Err = VariogramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spherical" | "sph" => Ok(Self::Spherical),
            "gaussian" | "gau" => Ok(Self::Gaussian),
            "exponential" | "exp" => Ok(Self::Exponential),
            other => Err(VariogramError::InvalidParameter(format!(
                "unknown model {other:?}"
            ))),
        }
    }
}

/// Theoretical semivariogram. The total sill is `nugget + partial_sill`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariogramModel {
    pub kind: ModelKind,
    pub nugget: f64,
    pub partial_sill: f64,
    pub range: f64,
}

impl VariogramModel {
    pub fn new(
        kind: ModelKind,
        nugget: f64,
        partial_sill: f64,
        range: f64,
    ) -> Result<Self, VariogramError> {
        if !(nugget >= 0.0 && nugget.is_finite()) {
            return Err(VariogramError::InvalidParameter(format!("nugget {nugget}")));
        }
        if !(partial_sill >= 0.0 && partial_sill.is_finite()) {
            return Err(VariogramError::InvalidParameter(format!(
                "partial sill {partial_sill}"
            )));
        }
        if !(range > 0.0 && range.is_finite()) {
            return Err(VariogramError::InvalidParameter(format!("range {range}")));
        }
        Ok(Self {
            kind,
            nugget,
            partial_sill,
            range,
        })
    }

    pub fn sill(&self) -> f64 {
        self.nugget + self.partial_sill
    }

    /// γ(h) without the domain check; callers guarantee `h >= 0`.
    #[inline]
    pub fn gamma_unchecked(&self, h: f64) -> f64 {
        if h == 0.0 {
            return 0.0;
        }
        self.nugget + self.partial_sill * shape(self.kind, h, self.range)
    }

    pub fn gamma(&self, h: f64) -> Result<f64, VariogramError> {
        if h < 0.0 || h.is_nan() {
            return Err(VariogramError::NegativeLag(h));
        }
        Ok(self.gamma_unchecked(h))
    }
}

/// Normalized structure function g(h; a) in [0, 1] for h > 0. Gaussian and
/// exponential use the practical-range convention g(a) ≈ 0.95.
fn shape(kind: ModelKind, h: f64, a: f64) -> f64 {
    match kind {
        ModelKind::Spherical => {
            if h <= a {
                let r = h / a;
                1.5 * r - 0.5 * r * r * r
            } else {
                1.0
            }
        }
        ModelKind::Gaussian => 1.0 - (-3.0 * h * h / (a * a)).exp(),
        ModelKind::Exponential => 1.0 - (-3.0 * h / a).exp(),
    }
}

/// `γ(h)` for a model; `h < 0` is a domain error.
pub fn model_gamma(m: &VariogramModel, h: f64) -> Result<f64, VariogramError> {
    m.gamma(h)
}

/// Classical (Matheron) estimator over `n_bins` equal-width lag classes on
/// `[0, max_lag]`. Isotropic. Empty classes are omitted.
pub fn empirical_variogram(
    samples: &[(f64, f64, f64)],
    max_lag: f64,
    n_bins: usize,
) -> Result<ExperimentalVariogram, VariogramError> {
    if samples.len() < 2 {
        return Err(VariogramError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(max_lag > 0.0 && max_lag.is_finite()) {
        return Err(VariogramError::InvalidParameter(format!("max_lag {max_lag}")));
    }
    if n_bins == 0 {
        return Err(VariogramError::InvalidParameter("n_bins must be > 0".into()));
    }
    let width = max_lag / n_bins as f64;

    #[derive(Clone)]
    struct Acc {
        sq: Vec<f64>,
        dist: Vec<f64>,
        n: Vec<usize>,
    }
    let empty = || Acc {
        sq: vec![0.0; n_bins],
        dist: vec![0.0; n_bins],
        n: vec![0; n_bins],
    };
    // Fixed chunking keeps the floating-point summation order independent of
    // the thread count.
    const CHUNK: usize = 64;
    let partials: Vec<Acc> = (0..samples.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|rows| {
            let mut acc = empty();
            for &i in rows {
                let (xi, yi, zi) = samples[i];
                for &(xj, yj, zj) in &samples[i + 1..] {
                    let d = (xi - xj).hypot(yi - yj);
                    if d > max_lag {
                        continue;
                    }
                    let b = ((d / width) as usize).min(n_bins - 1);
                    let dz = zi - zj;
                    acc.sq[b] += dz * dz;
                    acc.dist[b] += d;
                    acc.n[b] += 1;
                }
            }
            acc
        })
        .collect();
    let mut total = empty();
    for p in partials {
        for b in 0..n_bins {
            total.sq[b] += p.sq[b];
            total.dist[b] += p.dist[b];
            total.n[b] += p.n[b];
        }
    }

    let bins: Vec<LagBin> = (0..n_bins)
        .filter(|&b| total.n[b] > 0)
        .map(|b| LagBin {
            lag: total.dist[b] / total.n[b] as f64,
            gamma: total.sq[b] / (2.0 * total.n[b] as f64),
            pairs: total.n[b],
        })
        .collect();
    if bins.is_empty() {
        return Err(VariogramError::Empty(max_lag));
    }
    Ok(ExperimentalVariogram {
        bins,
        max_lag,
    })
}

/// Pair-count weighted least squares fit.
///
/// For a fixed range the model is linear in (nugget, partial sill), so those
/// are solved exactly under non-negativity; the range is found by a coarse
/// scan of (0, 2·max_lag] followed by golden-section refinement around the
/// best scan point.
pub fn fit_model(ev: &ExperimentalVariogram, kind: ModelKind) -> Result<VariogramModel, VariogramError> {
    let bins: Vec<&LagBin> = ev.bins.iter().filter(|b| b.pairs > 0).collect();
    if bins.len() < 3 {
        return Err(VariogramError::InsufficientBins(bins.len()));
    }
    if bins.iter().all(|b| b.gamma == 0.0) {
        return VariogramModel::new(kind, 0.0, 0.0, ev.max_lag);
    }
    let upper = 2.0 * ev.max_lag;
    let objective = |a: f64| fit_linear(&bins, kind, a);

    const GRID: usize = 200;
    let candidates: Vec<f64> = (1..=GRID).map(|i| upper * i as f64 / GRID as f64).collect();
    let scores: Vec<f64> = candidates.iter().map(|&a| objective(a).2).collect();
    let best = (0..GRID)
        .min_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(i.cmp(&j)))
        .unwrap();
    let lo = if best == 0 { upper * 1e-6 } else { candidates[best - 1] };
    let hi = candidates[(best + 1).min(GRID - 1)];

    let a_ref = golden_section(lo, hi, |a| objective(a).2);
    let a_best = if objective(a_ref).2 <= scores[best] {
        a_ref
    } else {
        candidates[best]
    };
    let (nugget, sill, _) = objective(a_best);
    VariogramModel::new(kind, nugget, sill, a_best)
}

// Best non-negative (nugget, partial sill) for range `a`, and the weighted SSE.
fn fit_linear(bins: &[&LagBin], kind: ModelKind, a: f64) -> (f64, f64, f64) {
    let (mut sw, mut sg, mut sgg, mut sy, mut sgy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for b in bins {
        let w = b.pairs as f64;
        let g = if b.lag == 0.0 { 0.0 } else { shape(kind, b.lag, a) };
        sw += w;
        sg += w * g;
        sgg += w * g * g;
        sy += w * b.gamma;
        sgy += w * g * b.gamma;
    }
    let sse = |c0: f64, c: f64| {
        bins.iter()
            .map(|b| {
                let g = if b.lag == 0.0 {
                    0.0
                } else {
                    c0 + c * shape(kind, b.lag, a)
                };
                b.pairs as f64 * (b.gamma - g).powi(2)
            })
            .sum::<f64>()
    };

    let mut candidates = Vec::with_capacity(4);
    let det = sw * sgg - sg * sg;
    if det.abs() > 1e-14 * sw * sgg.max(f64::MIN_POSITIVE) {
        let c0 = (sgg * sy - sg * sgy) / det;
        let c = (sw * sgy - sg * sy) / det;
        if c0 >= 0.0 && c >= 0.0 {
            candidates.push((c0, c));
        }
    }
    if sgg > 0.0 {
        candidates.push((0.0, (sgy / sgg).max(0.0)));
    }
    candidates.push(((sy / sw).max(0.0), 0.0));
    candidates
        .into_iter()
        .map(|(c0, c)| (c0, c, sse(c0, c)))
        .min_by(|x, y| x.2.total_cmp(&y.2))
        .unwrap()
}

fn golden_section(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo) <= 1e-14 * hi.abs() {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sph(c0: f64, c: f64, a: f64) -> VariogramModel {
        VariogramModel::new(ModelKind::Spherical, c0, c, a).unwrap()
    }

    #[test]
    fn two_samples() {
        let ev = empirical_variogram(&[(0.0, 0.0, 1.0), (1.0, 0.0, 3.0)], 2.0, 4).unwrap();
        assert_eq!(ev.bins.len(), 1);
        assert_eq!(ev.bins[0].gamma, 2.0);
        assert_eq!(ev.bins[0].pairs, 1);
        assert_eq!(ev.bins[0].lag, 1.0);
    }

    #[test]
    fn constant_field_is_zero() {
        let s: Vec<_> = (0..20).map(|i| (i as f64, (i * 7 % 5) as f64, 4.0)).collect();
        let ev = empirical_variogram(&s, 10.0, 5).unwrap();
        assert!(ev.bins.iter().all(|b| b.gamma == 0.0));
    }

    #[test]
    fn linear_field_unit_lag() {
        let s: Vec<_> = (0..10).map(|i| (i as f64, 0.0, i as f64)).collect();
        // bins of width 1.5: lag-1 pairs fall alone in bin 0
        let ev = empirical_variogram(&s, 3.0, 2).unwrap();
        assert_eq!(ev.bins[0].lag, 1.0);
        assert_eq!(ev.bins[0].pairs, 9);
        assert!((ev.bins[0].gamma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_pairs_beyond_max_lag() {
        let s = [(0.0, 0.0, 1.0), (10.0, 0.0, 2.0)];
        assert_eq!(
            empirical_variogram(&s, 5.0, 3).unwrap_err(),
            VariogramError::Empty(5.0)
        );
        assert!(matches!(
            empirical_variogram(&s[..1], 5.0, 3),
            Err(VariogramError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn spherical_branches() {
        let m = sph(1.0, 4.0, 10.0);
        assert_eq!(model_gamma(&m, 0.0).unwrap(), 0.0);
        assert_eq!(model_gamma(&m, 20.0).unwrap(), 5.0);
        assert_eq!(model_gamma(&m, 10.0).unwrap(), 5.0);
        assert!((model_gamma(&m, 5.0).unwrap() - (1.0 + 4.0 * (0.75 - 0.0625))).abs() < 1e-15);
        assert!(matches!(
            model_gamma(&m, -1.0),
            Err(VariogramError::NegativeLag(_))
        ));
    }

    #[test]
    fn practical_range_convention() {
        for kind in [ModelKind::Gaussian, ModelKind::Exponential] {
            let m = VariogramModel::new(kind, 0.0, 1.0, 100.0).unwrap();
            assert_eq!(m.gamma(0.0).unwrap(), 0.0);
            let g = m.gamma(100.0).unwrap();
            assert!((g - (1.0 - (-3f64).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn model_rejects_bad_params() {
        assert!(VariogramModel::new(ModelKind::Spherical, -1.0, 1.0, 1.0).is_err());
        assert!(VariogramModel::new(ModelKind::Spherical, 0.0, -1.0, 1.0).is_err());
        assert!(VariogramModel::new(ModelKind::Spherical, 0.0, 1.0, 0.0).is_err());
        assert!("cubic".parse::<ModelKind>().is_err());
    }

    fn synthetic_bins(m: &VariogramModel, lags: &[f64]) -> ExperimentalVariogram {
        let bins = lags
            .iter()
            .enumerate()
            .map(|(i, &h)| LagBin {
                lag: h,
                gamma: m.gamma(h).unwrap(),
                pairs: 50 + 10 * i,
            })
            .collect();
        ExperimentalVariogram::from_bins(bins, *lags.last().unwrap()).unwrap()
    }

    #[test]
    fn noiseless_self_fit() {
        let truth = sph(0.5, 2.0, 150.0);
        let lags: Vec<f64> = (1..=10).map(|i| 20.0 * i as f64).collect();
        let ev = synthetic_bins(&truth, &lags);
        let fit = fit_model(&ev, ModelKind::Spherical).unwrap();
        assert!((fit.nugget - 0.5).abs() <= 1e-6 * 0.5, "{fit:?}");
        assert!((fit.partial_sill - 2.0).abs() <= 1e-6 * 2.0, "{fit:?}");
        assert!((fit.range - 150.0).abs() <= 1e-6 * 150.0, "{fit:?}");
        assert_eq!(fit, fit_model(&ev, ModelKind::Spherical).unwrap());
    }

    #[test]
    fn noiseless_self_fit_other_kinds() {
        for kind in [ModelKind::Gaussian, ModelKind::Exponential] {
            let truth = VariogramModel::new(kind, 1.0, 3.0, 80.0).unwrap();
            let lags: Vec<f64> = (1..=12).map(|i| 10.0 * i as f64).collect();
            let fit = fit_model(&synthetic_bins(&truth, &lags), kind).unwrap();
            assert!((fit.nugget - 1.0).abs() < 1e-6, "{kind} {fit:?}");
            assert!((fit.partial_sill - 3.0).abs() < 1e-6 * 3.0, "{kind} {fit:?}");
            assert!((fit.range - 80.0).abs() < 1e-6 * 80.0, "{kind} {fit:?}");
        }
    }

    #[test]
    fn zero_bins_fit() {
        let bins = (1..=4)
            .map(|i| LagBin {
                lag: i as f64,
                gamma: 0.0,
                pairs: 3,
            })
            .collect();
        let ev = ExperimentalVariogram::from_bins(bins, 4.0).unwrap();
        let fit = fit_model(&ev, ModelKind::Spherical).unwrap();
        assert_eq!((fit.nugget, fit.partial_sill, fit.range), (0.0, 0.0, 4.0));
    }

    #[test]
    fn too_few_bins() {
        let bins = vec![
            LagBin { lag: 1.0, gamma: 1.0, pairs: 1 },
            LagBin { lag: 2.0, gamma: 2.0, pairs: 1 },
        ];
        let ev = ExperimentalVariogram::from_bins(bins, 2.0).unwrap();
        assert_eq!(
            fit_model(&ev, ModelKind::Spherical).unwrap_err(),
            VariogramError::InsufficientBins(2)
        );
    }

    #[test]
    fn csv_header() {
        let ev = empirical_variogram(&[(0.0, 0.0, 1.0), (1.0, 0.0, 3.0)], 2.0, 4).unwrap();
        assert_eq!(ev.to_csv(), "lag_center,gamma,pair_count\n1.000000,2.000000,1\n");
    }
}
