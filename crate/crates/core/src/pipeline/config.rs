//! Flat `key = value` run configuration. Every key can also be set from the
//! command line through [`PipelineConfig::set`].

use std::path::PathBuf;
use std::str::FromStr;

use crate::acquisition::{Crs, Rect, TerrainParams};
use crate::geodesy::parse_dms;
use crate::interpolate::Neighborhood;
use crate::variogram::ModelKind;

use super::PipelineError;

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Point file in the acquisition text format.
    File(PathBuf),
    /// Analytic terrain sampled on a lattice over the (expanded) region.
    Synthetic {
        kind: String,
        params: TerrainParams,
        rows: usize,
        cols: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Kriging,
    Idw,
}

impl FromStr for Method {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uk" | "kriging" => Ok(Method::Kriging),
            "idw" => Ok(Method::Idw),
            other => Err(PipelineError::config(format!("unknown method {other:?}; use uk or idw"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Kriging => "uk",
            Method::Idw => "idw",
        })
    }
}

/// Artifact formats to write. The run report is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub obj: bool,
    pub vtk: bool,
    /// Contour and variogram CSV files.
    pub csv: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self {
            obj: true,
            vtk: true,
            csv: true,
        }
    }
}

impl FromStr for Formats {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = Formats {
            obj: false,
            vtk: false,
            csv: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "obj" => f.obj = true,
                "vtk" => f.vtk = true,
                "csv" => f.csv = true,
                other => return Err(PipelineError::config(format!("unknown format {other:?}"))),
            }
        }
        Ok(f)
    }
}

/// Explicit variogram parameters; `None` means fit from the data.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExplicitVariogram {
    pub nugget: Option<f64>,
    pub partial_sill: Option<f64>,
    pub range: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input: InputSource,
    /// Region of interest; `region_crs` says how to read it.
    pub region: Rect,
    pub region_crs: Crs,
    /// The `region` value as given, re-read when `region.crs` is set later,
    /// so the two keys may appear in either order.
    pub region_text: Option<String>,
    /// Fraction of the region size added on every side when scanning and
    /// clipping, so edge vertices have samples on both sides.
    pub margin: f64,
    /// UTM zone override; `None` uses the zone of the sample centroid.
    pub utm_zone: Option<u8>,
    pub spacing: f64,
    pub smooth_iters: usize,
    pub jitter: bool,
    pub seed: u64,
    pub method: Method,
    pub model: ModelKind,
    pub drift: u32,
    pub neighbors: Neighborhood,
    pub power: f64,
    pub variogram: ExplicitVariogram,
    /// Largest lag for the experimental variogram; `None` uses half the
    /// region diagonal.
    pub max_lag: Option<f64>,
    pub lag_bins: usize,
    pub contour_levels: usize,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

/// Corners of the reference study area, latitude/longitude.
pub const DEMO_REGION: (&str, &str, &str, &str) = (
    "N48°43'20.64\"",
    "E7°20'12.48\"",
    "N48°43'33.6\"",
    "E7°20'25.44\"",
);

impl Default for PipelineConfig {
    /// The desk-scale demo: a gaussian hill scanned on a 50 × 100 lattice
    /// over the reference study area, meshed at 5 m and kriged with a
    /// spherical model and linear drift.
    fn default() -> Self {
        let (a, b, c, d) = DEMO_REGION;
        let region = Rect::geographic(
            parse_dms(a).expect("demo latitude"),
            parse_dms(b).expect("demo longitude"),
            parse_dms(c).expect("demo latitude"),
            parse_dms(d).expect("demo longitude"),
        )
        .expect("demo region");
        Self {
            input: InputSource::Synthetic {
                kind: "gaussian_hill".into(),
                params: TerrainParams::default(),
                rows: 50,
                cols: 100,
            },
            region,
            region_crs: Crs::Wgs84,
            region_text: None,
            margin: 0.1,
            utm_zone: None,
            spacing: 5.0,
            smooth_iters: 10,
            jitter: true,
            seed: 42,
            method: Method::Kriging,
            model: ModelKind::Spherical,
            drift: 1,
            neighbors: Neighborhood::KNearest(16),
            power: 2.0,
            variogram: ExplicitVariogram::default(),
            max_lag: None,
            lag_bins: 15,
            contour_levels: 10,
            out_dir: PathBuf::from("out"),
            formats: Formats::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .trim()
        .parse()
        .map_err(|_| PipelineError::config(format!("{key}: cannot parse {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool, PipelineError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(PipelineError::config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

impl PipelineConfig {
    /// Parses a config file on top of the defaults. Blank lines and `#`
    /// comments are ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::config(format!("line {}: expected `key = value`", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| PipelineError::config(format!("line {}: {}", n + 1, e.cause_text())))?;
        }
        Ok(cfg)
    }

    /// Sets one key. `region` is read in the current `region.crs`, so set
    /// the CRS first.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        match key {
            "input" => {
                self.input = if value.eq_ignore_ascii_case("synthetic") {
                    InputSource::Synthetic {
                        kind: "gaussian_hill".into(),
                        params: TerrainParams::default(),
                        rows: 50,
                        cols: 100,
                    }
                } else {
                    InputSource::File(PathBuf::from(value))
                }
            }
            "terrain" => {
                value
                    .parse::<crate::acquisition::TerrainKind>()
                    .map_err(|e| PipelineError::config(e.to_string()))?;
                *self.synthetic_mut(key)?.0 = value.to_string();
            }
            "scan.rows" => *self.synthetic_mut(key)?.2 = num(key, value)?,
            "scan.cols" => *self.synthetic_mut(key)?.3 = num(key, value)?,
            k if k.starts_with("terrain.") => {
                let v: f64 = num(key, value)?;
                let p = self.synthetic_mut(key)?.1;
                match &k["terrain.".len()..] {
                    "base" => p.base = v,
                    "amplitude" => p.amplitude = v,
                    "sigma" => p.sigma = v,
                    "slope_east" => p.slope_east = v,
                    "slope_north" => p.slope_north = v,
                    "center_east" => p.center_east = v,
                    "center_north" => p.center_north = v,
                    "azimuth" => p.azimuth = v,
                    _ => return Err(PipelineError::config(format!("unknown key {key:?}"))),
                }
            }
            "region" => {
                self.region = parse_region(value, self.region_crs)?;
                self.region_text = Some(value.to_string());
            }
            "region.crs" => {
                self.region_crs = value
                    .parse()
                    .map_err(|e: String| PipelineError::config(format!("region.crs: {e}")))?;
                if let Some(text) = &self.region_text {
                    self.region = parse_region(text, self.region_crs)?;
                }
            }
            "margin" => self.margin = num(key, value)?,
            "utm.zone" => {
                self.utm_zone = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(num(key, value)?)
                }
            }
            "spacing" | "mesh.spacing" => self.spacing = num(key, value)?,
            "smooth_iters" | "mesh.smooth_iters" => self.smooth_iters = num(key, value)?,
            "mesh.jitter" => self.jitter = flag(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "method" => self.method = value.parse()?,
            "variogram" | "variogram.model" => {
                self.model = value.parse().map_err(|e: crate::variogram::VariogramError| {
                    PipelineError::config(e.to_string())
                })?
            }
            "variogram.nugget" => self.variogram.nugget = Some(num(key, value)?),
            "variogram.partial_sill" => self.variogram.partial_sill = Some(num(key, value)?),
            "variogram.range" => self.variogram.range = Some(num(key, value)?),
            "variogram.max_lag" => self.max_lag = Some(num(key, value)?),
            "variogram.bins" => self.lag_bins = num(key, value)?,
            "drift" => self.drift = num(key, value)?,
            "neighbors" => {
                self.neighbors = value
                    .parse()
                    .map_err(|e: crate::interpolate::InterpolateError| PipelineError::config(e.to_string()))?
            }
            "power" => self.power = num(key, value)?,
            "contours.levels" => self.contour_levels = num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "format" => self.formats = value.parse()?,
            _ => return Err(PipelineError::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    fn synthetic_mut(
        &mut self,
        key: &str,
    ) -> Result<(&mut String, &mut TerrainParams, &mut usize, &mut usize), PipelineError> {
        if let InputSource::File(_) = self.input {
            self.input = InputSource::Synthetic {
                kind: "gaussian_hill".into(),
                params: TerrainParams::default(),
                rows: 50,
                cols: 100,
            };
            log::debug!("{key} switches the input to a synthetic scan");
        }
        match &mut self.input {
            InputSource::Synthetic {
                kind,
                params,
                rows,
                cols,
            } => Ok((kind, params, rows, cols)),
            InputSource::File(_) => unreachable!(),
        }
    }

    /// Checks the invariants that cannot be enforced key by key.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::config(m));
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad(format!("spacing must be positive, got {}", self.spacing));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad(format!("margin must be non-negative, got {}", self.margin));
        }
        if self.drift > 1 {
            return bad(format!("drift must be 0 or 1, got {}", self.drift));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return bad(format!("power must be positive, got {}", self.power));
        }
        if self.neighbors == Neighborhood::KNearest(0) {
            return bad("neighbors must be positive".into());
        }
        if self.lag_bins == 0 {
            return bad("variogram.bins must be positive".into());
        }
        if let Some(l) = self.max_lag {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("variogram.max_lag must be positive, got {l}"));
            }
        }
        let v = &self.variogram;
        let given = [v.nugget, v.partial_sill, v.range].iter().filter(|x| x.is_some()).count();
        if given != 0 && given != 3 {
            return bad("explicit variogram needs variogram.nugget, variogram.partial_sill and variogram.range".into());
        }
        if let InputSource::Synthetic { rows, cols, .. } = &self.input {
            if *rows < 2 || *cols < 2 {
                return bad(format!("scan needs at least 2 rows and 2 columns, got {rows}x{cols}"));
            }
        }
        if let Crs::Wgs84 = self.region_crs {
            if self.region.min_y < -80.0 || self.region.max_y > 84.0 {
                return bad("region latitude must lie within the UTM band [-80, 84]".into());
            }
        }
        Ok(())
    }
}

/// `a, b, c, d`: `lat_min, lon_min, lat_max, lon_max` (decimal degrees or
/// DMS) for a geographic region, `min_e, min_n, max_e, max_n` for UTM.
fn parse_region(value: &str, crs: Crs) -> Result<Rect, PipelineError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(PipelineError::config(format!(
            "region needs 4 comma-separated values, got {value:?}"
        )));
    }
    let rect = match crs {
        Crs::Wgs84 => {
            let mut v = [0.0; 4];
            for (slot, p) in v.iter_mut().zip(&parts) {
                *slot = parse_dms(p).map_err(|e| PipelineError::config(format!("region: {e}")))?;
            }
            Rect::geographic(v[0], v[1], v[2], v[3])
        }
        Crs::Utm { .. } => {
            let v: Vec<f64> = parts
                .iter()
                .map(|p| num::<f64>("region", p))
                .collect::<Result<_, _>>()?;
            Rect::new(v[0], v[1], v[2], v[3])
        }
    };
    rect.map_err(|e| PipelineError::config(e.to_string()))
}
