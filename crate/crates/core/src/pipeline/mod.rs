//! End-to-end DSM workflow: acquire samples, project them to UTM, mesh and
//! smooth the region, fit a variogram, lift the mesh by kriging or IDW, and
//! write the surface, contours, variogram and a run report.
//!
//! Each stage is a public function so callers can run stages one by one;
//! [`run`] composes them exactly as the CLI does.

mod compare;
mod config;
mod export;

pub use compare::{compare_methods, dihedral_roughness, CompareReport};
pub use config::{ExplicitVariogram, Formats, InputSource, Method, PipelineConfig, DEMO_REGION};
pub use export::{
    contours_to_csv, export_mesh, mesh_to_obj, mesh_to_vtk, parse_obj, parse_vtk, ExportError, MeshFormat,
    ParsedMesh,
};

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::acquisition::{
    clip_to_region, convert_pointset, parse_point_file, scan_grid, synthetic_terrain, AcquisitionError, Coord,
    Crs, CrsTarget, PointSet, Rect, ScanSpec,
};
use crate::geodesy::GeoPoint;
use crate::interpolate::{
    lift_mesh, samples_from_points, IdwConfig, InterpolateError, LiftMethod, LiftSummary, Sample,
};
use crate::mesh::{
    delaunay_triangulate, extract_contours, laplacian_smooth, mesh_quality, seed_region, MeshError, MeshQuality,
    Point2, Quad, SeedStrategy, TriMesh,
};
use crate::variogram::{empirical_variogram, fit_model, ExperimentalVariogram, VariogramError, VariogramModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Acquire,
    Convert,
    Mesh,
    Variogram,
    Interpolate,
    Contour,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Acquire => "acquire",
            Stage::Convert => "convert",
            Stage::Mesh => "mesh",
            Stage::Variogram => "variogram",
            Stage::Interpolate => "interpolate",
            Stage::Contour => "contour",
            Stage::Export => "export",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Variogram(#[from] VariogramError),
    #[error(transparent)]
    Interpolate(#[from] InterpolateError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{0}")]
    Verify(String),
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

/// Process exit code for configuration problems.
pub const EXIT_CONFIG: i32 = 1;
/// Process exit code for unreadable, malformed or insufficient data.
pub const EXIT_DATA: i32 = 2;
/// Process exit code for numerical failures (singular systems, bad meshes).
pub const EXIT_NUMERICAL: i32 = 3;

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<StageError>) -> Self {
        Self {
            stage,
            source: source.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Stage::Config, StageError::Config(message.into()))
    }

    /// The cause without the stage prefix.
    pub fn cause_text(&self) -> String {
        self.source.to_string()
    }

    pub fn exit_code(&self) -> i32 {
        use AcquisitionError as A;
        use InterpolateError as I;
        match &self.source {
            StageError::Config(_) => EXIT_CONFIG,
            StageError::Read { .. } | StageError::Export(_) | StageError::Verify(_) => EXIT_DATA,
            StageError::Acquisition(e) => match e {
                A::Config(_) | A::InvalidSpec(_) | A::InvalidRegion(_) => EXIT_CONFIG,
                _ => EXIT_DATA,
            },
            StageError::Mesh(e) => match e {
                MeshError::Config(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
            StageError::Variogram(e) => match e {
                VariogramError::InvalidParameter(_) => EXIT_CONFIG,
                VariogramError::TooFewSamples { .. } | VariogramError::Empty(_) => EXIT_DATA,
                _ => EXIT_NUMERICAL,
            },
            StageError::Interpolate(e) => match e {
                I::InvalidParameter(_) | I::UnsupportedDegree(_) => EXIT_CONFIG,
                I::NoSamples | I::TooFewSamples { .. } | I::DuplicateSample(..) => EXIT_DATA,
                I::Variogram(VariogramError::InvalidParameter(_)) => EXIT_CONFIG,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}

fn at<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::new(stage, e)
}

/// Samples at each step of acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquired {
    /// As read or scanned.
    pub raw: PointSet,
    /// Inside the region plus margin, in the region's CRS.
    pub clipped: PointSet,
    /// Clipped samples in a single UTM zone.
    pub utm: PointSet,
}

/// Geographic bounding box of a region given in any CRS.
fn geographic_bounds(region: &Rect, crs: Crs) -> Result<Rect, PipelineError> {
    match crs {
        Crs::Wgs84 => Ok(*region),
        Crs::Utm { .. } => {
            let corners = rect_corners(region)
                .iter()
                .map(|p| Coord { x: p.x, y: p.y, z: 0.0 })
                .collect();
            let ps = PointSet::new(crs, corners).map_err(at(Stage::Config))?;
            let geo = convert_pointset(&ps, CrsTarget::Wgs84).map_err(at(Stage::Config))?;
            let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) =
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for c in geo.points() {
                lo_x = lo_x.min(c.x);
                lo_y = lo_y.min(c.y);
                hi_x = hi_x.max(c.x);
                hi_y = hi_y.max(c.y);
            }
            Rect::new(lo_x, lo_y, hi_x, hi_y).map_err(at(Stage::Config))
        }
    }
}

fn rect_corners(r: &Rect) -> [Point2; 4] {
    [
        Point2::new(r.min_x, r.min_y),
        Point2::new(r.max_x, r.min_y),
        Point2::new(r.max_x, r.max_y),
        Point2::new(r.min_x, r.max_y),
    ]
}

/// Reads or scans the samples, clips them to the region (plus margin) and
/// projects them to one UTM zone.
pub fn acquire(cfg: &PipelineConfig) -> Result<Acquired, PipelineError> {
    let search = cfg.region.expanded(cfg.margin);
    let raw = match &cfg.input {
        InputSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| {
                PipelineError::new(
                    Stage::Acquire,
                    StageError::Read {
                        path: path.display().to_string(),
                        source,
                    },
                )
            })?;
            parse_point_file(&text).map_err(at(Stage::Acquire))?
        }
        InputSource::Synthetic {
            kind,
            params,
            rows,
            cols,
        } => {
            let geo_region = geographic_bounds(&cfg.region, cfg.region_crs)?;
            let (lon, lat) = geo_region.center();
            let terrain = synthetic_terrain(kind, *params, GeoPoint::new(lat, lon, 0.0)).map_err(at(Stage::Acquire))?;
            let scan_region = geographic_bounds(&search, cfg.region_crs)?;
            let spec = ScanSpec::new(scan_region, *rows, *cols).map_err(at(Stage::Acquire))?;
            scan_grid(&terrain, &spec).map_err(at(Stage::Acquire))?
        }
    };
    if raw.is_empty() {
        return Err(PipelineError::new(Stage::Acquire, AcquisitionError::Empty));
    }
    let in_region_crs = match cfg.region_crs {
        Crs::Wgs84 => convert_pointset(&raw, CrsTarget::Wgs84),
        Crs::Utm { zone, .. } => convert_pointset(&raw, CrsTarget::Utm(Some(zone))),
    }
    .map_err(at(Stage::Convert))?;
    let clipped = clip_to_region(&in_region_crs, &search, cfg.region_crs).map_err(at(Stage::Acquire))?;
    if clipped.is_empty() {
        return Err(PipelineError::new(Stage::Acquire, AcquisitionError::Empty));
    }
    let zone = cfg.utm_zone.or(match cfg.region_crs {
        Crs::Utm { zone, .. } => Some(zone),
        Crs::Wgs84 => None,
    });
    let utm = convert_pointset(&clipped, CrsTarget::Utm(zone)).map_err(at(Stage::Convert))?;
    log::info!(
        "acquired {} samples, {} inside the region, projected to {}",
        raw.len(),
        clipped.len(),
        utm.crs()
    );
    Ok(Acquired { raw, clipped, utm })
}

/// The region as a quadrilateral in the samples' UTM frame. A geographic
/// rectangle projects to a slightly skewed quadrilateral.
pub fn region_quad(cfg: &PipelineConfig, utm: Crs) -> Result<Quad, PipelineError> {
    let zone = match utm {
        Crs::Utm { zone, .. } => zone,
        Crs::Wgs84 => return Err(PipelineError::config("mesh frame must be UTM")),
    };
    if cfg.region_crs == utm {
        let r = &cfg.region;
        return Ok(Quad::rect(r.min_x, r.min_y, r.max_x, r.max_y));
    }
    let corners: Vec<Coord> = rect_corners(&cfg.region)
        .iter()
        .map(|p| Coord { x: p.x, y: p.y, z: 0.0 })
        .collect();
    let ps = PointSet::new(cfg.region_crs, corners).map_err(at(Stage::Convert))?;
    let projected = convert_pointset(&ps, CrsTarget::Utm(Some(zone))).map_err(at(Stage::Convert))?;
    if projected.crs() != utm {
        return Err(PipelineError::new(
            Stage::Convert,
            AcquisitionError::CrsMismatch {
                points: utm,
                region: projected.crs(),
            },
        ));
    }
    let p = projected.points();
    Quad::from_corners([0, 1, 2, 3].map(|i| Point2::new(p[i].x, p[i].y))).map_err(at(Stage::Mesh))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMesh {
    pub mesh: TriMesh,
    pub raw_quality: MeshQuality,
    pub smoothed_quality: MeshQuality,
}

/// Seeds the region, triangulates and smooths.
pub fn build_mesh(cfg: &PipelineConfig, quad: &Quad) -> Result<PlanarMesh, PipelineError> {
    let strategy = if cfg.jitter {
        SeedStrategy::Jittered { seed: cfg.seed }
    } else {
        SeedStrategy::Grid
    };
    let seeds = seed_region(quad, cfg.spacing, strategy).map_err(at(Stage::Mesh))?;
    let tri = delaunay_triangulate(&seeds).map_err(at(Stage::Mesh))?;
    let planar = tri.mesh.peel_boundary_slivers();
    let peeled = tri.mesh.triangle_count() - planar.triangle_count();
    if peeled > 0 {
        log::debug!("removed {peeled} sliver triangles along the region boundary");
    }
    let raw_quality = mesh_quality(&planar).map_err(at(Stage::Mesh))?;
    let mesh = laplacian_smooth(&planar, cfg.smooth_iters);
    let smoothed_quality = mesh_quality(&mesh).map_err(at(Stage::Mesh))?;
    log::info!(
        "mesh: {} vertices, {} triangles; mean min angle {:.2}° -> {:.2}° after {} sweeps",
        mesh.vertex_count(),
        mesh.triangle_count(),
        raw_quality.mean_min_angle,
        smoothed_quality.mean_min_angle,
        cfg.smooth_iters
    );
    Ok(PlanarMesh {
        mesh,
        raw_quality,
        smoothed_quality,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariogramStage {
    pub experimental: ExperimentalVariogram,
    pub model: VariogramModel,
    /// False when the model was given explicitly.
    pub fitted: bool,
}

/// Experimental variogram of the samples and the model used for kriging:
/// the explicit one from the config, or a fit of the configured kind.
pub fn variogram_stage(cfg: &PipelineConfig, samples: &[Sample], quad: &Quad) -> Result<VariogramStage, PipelineError> {
    let c = quad.corners;
    let max_lag = cfg
        .max_lag
        .unwrap_or_else(|| 0.5 * c[0].dist(c[2]).max(c[1].dist(c[3])));
    let triples: Vec<(f64, f64, f64)> = samples.iter().map(|s| (s.x, s.y, s.z)).collect();
    let experimental = empirical_variogram(&triples, max_lag, cfg.lag_bins).map_err(at(Stage::Variogram))?;
    let v = &cfg.variogram;
    let (model, fitted) = match (v.nugget, v.partial_sill, v.range) {
        (Some(n), Some(s), Some(r)) => (
            VariogramModel::new(cfg.model, n, s, r).map_err(at(Stage::Variogram))?,
            false,
        ),
        _ => (fit_model(&experimental, cfg.model).map_err(at(Stage::Variogram))?, true),
    };
    log::info!(
        "variogram {}: nugget {:.6}, partial sill {:.6}, range {:.3} m ({})",
        model.kind,
        model.nugget,
        model.partial_sill,
        model.range,
        if fitted { "fitted" } else { "explicit" }
    );
    Ok(VariogramStage {
        experimental,
        model,
        fitted,
    })
}

/// Predictor settings for a method; kriging needs the variogram model.
pub fn lift_method(cfg: &PipelineConfig, method: Method, model: Option<VariogramModel>) -> Result<LiftMethod, PipelineError> {
    match method {
        Method::Idw => Ok(LiftMethod::Idw(
            IdwConfig::new(cfg.power, cfg.neighbors).map_err(at(Stage::Interpolate))?,
        )),
        Method::Kriging => {
            let model = model.ok_or_else(|| PipelineError::config("kriging needs a variogram model"))?;
            Ok(LiftMethod::Kriging {
                model,
                drift_degree: cfg.drift,
                neighborhood: cfg.neighbors,
            })
        }
    }
}

/// `n` evenly spaced levels strictly inside `[lo, hi]`, at the centres of
/// `n` equal slices; none for a flat surface.
pub fn contour_levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if !(hi > lo) || n == 0 {
        return Vec::new();
    }
    let step = (hi - lo) / n as f64;
    (0..n).map(|i| lo + (i as f64 + 0.5) * step).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub method: Method,
    pub samples_acquired: usize,
    pub samples_clipped: usize,
    pub crs: Crs,
    pub vertices: usize,
    pub edges: usize,
    pub triangles: usize,
    pub raw_quality: MeshQuality,
    pub smoothed_quality: MeshQuality,
    pub surface_quality: MeshQuality,
    /// Model used for kriging; `None` for IDW.
    pub variogram: Option<VariogramModel>,
    pub variogram_fitted: bool,
    pub z_min: f64,
    pub z_max: f64,
    pub contour_levels: usize,
    pub contour_polylines: usize,
    pub fallback_vertices: Vec<usize>,
    /// Wall time of the lift; logged, not written, so artifacts stay
    /// byte-identical across runs.
    pub interpolation_time: Duration,
    pub artifacts: Vec<PathBuf>,
}

impl RunReport {
    /// `key,value` CSV. Timing is deliberately omitted.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(s, "{k},{v}");
        };
        row("method", self.method.to_string());
        row("samples_acquired", self.samples_acquired.to_string());
        row("samples_clipped", self.samples_clipped.to_string());
        row("crs", self.crs.to_string());
        row("vertices", self.vertices.to_string());
        row("edges", self.edges.to_string());
        row("triangles", self.triangles.to_string());
        for (name, q) in [
            ("planar_raw", &self.raw_quality),
            ("planar_smoothed", &self.smoothed_quality),
            ("surface", &self.surface_quality),
        ] {
            row(&format!("{name}_min_angle_deg"), format!("{:.6}", q.min_angle));
            row(&format!("{name}_mean_min_angle_deg"), format!("{:.6}", q.mean_min_angle));
            row(&format!("{name}_worst_aspect_ratio"), format!("{:.6}", q.worst_aspect_ratio));
            row(&format!("{name}_degenerate_triangles"), q.degenerate.len().to_string());
        }
        if let Some(m) = &self.variogram {
            row("variogram_model", m.kind.to_string());
            row("variogram_nugget", format!("{:.6}", m.nugget));
            row("variogram_partial_sill", format!("{:.6}", m.partial_sill));
            row("variogram_range", format!("{:.6}", m.range));
            row("variogram_fitted", self.variogram_fitted.to_string());
        }
        row("z_min", format!("{:.6}", self.z_min));
        row("z_max", format!("{:.6}", self.z_max));
        row("contour_levels", self.contour_levels.to_string());
        row("contour_polylines", self.contour_polylines.to_string());
        row("fallback_vertex_count", self.fallback_vertices.len().to_string());
        let list: Vec<String> = self.fallback_vertices.iter().map(|v| v.to_string()).collect();
        row("fallback_vertices", list.join(" "));
        s
    }
}

/// Files written so far; removed again if the run fails.
struct Artifacts {
    written: Vec<PathBuf>,
    committed: bool,
}

impl Artifacts {
    fn write(&mut self, path: PathBuf, text: &str) -> Result<(), PipelineError> {
        export::write_text(&path, text).map_err(at(Stage::Export))?;
        self.written.push(path);
        Ok(())
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                if let Err(e) = std::fs::remove_file(p) {
                    log::warn!("could not remove partial output {}: {e}", p.display());
                }
            }
        }
    }
}

/// Checks that an exported mesh reads back with the expected counts.
fn verify_export(text: &str, format: MeshFormat, vertices: usize, triangles: usize) -> Result<(), PipelineError> {
    let parsed = match format {
        MeshFormat::Obj => parse_obj(text),
        MeshFormat::Vtk => parse_vtk(text),
    }
    .map_err(at(Stage::Export))?;
    if parsed.vertices.len() != vertices || parsed.triangles.len() != triangles {
        return Err(PipelineError::new(
            Stage::Export,
            StageError::Verify(format!(
                "{} file has {} vertices / {} triangles, expected {vertices} / {triangles}",
                format.extension(),
                parsed.vertices.len(),
                parsed.triangles.len()
            )),
        ));
    }
    Ok(())
}

/// Lifted surface plus the pieces that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifted {
    pub acquired: Acquired,
    pub planar: PlanarMesh,
    pub variogram: Option<VariogramStage>,
    pub surface: TriMesh,
    pub summary: LiftSummary,
    pub interpolation_time: Duration,
}

/// Acquisition, meshing, variogram (kriging only) and lift, without writing
/// anything.
pub fn lift(cfg: &PipelineConfig) -> Result<Lifted, PipelineError> {
    cfg.validate()?;
    let acquired = acquire(cfg)?;
    let quad = region_quad(cfg, acquired.utm.crs())?;
    let planar = build_mesh(cfg, &quad)?;
    let samples = samples_from_points(&acquired.utm).map_err(at(Stage::Interpolate))?;
    let variogram = match cfg.method {
        Method::Kriging => Some(variogram_stage(cfg, &samples, &quad)?),
        Method::Idw => None,
    };
    let method = lift_method(cfg, cfg.method, variogram.as_ref().map(|v| v.model))?;
    let start = Instant::now();
    let out = lift_mesh(&planar.mesh, &samples, &method).map_err(at(Stage::Interpolate))?;
    let interpolation_time = start.elapsed();
    log::info!(
        "{} lift of {} vertices took {:.3} s; z in [{:.3}, {:.3}]",
        cfg.method,
        out.mesh.vertex_count(),
        interpolation_time.as_secs_f64(),
        out.summary.z_min,
        out.summary.z_max
    );
    Ok(Lifted {
        acquired,
        planar,
        variogram,
        surface: out.mesh,
        summary: out.summary,
        interpolation_time,
    })
}

/// Runs the whole workflow and writes the artifacts into `cfg.out_dir`:
/// `dsm.obj`, `dsm.vtk`, `contours.csv`, `variogram.csv` (kriging only) and
/// `report.csv`. On failure, files written by this run are removed.
pub fn run(cfg: &PipelineConfig) -> Result<RunReport, PipelineError> {
    let lifted = lift(cfg)?;
    let surface = &lifted.surface;
    let levels = contour_levels(lifted.summary.z_min, lifted.summary.z_max, cfg.contour_levels);
    let contours = extract_contours(surface, &levels).map_err(at(Stage::Contour))?;

    let mut report = RunReport {
        method: cfg.method,
        samples_acquired: lifted.acquired.raw.len(),
        samples_clipped: lifted.acquired.clipped.len(),
        crs: lifted.acquired.utm.crs(),
        vertices: surface.vertex_count(),
        edges: surface.edges().len(),
        triangles: surface.triangle_count(),
        raw_quality: lifted.planar.raw_quality.clone(),
        smoothed_quality: lifted.planar.smoothed_quality.clone(),
        surface_quality: lifted.summary.quality.clone(),
        variogram: lifted.variogram.as_ref().map(|v| v.model),
        variogram_fitted: lifted.variogram.as_ref().is_some_and(|v| v.fitted),
        z_min: lifted.summary.z_min,
        z_max: lifted.summary.z_max,
        contour_levels: levels.len(),
        contour_polylines: contours.iter().map(|c| c.polylines.len()).sum(),
        fallback_vertices: lifted.summary.fallback_vertices.clone(),
        interpolation_time: lifted.interpolation_time,
        artifacts: Vec::new(),
    };

    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| {
        PipelineError::new(
            Stage::Export,
            ExportError::Io {
                path: cfg.out_dir.display().to_string(),
                source,
            },
        )
    })?;
    let mut files = Artifacts {
        written: Vec::new(),
        committed: false,
    };
    let out = |name: &str| cfg.out_dir.join(name);
    for (enabled, format) in [(cfg.formats.obj, MeshFormat::Obj), (cfg.formats.vtk, MeshFormat::Vtk)] {
        if !enabled {
            continue;
        }
        let text = match format {
            MeshFormat::Obj => mesh_to_obj(surface),
            MeshFormat::Vtk => mesh_to_vtk(surface),
        }
        .map_err(at(Stage::Export))?;
        let path = out(&format!("dsm.{}", format.extension()));
        files.write(path.clone(), &text)?;
        let back = std::fs::read_to_string(&path).map_err(|source| {
            PipelineError::new(
                Stage::Export,
                StageError::Read {
                    path: path.display().to_string(),
                    source,
                },
            )
        })?;
        verify_export(&back, format, report.vertices, report.triangles)?;
    }
    if cfg.formats.csv {
        files.write(out("contours.csv"), &contours_to_csv(&contours))?;
        if let Some(v) = &lifted.variogram {
            files.write(out("variogram.csv"), &v.experimental.to_csv())?;
        }
    }
    let report_path = out("report.csv");
    files.write(report_path, &report.to_csv())?;
    files.committed = true;
    report.artifacts = files.written.clone();
    Ok(report)
}

/// Writes a point set in the acquisition text format.
pub fn write_points(ps: &PointSet, path: &Path) -> Result<(), PipelineError> {
    export::write_text(path, &crate::acquisition::write_point_file(ps)).map_err(at(Stage::Export))
}
