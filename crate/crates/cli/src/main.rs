//! `dsm`: build discrete surface models from scattered elevation samples.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsm_core::acquisition::write_point_file;
use dsm_core::interpolate::samples_from_points;
use dsm_core::mesh::MeshQuality;
use dsm_core::pipeline::{
    self, acquire, build_mesh, compare_methods, export_mesh, region_quad, variogram_stage, ExportError, MeshFormat,
    PipelineConfig, PipelineError, Stage, EXIT_CONFIG,
};

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Parser, Debug)]
#[command(name = "dsm", version, about = "Discrete surface models from scattered elevation samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Acquire samples (file or synthetic scan) and write them as a point file.
    Scan,
    /// Clip the samples to the region and project them to UTM.
    Convert,
    /// Build and smooth the planar mesh of the region.
    Mesh,
    /// Compute the experimental variogram and fit the model.
    Variogram,
    /// Lift the planar mesh to a surface and export it.
    Lift,
    /// Run the full workflow: surface, contours, variogram and report.
    Run,
    /// Lift with kriging and IDW and compare the surfaces.
    Compare,
}

#[derive(Args, Debug, Default)]
struct Options {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Point file to read instead of the synthetic scan.
    #[arg(long, global = true, value_name = "PATH")]
    input: Option<String>,
    /// Interpolation method: uk or idw.
    #[arg(long, global = true, value_name = "uk|idw")]
    method: Option<String>,
    /// IDW power parameter.
    #[arg(long, global = true, value_name = "P")]
    power: Option<String>,
    /// Variogram model: spherical, gaussian or exponential.
    #[arg(long, global = true, value_name = "MODEL")]
    variogram: Option<String>,
    /// Drift degree for kriging: 0 or 1.
    #[arg(long, global = true, value_name = "0|1")]
    drift: Option<String>,
    /// Neighbourhood: a sample count or `global`.
    #[arg(long, global = true, value_name = "N|global")]
    neighbors: Option<String>,
    /// Mesh spacing in metres.
    #[arg(long, global = true, value_name = "M")]
    spacing: Option<String>,
    /// Laplacian smoothing sweeps.
    #[arg(long = "smooth-iters", global = true, value_name = "K")]
    smooth_iters: Option<String>,
    /// Seed for mesh jitter.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<String>,
    /// Comma-separated output formats: obj, vtk, csv.
    #[arg(long, global = true, value_name = "LIST")]
    format: Option<String>,
    /// Any other configuration key, e.g. `--set terrain=ridge`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Options {
    /// Config file (or defaults) with the command-line overrides applied.
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| PipelineError::config(format!("cannot read {}: {e}", path.display())))?;
                PipelineConfig::parse(&text)?
            }
            None => PipelineConfig::default(),
        };
        let flags = [
            ("input", &self.input),
            ("method", &self.method),
            ("power", &self.power),
            ("variogram", &self.variogram),
            ("drift", &self.drift),
            ("neighbors", &self.neighbors),
            ("spacing", &self.spacing),
            ("smooth_iters", &self.smooth_iters),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| PipelineError::config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| {
        PipelineError::new(
            Stage::Export,
            ExportError::Io {
                path: path.display().to_string(),
                source,
            },
        )
    })
}

fn out_dir(cfg: &PipelineConfig) -> Result<&Path, PipelineError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| {
        PipelineError::new(
            Stage::Export,
            ExportError::Io {
                path: cfg.out_dir.display().to_string(),
                source,
            },
        )
    })?;
    Ok(&cfg.out_dir)
}

fn mesh_formats(cfg: &PipelineConfig) -> Vec<MeshFormat> {
    let mut f = Vec::new();
    if cfg.formats.obj {
        f.push(MeshFormat::Obj);
    }
    if cfg.formats.vtk {
        f.push(MeshFormat::Vtk);
    }
    f
}

fn print_quality(label: &str, q: &MeshQuality) {
    say!(
        "{label}: min angle {:.3}°, mean min angle {:.3}°, worst aspect ratio {:.3}, degenerate {}",
        q.min_angle,
        q.mean_min_angle,
        q.worst_aspect_ratio,
        q.degenerate.len()
    );
}

fn execute(command: Command, cfg: &PipelineConfig) -> Result<(), PipelineError> {
    match command {
        Command::Scan => {
            let acquired = acquire(cfg)?;
            let path = out_dir(cfg)?.join("points.txt");
            write_file(&path, &write_point_file(&acquired.raw))?;
            say!("{} samples ({}) -> {}", acquired.raw.len(), acquired.raw.crs(), path.display());
        }
        Command::Convert => {
            let acquired = acquire(cfg)?;
            let path = out_dir(cfg)?.join("points_utm.txt");
            write_file(&path, &write_point_file(&acquired.utm))?;
            say!(
                "{} of {} samples inside the region, {} -> {}",
                acquired.utm.len(),
                acquired.raw.len(),
                acquired.utm.crs(),
                path.display()
            );
        }
        Command::Mesh => {
            let acquired = acquire(cfg)?;
            let quad = region_quad(cfg, acquired.utm.crs())?;
            let planar = build_mesh(cfg, &quad)?;
            let dir = out_dir(cfg)?;
            for f in mesh_formats(cfg) {
                let path = dir.join(format!("mesh.{}", f.extension()));
                export_mesh(&planar.mesh, f, &path).map_err(|e| PipelineError::new(Stage::Export, e))?;
                say!("wrote {}", path.display());
            }
            say!(
                "{} vertices, {} edges, {} triangles",
                planar.mesh.vertex_count(),
                planar.mesh.edges().len(),
                planar.mesh.triangle_count()
            );
            print_quality("before smoothing", &planar.raw_quality);
            print_quality("after smoothing", &planar.smoothed_quality);
        }
        Command::Variogram => {
            let acquired = acquire(cfg)?;
            let quad = region_quad(cfg, acquired.utm.crs())?;
            let samples = samples_from_points(&acquired.utm).map_err(|e| PipelineError::new(Stage::Variogram, e))?;
            let vg = variogram_stage(cfg, &samples, &quad)?;
            let path = out_dir(cfg)?.join("variogram.csv");
            write_file(&path, &vg.experimental.to_csv())?;
            let m = vg.model;
            say!(
                "{} model: nugget {:.6}, partial sill {:.6}, range {:.3} m ({}); {} bins -> {}",
                m.kind,
                m.nugget,
                m.partial_sill,
                m.range,
                if vg.fitted { "fitted" } else { "explicit" },
                vg.experimental.bins.len(),
                path.display()
            );
        }
        Command::Lift => {
            let lifted = pipeline::lift(cfg)?;
            let dir = out_dir(cfg)?;
            for f in mesh_formats(cfg) {
                let path = dir.join(format!("dsm.{}", f.extension()));
                export_mesh(&lifted.surface, f, &path).map_err(|e| PipelineError::new(Stage::Export, e))?;
                say!("wrote {}", path.display());
            }
            say!(
                "{} lift: z in [{:.3}, {:.3}] m, {} IDW fallbacks, {:.3} s",
                cfg.method,
                lifted.summary.z_min,
                lifted.summary.z_max,
                lifted.summary.fallback_vertices.len(),
                lifted.interpolation_time.as_secs_f64()
            );
        }
        Command::Run => {
            let r = pipeline::run(cfg)?;
            say!(
                "{} samples acquired, {} used ({}); mesh {} V / {} E / {} F",
                r.samples_acquired, r.samples_clipped, r.crs, r.vertices, r.edges, r.triangles
            );
            print_quality("planar mesh", &r.smoothed_quality);
            print_quality("surface", &r.surface_quality);
            if let Some(m) = &r.variogram {
                say!(
                    "variogram {}: nugget {:.6}, partial sill {:.6}, range {:.3} m",
                    m.kind, m.nugget, m.partial_sill, m.range
                );
            }
            say!(
                "{} interpolation: z in [{:.3}, {:.3}] m in {:.3} s; {} contour polylines on {} levels",
                r.method,
                r.z_min,
                r.z_max,
                r.interpolation_time.as_secs_f64(),
                r.contour_polylines,
                r.contour_levels
            );
            if !r.fallback_vertices.is_empty() {
                say!("{} vertices fell back to IDW", r.fallback_vertices.len());
            }
            for a in &r.artifacts {
                say!("wrote {}", a.display());
            }
        }
        Command::Compare => {
            let c = compare_methods(cfg)?;
            let path = out_dir(cfg)?.join("compare.csv");
            write_file(&path, &c.to_csv())?;
            say!(
                "{} vertices: |z_uk - z_idw| max {:.4} m, mean {:.4} m",
                c.vertices, c.max_abs_diff, c.mean_abs_diff
            );
            say!(
                "dihedral roughness: uk {:.4}°, idw {:.4}°",
                c.roughness_uk, c.roughness_idw
            );
            say!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let level = match cli.opts.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = cli.opts.config().and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
