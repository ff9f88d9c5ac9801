//! End-to-end pipeline behaviour on small configurations.

use dsm_core::acquisition::write_point_file;
use dsm_core::geodesy::{wgs84_to_utm, GeoPoint};
use dsm_core::interpolate::{lift_mesh, samples_from_points};
use dsm_core::pipeline::{
    acquire, build_mesh, compare_methods, lift, lift_method, mesh_to_obj, parse_obj, region_quad, run,
    variogram_stage, InputSource, Method, PipelineConfig, Stage,
};

fn small(method: Method, out: &std::path::Path) -> PipelineConfig {
    let mut c = PipelineConfig {
        method,
        spacing: 20.0,
        out_dir: out.to_path_buf(),
        ..PipelineConfig::default()
    };
    c.set("scan.rows", "30").unwrap();
    c.set("scan.cols", "30").unwrap();
    c
}

#[test]
fn constant_terrain_gives_flat_surface() {
    let dir = tempfile::tempdir().unwrap();
    for method in [Method::Kriging, Method::Idw] {
        let mut c = small(method, dir.path());
        c.set("terrain", "constant").unwrap();
        c.set("terrain.base", "321.5").unwrap();
        // A flat field has a zero variogram; kriging needs explicit parameters.
        c.set("variogram.nugget", "0").unwrap();
        c.set("variogram.partial_sill", "1").unwrap();
        c.set("variogram.range", "100").unwrap();
        let l = lift(&c).unwrap();
        assert!(l.surface.elevations.unwrap().iter().all(|&z| (z - 321.5).abs() < 1e-9));
    }
}

#[test]
fn plane_kriging_exact_and_compare_matches_idw_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Method::Kriging, dir.path());
    c.set("terrain", "inclined_plane").unwrap();
    c.set("terrain.slope_east", "0.05").unwrap();
    c.set("terrain.slope_north", "-0.02").unwrap();
    c.set("drift", "1").unwrap();
    let (lon, lat) = c.region.center();
    let o = wgs84_to_utm(&GeoPoint::new(lat, lon, 0.0), None).unwrap();
    let plane = |x: f64, y: f64| 400.0 + 0.05 * (x - o.easting) - 0.02 * (y - o.northing);

    let uk = lift(&c).unwrap();
    let z_uk = uk.surface.elevations.as_ref().unwrap();
    for (p, z) in uk.surface.vertices.iter().zip(z_uk) {
        assert!((z - plane(p.x, p.y)).abs() < 1e-6, "{z} vs {}", plane(p.x, p.y));
    }

    let mut ci = c.clone();
    ci.method = Method::Idw;
    let idw = lift(&ci).unwrap();
    let z_idw = idw.surface.elevations.as_ref().unwrap();
    let cmp = compare_methods(&c).unwrap();
    assert_eq!(cmp.vertices, z_uk.len());
    for (v, d) in cmp.differences.iter().enumerate() {
        let p = idw.surface.vertices[v];
        let deviation = plane(p.x, p.y) - z_idw[v];
        assert!((d - deviation).abs() < 1e-6);
    }
    assert!(cmp.max_abs_diff > 0.0);
    assert!(cmp.roughness_uk < 1e-3, "plane should be flat: {}", cmp.roughness_uk);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&small(Method::Kriging, &dir.path().join("a"))).unwrap();
    let b = run(&small(Method::Kriging, &dir.path().join("b"))).unwrap();
    assert_eq!(a.artifacts.len(), 5);
    for (pa, pb) in a.artifacts.iter().zip(&b.artifacts) {
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap(), "{}", pa.display());
    }
}

#[test]
fn report_counts_match_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&small(Method::Idw, dir.path())).unwrap();
    let obj = parse_obj(&std::fs::read_to_string(dir.path().join("dsm.obj")).unwrap()).unwrap();
    assert_eq!(obj.vertices.len(), r.vertices);
    assert_eq!(obj.triangles.len(), r.triangles);
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.contains(&format!("\nvertices,{}\n", r.vertices)));
    assert!(report.contains(&format!("\ntriangles,{}\n", r.triangles)));
    assert!(report.contains(&format!("\nsamples_acquired,{}\n", 900)));
    assert!(!report.contains("time"), "timing must stay out of the report");
    // no variogram for IDW
    assert!(!dir.path().join("variogram.csv").exists());
    assert_eq!(r.vertices as i64 - r.edges as i64 + r.triangles as i64, 1);
}

#[test]
fn stages_compose_to_the_run_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(Method::Kriging, dir.path());
    run(&c).unwrap();

    let acquired = acquire(&c).unwrap();
    let quad = region_quad(&c, acquired.utm.crs()).unwrap();
    let planar = build_mesh(&c, &quad).unwrap();
    let samples = samples_from_points(&acquired.utm).unwrap();
    let vg = variogram_stage(&c, &samples, &quad).unwrap();
    let method = lift_method(&c, Method::Kriging, Some(vg.model)).unwrap();
    let out = lift_mesh(&planar.mesh, &samples, &method).unwrap();
    let file = std::fs::read_to_string(dir.path().join("dsm.obj")).unwrap();
    assert_eq!(mesh_to_obj(&out.mesh).unwrap(), file);
}

#[test]
fn point_file_input_matches_synthetic_scan() {
    let dir = tempfile::tempdir().unwrap();
    let c = small(Method::Idw, &dir.path().join("scan"));
    let scanned = acquire(&c).unwrap();
    let points = dir.path().join("points.txt");
    std::fs::write(&points, write_point_file(&scanned.raw)).unwrap();
    let mut f = c.clone();
    f.out_dir = dir.path().join("file");
    f.set("input", points.to_str().unwrap()).unwrap();
    assert!(matches!(f.input, InputSource::File(_)));
    let a = lift(&c).unwrap();
    let b = lift(&f).unwrap();
    assert_eq!(a.surface, b.surface);
}

#[test]
fn utm_region() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Method::Idw, dir.path());
    c.set("region.crs", "utm:32N").unwrap();
    c.set("region", "377700, 5397950, 377900, 5398300").unwrap();
    let r = run(&c).unwrap();
    assert_eq!(r.crs.to_string(), "utm:32N");
    let obj = parse_obj(&std::fs::read_to_string(dir.path().join("dsm.obj")).unwrap()).unwrap();
    for v in &obj.vertices {
        assert!(v[0] >= 377700.0 - 1e-6 && v[0] <= 377900.0 + 1e-6);
        assert!(v[1] >= 5397950.0 - 1e-6 && v[1] <= 5398300.0 + 1e-6);
    }
}

#[test]
fn failed_run_removes_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // A directory where the contour file should go makes that write fail
    // after the mesh files were written.
    std::fs::create_dir_all(dir.path().join("contours.csv")).unwrap();
    let err = run(&small(Method::Idw, dir.path())).unwrap_err();
    assert_eq!(err.stage, Stage::Export);
    assert!(!dir.path().join("dsm.obj").exists());
    assert!(!dir.path().join("dsm.vtk").exists());
    assert!(!dir.path().join("report.csv").exists());
}

#[test]
fn singular_drift_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    // Samples along one northing line: every linear-drift solve is singular.
    let mut text = String::from("# crs=utm:32N\n");
    for i in 0..50 {
        text.push_str(&format!("{} 5398100 {}\n", 377700.0 + 4.0 * i as f64, 400 + i));
    }
    let points = dir.path().join("line.txt");
    std::fs::write(&points, text).unwrap();
    let mut c = small(Method::Kriging, dir.path());
    c.set("input", points.to_str().unwrap()).unwrap();
    c.set("region.crs", "utm:32N").unwrap();
    c.set("region", "377700, 5397950, 377900, 5398300").unwrap();
    c.set("variogram.nugget", "0").unwrap();
    c.set("variogram.partial_sill", "10").unwrap();
    c.set("variogram.range", "100").unwrap();
    let err = run(&c).unwrap_err();
    assert_eq!(err.stage, Stage::Interpolate);
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(err.to_string().contains("`y`"), "{err}");
}

#[test]
fn demo_config_file_equals_defaults() {
    let text = include_str!("../../../configs/demo.conf");
    let mut parsed = PipelineConfig::parse(text).unwrap();
    assert!(parsed.region_text.is_some());
    parsed.region_text = None;
    assert_eq!(parsed, PipelineConfig::default());
}
