//! Drives the `dsm` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn dsm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsm"))
        .args(args)
        .args(["--out", dir.to_str().unwrap()])
        .output()
        .expect("binary runs")
}

const SMALL: [&str; 6] = ["--spacing", "25", "--set", "scan.rows=20", "--set", "scan.cols=20"];

fn with_small<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(SMALL).collect()
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsm(dir.path(), &with_small(&["run"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["dsm.obj", "dsm.vtk", "contours.csv", "variogram.csv", "report.csv"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
}

#[test]
fn idw_run_skips_the_variogram() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsm(dir.path(), &with_small(&["run", "--method", "idw", "--power", "3"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("dsm.obj").is_file());
    assert!(!dir.path().join("variogram.csv").exists());
}

#[test]
fn default_scan_has_5000_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsm(dir.path(), &["scan"]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("points.txt")).unwrap();
    let data = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count();
    assert_eq!(data, 5000);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("small.conf");
    std::fs::write(&conf, "# small run\nmethod = idw\nspacing = 25\nscan.rows = 20\nscan.cols = 20\n").unwrap();
    let out = dsm(dir.path(), &["mesh", "--config", conf.to_str().unwrap(), "--format", "obj"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("mesh.obj").is_file());
    assert!(!dir.path().join("mesh.vtk").exists());
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dsm(dir.path(), &["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(dsm(dir.path(), &["frobnicate"]).status.code(), Some(1));
    let out = dsm(dir.path(), &["run", "--set", "no.such.key=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no.such.key"));
    assert_eq!(dsm(dir.path(), &["run", "--method", "spline"]).status.code(), Some(1));
    assert_eq!(dsm(dir.path(), &["run", "--spacing", "-4"]).status.code(), Some(1));
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let out = dsm(dir.path(), &["run", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("dsm.obj").exists());
}

#[test]
fn collinear_samples_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("# crs=utm:32N\n");
    for i in 0..50 {
        text.push_str(&format!("{} 5398100 {}\n", 377700.0 + 4.0 * i as f64, 400 + i));
    }
    let points = dir.path().join("line.txt");
    std::fs::write(&points, text).unwrap();
    let out = dsm(
        dir.path(),
        &[
            "run",
            "--input",
            points.to_str().unwrap(),
            "--drift",
            "1",
            "--spacing",
            "25",
            "--set",
            "region.crs=utm:32N",
            "--set",
            "region=377700,5397950,377900,5398300",
            "--set",
            "variogram.nugget=0",
            "--set",
            "variogram.partial_sill=10",
            "--set",
            "variogram.range=100",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`y`"));
    assert!(std::fs::read_dir(dir.path()).unwrap().all(|e| {
        let name = e.unwrap().file_name();
        name == "line.txt"
    }));
}

#[test]
fn help_exits_0() {
    let out = Command::new(env!("CARGO_BIN_EXE_dsm")).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["scan", "convert", "mesh", "variogram", "lift", "run", "compare"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn compare_writes_differences() {
    let dir = tempfile::tempdir().unwrap();
    let out = dsm(dir.path(), &with_small(&["compare"]));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(text.contains("max_abs_diff"));
}
