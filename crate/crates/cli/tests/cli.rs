use std::path::Path;
use std::process::{Command, Output};

fn lap3d(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lap3d")).current_dir(dir).args(args).output().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scenarios_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = lap3d(dir.path(), &["scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sphere", "torus-quartic", "cossum", "quartic-radial"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn torus_geometry_exits_with_assumption_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = lap3d(dir.path(), &["geometry", "--scenario", "torus-quartic", "--out", "geo"]);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&dir.path().join("geo/geometry.json"));
    assert_eq!(report["schema"], 1);
    assert!(dir.path().join("geo/tangential_points.csv").exists());
}

#[test]
fn sphere_geometry_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lap3d(dir.path(), &["geometry", "--scenario", "sphere", "--out", "geo"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lap3d(dir.path(), &["decay", "--scenario", "nope", "--out", "d.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("nope"));
}

#[test]
fn bad_thread_count_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lap3d"))
        .current_dir(dir.path())
        .env("LAP3D_THREADS", "zero")
        .arg("scenarios")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_solve_writes_report_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["solve", "--grid", "32", "--box", "20", "--steps", "3", "--sign", "-", "--out", "run.json"];
    let out = lap3d(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("run.json"));
    assert_eq!(report["schema"], 1);
    assert_eq!(report["report"]["grid"]["dims"], serde_json::json!([32, 32, 32]));
    let raw = std::fs::metadata(dir.path().join("run.u.c64")).unwrap().len();
    assert_eq!(raw, 32 * 32 * 32 * 8);
    let sidecar = read_json(&dir.path().join("run.u.c64.json"));
    assert_eq!(sidecar["symbol_hash"], report["symbol_hash"]);

    // the stored field can drive another solve
    let out = lap3d(dir.path(), &["solve", "--rhs", "file:run.u.c64", "--box", "20", "--steps", "2", "--out", "again.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_sign_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lap3d(dir.path(), &["solve", "--grid", "16", "--sign", "x", "--out", "run.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn opnorm_reads_pair_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pairs.txt"), "3/4 3/20\n1 1/5\n").unwrap();
    let args = ["opnorm", "--pairs", "pairs.txt", "--trials", "50", "--grid", "16", "--out", "o.csv"];
    let out = lap3d(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("3/4,3/20,strong"));
}

#[test]
fn pipeline_with_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["pipeline", "--stages", "geometry,solve", "--out", "run", "--plotdata", "plots"];
    let out = lap3d(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("run/manifest.json"));
    assert_eq!(manifest["schema"], 1);
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 2);
    for f in ["pentagon.csv", "segments.csv", "norms_vs_delta.csv"] {
        assert!(dir.path().join("plots").join(f).exists(), "{f}");
    }
}

#[test]
fn pipeline_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = "scenario = \"torus-quartic\"\nstages = [\"geometry\"]\n";
    std::fs::write(dir.path().join("run.toml"), config).unwrap();
    let out = lap3d(dir.path(), &["pipeline", "--config", "run.toml", "--out", "run"]);
    assert_eq!(out.status.code(), Some(2));
    let manifest = read_json(&dir.path().join("run/manifest.json"));
    assert_eq!(manifest["assumption_failure"], true);
}
