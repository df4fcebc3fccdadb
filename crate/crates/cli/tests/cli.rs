use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_traffic-qubo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    fs::write(
        &path,
        r#"{"grid": {"rows": 2, "cols": 3}, "traffic": {"n_cars": 140}, "schedule": {"total_iterations": 20}}"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = run(&["run", "--controller", "coordinated", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["metrics.csv", "timings.csv", "summary.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let timings = fs::read_to_string(out.join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 2 + 4);
}

#[test]
fn seed_flag_lands_in_embedded_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = run(&["run", "--controller", "fixed_cycle", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "77"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["traffic"]["sim_seed"], 77);
    assert_eq!(summary["run"]["solves"], 0);
}

#[test]
fn missing_config_fails_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "--controller",
        "coordinated",
        "--config",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn invalid_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"schedule": {"resolve_every": 0}}"#).unwrap();
    let o = run(&["compare", "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule.resolve_every"));
}

#[test]
fn unknown_controller_and_solver_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = run(&["run", "--controller", "hybrid", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    let o = run(&["run", "--controller", "coordinated", "--solver", "qpu", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn compare_reports_three_controllers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("cmp");
    let o = run(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.matches(" saves ").count(), 3);
    assert!(!text.contains("hybrid"));
    assert!(out.join("timings_coordinated.csv").exists());
    assert!(out.join("timings_no_coordination.csv").exists());
}

#[test]
fn verify_small_grid() {
    let o = run(&["verify", "--rows", "1", "--cols", "2", "--trials", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("12 variables"));
    assert!(text.contains("agrees with full enumeration"));

    assert!(!run(&["verify", "--trials", "0"]).status.success());
    assert!(!run(&["verify", "--rows", "3", "--cols", "3"]).status.success());
}

#[test]
fn export_map_round_trips_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.json");
    let o = run(&["export-map", "--out", map.to_str().unwrap()]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&map).unwrap()).unwrap();
    assert_eq!(doc["segments"].as_array().unwrap().len(), 60);

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, format!(r#"{{"grid": {{"map_path": {:?}}}, "schedule": {{"total_iterations": 10}}}}"#, map)).unwrap();
    let o = run(&["run", "--controller", "fixed_cycle", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
