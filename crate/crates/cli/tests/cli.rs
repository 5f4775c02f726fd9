use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn radar_eot(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_radar-eot"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_replay_matches_direct_run() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("b.jsonl");
    let out = radar_eot(&["simulate", "--scenario", "b", "--duration", "3", "--seed", "5", "--out", path(&frames)], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = fs::read_to_string(&frames).unwrap();
    assert!(first.lines().next().unwrap().contains("\"type\":\"header\""));

    let direct = dir.path().join("direct");
    let replay = dir.path().join("replay");
    assert!(radar_eot(&["run", "--scenario", "b", "--duration", "3", "--seed", "5", "--out", path(&direct)], &[]).status.success());
    assert!(radar_eot(&["run", "--frames", path(&frames), "--seed", "5", "--out", path(&replay)], &[]).status.success());
    for file in ["stats.csv", "traces.jsonl"] {
        assert_eq!(fs::read(direct.join(file)).unwrap(), fs::read(replay.join(file)).unwrap(), "{file}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(direct.join("report.json")).unwrap()).unwrap();
    assert!(report["algorithms"]["rls"]["samples"].as_u64().unwrap() > 0);
    assert!(report["timing"].is_null());
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert!(radar_eot(&["run", "--scenario", "c", "--duration", "2", "--seed", "9", "--out", path(d)], &[]).status.success());
    }
    for file in ["report.json", "stats.csv", "traces.jsonl"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn stats_recomputes_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert!(radar_eot(&["run", "--scenario", "b", "--duration", "4", "--out", path(&run)], &[]).status.success());
    let out = radar_eot(&["stats", "--traces", path(&run.join("traces.jsonl"))], &[]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("schema_version,algorithm,target,mean,median,variance,samples"));
    assert!(csv.lines().any(|l| l.contains(",rls,0,")));
}

#[test]
fn bench_writes_one_row_per_count() {
    let out = radar_eot(&["bench", "--objects", "2,4", "--frames", "5"], &[]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 3);
}

#[test]
fn bad_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "static_threshold = 0.5\nno_such_field = 1\n").unwrap();
    let out = radar_eot(&["run", "--scenario", "b", "--config", path(&cfg), "--out", path(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml"));

    assert_eq!(radar_eot(&["run", "--scenario", "nope.toml"], &[]).status.code(), Some(1));
    let out = radar_eot(&["run", "--scenario", "b", "--out", path(dir.path())], &[("RADAR_EOT_RLS__NUM_FILTERS", "0")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn environment_overrides_reach_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = radar_eot(
        &["run", "--scenario", "b", "--duration", "2", "--out", path(dir.path())],
        &[("RADAR_EOT_RLS__NUM_FILTERS", "4"), ("RADAR_EOT_STATIC_THRESHOLD", "0.7")],
    );
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["rls"]["num_filters"], 4);
    assert_eq!(report["config"]["static_threshold"], 0.7);
}

#[test]
fn degenerate_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // a single return per cluster cannot carry a velocity fit
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, "max_degenerate_fraction = 0.0\naccumulation_depth = 1\n[dbscan]\nmin_pts = 1\n").unwrap();
    let out = radar_eot(&["run", "--scenario", "traffic", "--duration", "1", "--config", path(&cfg), "--out", path(dir.path())], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("report.json").exists());
}
