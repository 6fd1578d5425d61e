use std::path::Path;
use std::process::{Command, Output};

use llb_cli::RunManifest;

fn llb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llb"))
        .args(args)
        .arg("--quiet")
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn with_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_simulate_writes_one_row_per_time_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = llb(&["simulate", "--out", "run"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("run/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("t,L2_sq,H1_sq,H2_sq,L4_4,mx_0"));
    assert_eq!(lines.count(), 257);

    let m = manifest(&dir.path().join("run"));
    assert_eq!(m.command, "simulate");
    let names: Vec<_> = m.artifacts.iter().map(|a| a.file.as_str()).collect();
    assert!(names.contains(&"trajectory.csv") && names.contains(&"config.resolved.json"));
}

#[test]
fn zero_perturbation_gives_zero_separation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), r#"{"steps": 64, "uniqueness": {"deltas": [0.0]}}"#);
    let o = llb(&["uniqueness", "--config", &cfg, "--out", "u"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("u/uniqueness_r.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 65);
    for row in rows {
        let r: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(r, 0.0);
    }
}

#[test]
fn same_config_and_seed_reproduce_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), r#"{"n": 4, "M": 16, "steps": 64, "paths": 8, "energy": {"n_list": [4]}}"#);
    for out in ["a", "b"] {
        let o = llb(&["energy", "--config", &cfg, "--out", out], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (a, b) = (manifest(&dir.path().join("a")), manifest(&dir.path().join("b")));
    assert_eq!(a.artifacts, b.artifacts);
    assert!(a.artifacts.iter().any(|x| x.file == "energy_paths.csv"));

    let o = llb(&["energy", "--config", &cfg, "--out", "c", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let c = manifest(&dir.path().join("c"));
    assert_eq!(c.seeds.base_seed, 1);
    assert_ne!(a.artifacts, c.artifacts);
}

#[test]
fn invalid_horizon_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), r#"{"T": -1.0}"#);
    let o = llb(&["simulate", "--config", &cfg, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`T`"), "{}", stderr(&o));
    assert!(!dir.path().join("x/manifest.json").exists());
}

#[test]
fn weights_off_the_simplex_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(
        dir.path(),
        r#"{"control": {"schedule": {"knots": [0.0, 1.0], "mixtures": [
            [{"w": 0.5, "theta": [0.1, 0, 0, 0]}, {"w": 0.6, "theta": [0, 0, 0, 0]}]]}}}"#,
    );
    let o = llb(&["simulate", "--config", &cfg, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("control.schedule") && err.contains("weights"), "{err}");
}

#[test]
fn unknown_command_and_misspelled_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = llb(&["simulat", "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown command"));

    let cfg = with_config(dir.path(), r#"{"stpes": 10}"#);
    let o = llb(&["simulate", "--config", &cfg, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stpes"), "{}", stderr(&o));
}

#[test]
fn blow_up_reports_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), r#"{"integrator": "euler_maruyama_ito", "steps": 64, "n": 8}"#);
    let o = llb(&["simulate", "--config", &cfg, "--out", "x"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("non-finite state at step"), "{err}");
}
