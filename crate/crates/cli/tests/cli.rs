use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qtele(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtele"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn write_matrix(dir: &Path, name: &str, diag: [f64; 3]) -> String {
    let row = |k: usize| {
        let cells: Vec<String> = (0..3)
            .map(|j| format!("[{}, 0]", if j == k { diag[k] } else { 0.0 }))
            .collect();
        format!("[{}]", cells.join(", "))
    };
    let text = format!(
        "{{\"dim\": 3, \"entries\": [{}, {}, {}]}}",
        row(0),
        row(1),
        row(2)
    );
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn teleport_sim_at_unit_visibility() {
    let out = qtele(&["teleport-sim", "--visibility", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let rows = r["results"]["teleport_sim"].as_array().unwrap();
    assert_eq!(rows.len(), 10);
    for row in rows {
        assert!((row["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(r["config"]["pipeline"], "teleport_sim");
}

#[test]
fn stage_capture_is_reported() {
    let out = qtele(&["teleport-sim", "--stage", "aux_pbs"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(!r["results"]["stage_state"]["terms"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn certify_maximally_mixed_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_matrix(dir.path(), "mixed.json", [1.0 / 3.0; 3]);
    let out = qtele(&["certify", &path]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(
        r["results"]["certification"][0]["verdict"],
        "qubit_simulable"
    );
    assert!(r["adjustments"]["entries"].as_array().unwrap().is_empty());
}

#[test]
fn exit_codes_for_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"dim\": 3, \"entries\": [[1, 2]\n").unwrap();
    let out = qtele(&["certify", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("broken.json"));

    let short = write_matrix(dir.path(), "short.json", [0.3, 0.3, 0.3]);
    assert_eq!(qtele(&["certify", &short]).status.code(), Some(4));

    let missing = dir.path().join("nope.json");
    assert_eq!(
        qtele(&["certify", missing.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn reports_are_reproducible() {
    let args = ["mc-errors", "--trials", "3", "--seed", "11"];
    let a = qtele(&args);
    let b = qtele(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = qtele(&["mc-errors", "--trials", "3", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn grid_flags() {
    let out = qtele(&["certify", "--grid", "4x5", "--half-open"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["grid"], serde_json::json!([4, 5]));
    assert_eq!(r["config"]["closed_interval"], false);
    let c = &r["results"]["certification"];
    assert_eq!(
        c["n_genuine"].as_u64().unwrap() + c["n_simulable"].as_u64().unwrap(),
        20
    );

    assert_ne!(qtele(&["certify", "--grid", "4by5"]).status.code(), Some(0));
    assert_ne!(
        qtele(&["certify", "--half-open", "--closed-interval"])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn out_dir_receives_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtele(&[
        "certify",
        "--grid",
        "3x3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("mu_grid.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("phi1,phi2,mu"));
    assert_eq!(csv.lines().count(), 10);
}
