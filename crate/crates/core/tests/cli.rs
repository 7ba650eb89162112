use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qprelax(args: &[&str], cap: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qprelax"));
    cmd.args(args).env_remove("QPRELAX_ENUM_CAP");
    if let Some(c) = cap {
        cmd.env("QPRELAX_ENUM_CAP", c);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn generate_horn(dir: &Path) -> String {
    let out = qprelax(&["generate", "horn", "--out", dir.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    dir.join("horn5.json").to_str().unwrap().to_string()
}

#[test]
fn generate_horn_writes_instance_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    let inst: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(inst["n"], 5);
    assert_eq!(inst["b"][0].as_f64(), Some(9.0));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("horn5.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["certificate"]["Q_dot_D"], -5);
}

#[test]
fn psd0_solve_reports_unbounded_with_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    let v = json(&qprelax(&["--json", "solve", "--cone", "psd0", &path], None));
    assert_eq!(v["status"], "UNBOUNDED");
    assert!(v["certificate"]["objective_rate"].as_f64().unwrap() < -1e-6);
}

#[test]
fn oracle_and_analyze_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    let v = json(&qprelax(&["--json", "oracle", &path], None));
    assert!((v["value"].as_f64().unwrap() - 225.0 / 64.0).abs() < 1e-9);
    assert_eq!(v["status"], "CERTIFIED");
    let a = json(&qprelax(&["--json", "analyze", &path], None));
    assert!(a.is_object());
}

#[test]
fn envelope_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    let from = dir.path().join("from.json");
    let to = dir.path().join("to.json");
    std::fs::write(&from, "[0, 1.125, 0, 0, 0]").unwrap();
    std::fs::write(&to, "[0, 0, 0, 0.75, 1.5]").unwrap();
    let out = qprelax(
        &["envelope", "--samples", "3", "--from", from.to_str().unwrap(), "--to", to.to_str().unwrap(), &path],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,q,lK,status"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn batch_directory_skips_metadata() {
    let dir = tempfile::tempdir().unwrap();
    generate_horn(dir.path());
    let out = qprelax(
        &["generate", "random", "--kind", "bounded", "--n", "3", "--seed", "2", "--out", dir.path().to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let out = qprelax(&["--json", "oracle", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains("meta"));
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    let missing = dir.path().join("missing.json");
    assert_eq!(qprelax(&["oracle", missing.to_str().unwrap()], None).status.code(), Some(2));
    let point = dir.path().join("p.json");
    std::fs::write(&point, "[1, 2]").unwrap();
    let out = qprelax(&["solve", "--at", point.to_str().unwrap(), &path], None);
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 2}").unwrap();
    assert_eq!(qprelax(&["analyze", bad.to_str().unwrap()], None).status.code(), Some(2));
}

#[test]
fn enumeration_cap_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = generate_horn(dir.path());
    assert_eq!(qprelax(&["oracle", &path], Some("4")).status.code(), Some(3));
}
