use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qdomain(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_qdomain"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QDOMAIN_WORKERS")
        .output()
        .expect("spawn qdomain")
        .status
        .code()
        .expect("exit code")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("garbage.json", "{ not json"),
        ("unknown.json", r#"{"version":1,"automorphism":{"kind":"henon","p":[[0,0]]},"extra":1}"#),
        ("version.json", r#"{"version":7,"automorphism":{"kind":"henon","p":[[0,0],[0,0],[1,0]]}}"#),
        ("negative.json", r#"{"version":1,"automorphism":{"kind":"henon","p":[[0,0],[0,0],[1,0]]},"settings":{"tolerance":-1}}"#),
    ];
    for (name, text) in cases {
        let cfg = write(tmp.path(), name, text);
        assert_eq!(qdomain(&["onepoint", "--config", &cfg], &out), 2, "{name}");
        assert!(!out.exists(), "{name} left outputs behind");
    }
    let cfg = write(tmp.path(), "bad_domain.json", r#"{"version":1,"construct":{"domain":{"kind":"annulus","center":[0,0],"inner":2,"outer":1}}}"#);
    assert_eq!(qdomain(&["construct", "--config", &cfg], &out), 2);
    assert_eq!(qdomain(&["construct"], &out), 2);
    let missing = tmp.path().join("missing.json").display().to_string();
    assert_eq!(qdomain(&["construct", "--config", &missing], &out), 2);
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(qdomain(&["frobnicate"], &out), 2);
    let henon = configs().join("henon.json").display().to_string();
    assert_eq!(qdomain(&["onepoint", "--config", &henon, "--tolerance-scale", "0"], &out), 2);
    let code = Command::new(env!("CARGO_BIN_EXE_qdomain"))
        .args(["onepoint", "--config", &henon, "--out"])
        .arg(&out)
        .env("QDOMAIN_WORKERS", "zero")
        .output()
        .unwrap()
        .status
        .code();
    assert_eq!(code, Some(2));
    assert!(!out.exists());
}

#[test]
fn empty_suite_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "empty.json", r#"{"version":1,"suite":{"domains":[]}}"#);
    assert_eq!(qdomain(&["selftest", "--config", &cfg], &out), 2);
    let cfg = write(tmp.path(), "unknown.json", r#"{"version":1,"suite":{"domains":["torus"]}}"#);
    assert_eq!(qdomain(&["selftest", "--config", &cfg], &out), 2);
    assert!(!out.exists());
}

#[test]
fn jacobian_violation_fails_at_jacobian_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = configs().join("scaling_map.json").display().to_string();
    assert_eq!(qdomain(&["onepoint", "--config", &cfg], &out), 1);
    let r = report(&out);
    assert_eq!(r["status"], "FAIL");
    assert_eq!(r["failed_stage"], "jacobian");
    assert!(out.join("timing.json").exists());
}

#[test]
fn henon_passes_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = configs().join("henon.json").display().to_string();
    assert_eq!(qdomain(&["onepoint", "--config", &cfg, "--seed", "11"], &a), 0);
    assert_eq!(qdomain(&["onepoint", "--config", &cfg, "--seed", "11"], &b), 0);
    let ra = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(
        std::fs::read(a.join("points.csv")).unwrap(),
        std::fs::read(b.join("points.csv")).unwrap()
    );
    let r = report(&a);
    assert_eq!(r["status"], "PASS");
    assert_eq!(r["seed"], 11);
    assert!(!String::from_utf8(ra).unwrap().contains("seconds"));
    let csv = std::fs::read_to_string(a.join("points.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("tag,re_z1,im_z1,re_z2,im_z2"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "source");
    assert_eq!(first.len(), 5);
}

#[test]
fn shiftlike_reports_membership_note() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = configs().join("shiftlike.json").display().to_string();
    assert_eq!(qdomain(&["onepoint", "--config", &cfg], &out), 0);
    let r = report(&out);
    let notes = r["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("|z3|")));
}

#[test]
fn exact_fit_construct_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = configs().join("disc_disc_exact.json").display().to_string();
    assert_eq!(qdomain(&["construct", "--config", &cfg], &out), 0);
    let r = report(&out);
    let stages: Vec<&str> = r["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
    assert_eq!(
        stages,
        ["fit", "periods", "injectivity", "extract", "collocation", "pullback", "identity", "converse"]
    );
    let q = &r["results"]["construct"]["quadrature"];
    assert_eq!(q["nodes"].as_array().unwrap().len(), 1);
    let csv = std::fs::read_to_string(out.join("points.csv")).unwrap();
    assert!(csv.lines().filter(|l| l.starts_with("image")).count() > 100);
}

#[test]
fn margin_zero_selftest_documents_degradation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "m0.json", r#"{"version":1,"suite":{"domains":["disc"],"margin":0.0}}"#);
    let code = qdomain(&["selftest", "--config", &cfg], &out);
    assert!(code == 0 || code == 1);
    let r = report(&out);
    let d = &r["results"]["selftest"]["degradation"];
    assert_eq!(d["margin"], 0.0);
    assert!(d["max_reproduce_error"].as_f64().unwrap() > d["baseline_max_reproduce_error"].as_f64().unwrap());
    assert!(!r["notes"].as_array().unwrap().is_empty());
}
