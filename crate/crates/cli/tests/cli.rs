use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn caplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caplab")).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn csv_rows(dir: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(dir.join("results.csv")).unwrap().records().map(Result::unwrap).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn construct_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let out = caplab(&["construct", "--kind", "convex", "--m", "5", "--eps", "0.2", "--out", path(&a)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let inst = a.join("manifest.json");
    let out = caplab(&["verify", "--instance", path(&inst), "--out", path(&b)]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&b);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "true");
    assert_eq!(&rows[0][2], "32");
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"draws": 50, "m": 3, "seed": 4, "id": "from-file"}"#).unwrap();
    let out_dir = tmp.path().join("r");
    let out = caplab(&["rademacher", "--config", path(&cfg), "--m", "4", "--seed", "9", "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    let config = &m["config"];
    assert_eq!(config["seed"], 9);
    assert_eq!(config["params"]["m"], 4);
    assert_eq!(config["params"]["draws"], 50);
    assert_eq!(config["params"]["id"], "from-file");
    assert_eq!(config["params"]["dim"], 4);
    let rows = csv_rows(&out_dir);
    assert_eq!(&rows[0][0], "from-file");
    assert_eq!(&rows[0][1], "4");
}

#[test]
fn unknown_key_lists_valid_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kind": "convex", "margin": 0.1}"#).unwrap();
    let out = caplab(&["construct", "--config", path(&cfg), "--out", path(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key `margin`"), "{err}");
    assert!(err.contains("kappa"), "{err}");
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn type_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = caplab(&["construct", "--kind", "convex", "--m", "eight", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("key `m`"));
    let out = caplab(&["sgd", "--T", "10,x", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn library_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = caplab(&["construct", "--kind", "convex", "--m", "40", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let out = caplab(&["verify", "--instance", "/nonexistent/manifest.json", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_output_directory_is_a_usage_error() {
    let out = caplab(&["cover", "--formula", "constants", "--B", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn full_sample_disproves_the_gap() {
    // A sample that sees every point leaves nothing for a witness to exploit.
    let tmp = tempfile::tempdir().unwrap();
    let out = caplab(&["uc-gap", "--m", "2", "--sample-size", "2", "--seeds", "20", "--out", path(tmp.path())]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest(tmp.path())["disproved"], true);
    let rows = csv_rows(tmp.path());
    assert!(rows.iter().any(|r| &r[2] == "2" && &r[7] == "false"));
    assert!(rows.iter().all(|r| (&r[2] == "2") == (&r[7] == "false")));
}

#[test]
fn bounds_accepts_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let params = tmp.path().join("p.json");
    std::fs::write(&params, r#"[{"id": "a", "B": 2, "L": 1, "eps": 0.5}]"#).unwrap();
    let out_dir = tmp.path().join("o");
    let out = caplab(&["bounds", "--params", path(&params), "--out", path(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&out_dir);
    let sgd = rows.iter().find(|r| &r[1] == "sgd-sample").expect("sgd row");
    assert_eq!(&sgd[2], "16.0");
}

#[test]
fn help_exits_zero() {
    let out = caplab(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("construct"));
}
