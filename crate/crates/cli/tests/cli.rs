use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lacuna(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(args)
        .env_remove("LACUNA_THREADS")
        .output()
        .expect("binary runs")
}

fn construct_d12(out: &Path) {
    let o = lacuna(&["construct", "--preset", "dyadic", "--N", "12", "--c-h", "1.0", "--out", out.to_str().unwrap(), "-q"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().expect("an error line");
    let v: Value = serde_json::from_str(line).expect("stderr is JSON");
    assert!(v["error"].is_string() && v["detail"].is_string());
    v
}

#[test]
fn construct_writes_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d12");
    construct_d12(&dir);
    for n in 1..=12 {
        assert!(dir.join(format!("delta_{n:03}.lacf")).is_file());
    }
    assert!(!dir.join("delta_013.lacf").exists());
    assert!(dir.join("sum_012.lacf").is_file());
    let records = fs::read_to_string(dir.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 12);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["c_h"], 1.0);
    assert_eq!(manifest["settings"]["norm_oversample"], 16);
}

#[test]
fn verify_reports_block_norms() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d12");
    construct_d12(&dir);
    let o = lacuna(&["verify", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    let l1: Vec<f64> = report["table"].as_array().unwrap().iter().map(|r| r["delta_l1"].as_f64().unwrap()).collect();
    assert_eq!(l1[0], 1.0);
    assert!(l1[1..].iter().all(|&v| v == 0.5));
    assert!(fs::read_to_string(dir.join("report.txt")).unwrap().contains("result: PASS"));
}

#[test]
fn verify_fails_on_tampered_record() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d12");
    construct_d12(&dir);
    let path = dir.join("records.jsonl");
    let mut lines: Vec<Value> = fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // |Λ| = 1 out of 11 gives L1 = 1/22 < 1/8.
    lines[2]["delta_l1_exact"]["num"] = 1.into();
    let text: String = lines.iter().map(|v| v.to_string() + "\n").collect();
    fs::write(&path, text).unwrap();
    let o = lacuna(&["verify", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

fn snapshot(dir: &Path) -> Vec<(std::ffi::OsString, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(&dir);
        let o = lacuna(&[
            "construct", "--preset", "geometric", "--param", "q=1.3", "--param", "m1=50", "--N", "20", "--beta", "0.5",
            "--a-offset", "2", "--a-slope", "3", "-q", "--out", dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = lacuna(&["export", dir.to_str().unwrap(), "--poly", "delta", "--n", "7", "--grid", "1000", "--out", dir.join("e.csv").to_str().unwrap()]);
        assert!(o.status.success());
        snapshots.push(snapshot(&dir));
    }
    assert!(snapshots[0].len() > 20);
    for (x, y) in snapshots[0].iter().zip(&snapshots[1]) {
        assert!(x == y, "{:?} differs", x.0);
    }
}

#[test]
fn export_samples_and_bounds() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d12");
    construct_d12(&dir);
    let csv_path = dir.join("s.csv");
    let o = lacuna(&["export", dir.to_str().unwrap(), "--poly", "S", "--n", "12", "--grid", "65536", "--out", csv_path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&csv_path).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,re,im,abs"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 65536);
    // At x = 0 every block is aligned: 1 + 11 · ½.
    let first: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert!((first[3] - 6.5).abs() < 1e-12);
    let mantissa = rows[1].split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);

    let o = lacuna(&["export", dir.to_str().unwrap(), "--bounds"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,sup_lower,sup_upper,rhs_theorem"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[1] <= r[2] && r[2] < r[3]));
}

#[test]
fn config_file_is_merged_under_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    let out = tmp.path().join("run");
    fs::write(&cfg, format!(r#"{{"preset": "dyadic", "params": {{"N": 6}}, "N": 6, "out": {:?}}}"#, out.to_str().unwrap())).unwrap();
    let o = lacuna(&["construct", "--config", cfg.to_str().unwrap(), "--N", "4", "-q"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("records.jsonl")).unwrap().lines().count(), 4);
    let plan: Value = serde_json::from_str(&fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["blocks"].as_array().unwrap().len(), 6);
}

#[test]
fn errors_are_single_line_json() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nothing");

    let o = lacuna(&["verify", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "missing_file");

    let o = lacuna(&["construct", "--preset", "dyadic", "--N", "3"]);
    assert_eq!(error_json(&o)["error"], "invalid_config");

    let o = lacuna(&["construct", "--preset", "triadic", "--N", "3", "--out", "x"]);
    assert_eq!(error_json(&o)["error"], "invalid_plan");

    let o = lacuna(&["construct", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "invalid_config");

    let o = Command::new(env!("CARGO_BIN_EXE_lacuna"))
        .args(["construct", "--preset", "dyadic", "--N", "2", "--out", tmp.path().join("t").to_str().unwrap()])
        .env("LACUNA_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(error_json(&o)["error"], "invalid_config");
}

#[test]
fn collapse_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lacuna(&[
        "construct", "--preset", "geometric", "--param", "q=1.3", "--param", "m1=50", "--N", "24", "--beta", "0.5",
        "--a-offset", "2", "--a-slope", "3", "-q", "--out", tmp.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = error_json(&o);
    assert_eq!(err["error"], "lambda_collapse");
    assert!(err["detail"].as_str().unwrap().contains("step 24"));
}

#[test]
fn presets_listing() {
    let o = lacuna(&["presets", "--json"]);
    let v: Value = serde_json::from_str(&String::from_utf8(o.stdout).unwrap()).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["dyadic", "geometric", "corollary"]);
}
