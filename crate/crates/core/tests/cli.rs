//! Exit codes and file handling of the `gct-lab` binary.

use std::process::Command;

fn gct_lab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gct-lab"));
    c.env_remove("GCT_LAB_THREADS");
    c
}

const TINY: &[&str] = &["--n", "100", "--p", "50", "--m", "3", "--lambda", "1,2", "--trials", "2"];

#[test]
fn writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let summary = dir.path().join("summary.json");
    let status = gct_lab()
        .arg("simulate")
        .args(TINY)
        .args(["--kernel", "soft:t=1", "--kernel", "pca", "--out"])
        .arg(&csv)
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1 + 2 * 2 * 2);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(v["rows"], 8);
}

#[test]
fn stdout_matches_file_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let file = gct_lab().arg("recover").args(TINY).arg("--out").arg(&csv).output().unwrap().status;
    assert!(file.success());
    let piped = gct_lab().arg("recover").args(TINY).env("GCT_LAB_THREADS", "2").output().unwrap();
    assert!(piped.status.success());
    assert_eq!(String::from_utf8(piped.stdout).unwrap(), std::fs::read_to_string(&csv).unwrap());
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mode": "simulate", "lambda": [3.0], "trials": 1}"#).unwrap();
    let out = gct_lab().arg("simulate").args(TINY).arg("--config").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("0.5,0.3,3,"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"mode": "recover"}"#,
        r#"{"unknown_field": 1}"#,
        r#"{"trials": 0}"#,
        r#"{"kernel": ["soft:t=-1"]}"#,
        "not json",
    ];
    for (i, body) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("c{i}.json"));
        std::fs::write(&cfg, body).unwrap();
        let status = gct_lab().args(["simulate", "--config"]).arg(&cfg).output().unwrap().status;
        assert_eq!(status.code(), Some(2), "{body}");
    }
    let status = gct_lab().args(["simulate", "--lambda", "1:x:2"]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn failed_rows_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let status = gct_lab()
        .arg("simulate")
        .args(TINY)
        .args(["--kernel", "hermite:a1=1,a3=1e307", "--out"])
        .arg(&csv)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(3));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().skip(1).any(|l| l.contains("not finite")));
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let status = gct_lab()
        .arg("simulate")
        .args(TINY)
        .arg("--out")
        .arg(dir.path().join("missing/out.csv"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(4));
    let status = gct_lab()
        .args(["simulate", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(4));
}
