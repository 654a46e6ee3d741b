//! End-to-end tests of the command-line interface: output schemas, exit
//! codes, and cross-invocation reproducibility.

use std::fs;
use std::process::{Command, Output};

fn tripack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tripack"))
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout must be UTF-8")
}

#[test]
fn run_emits_forced_outcome_as_jsonl() {
    let out = tripack(&["run", "--n", "5", "--seed", "1"]);
    assert!(out.status.success());
    let line = stdout_of(&out);
    assert_eq!(line.lines().count(), 1, "exactly one JSONL line on stdout");
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["n"], 5);
    assert_eq!(v["M"], 2);
    assert_eq!(v["final_edges"], 4);
    assert_eq!(v["efficiency"], 0.6);
    assert_eq!(v["snapshots"][0]["Q"], 10);
}

#[test]
fn run_writes_record_to_file_when_out_given() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("record.jsonl");
    let out = tripack(&["run", "--n", "4", "--seed", "9", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout_of(&out).is_empty(), "data goes to the file, not stdout");
    let v: serde_json::Value =
        serde_json::from_str(fs::read_to_string(&path).unwrap().trim()).unwrap();
    assert_eq!(v["M"], 1);
    assert_eq!(v["final_edges"], 3);
}

#[test]
fn curves_tabulates_the_documented_columns() {
    let out = tripack(&["curves", "--n", "1024", "--points", "5"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "schema_version,n,t,p,y,q,f,i0,p0");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[1], "1024");
    assert_eq!(first[2], "0", "first row is t = 0");
    assert_eq!(first[3], "1");
    assert_eq!(first[6], "5", "envelope width at t = 0");
    // The density threshold column carries 10·n^{-1/4}·(ln n)^{5/4}.
    let p0: f64 = first[8].parse().unwrap();
    let n = 1024.0f64;
    assert!((p0 - 10.0 * n.powf(-0.25) * n.ln().powf(1.25)).abs() < 1e-9);
    // The horizon column is negative at this size and constant down the table.
    let i0: i64 = first[7].parse().unwrap();
    assert!(i0 < 0);
    for row in text.lines().skip(2) {
        assert_eq!(row.split(',').nth(7).unwrap(), first[7]);
    }
    assert_eq!(text.lines().count(), 6, "header plus --points rows");
}

#[test]
fn verify_small_cap_passes_and_reports_checks() {
    let out = tripack(&["verify", "--n-max", "5", "--samples", "600", "--dist-runs", "100"]);
    assert!(out.status.success(), "verify --n-max 5 must exit 0");
    let text = stdout_of(&out);
    let mut checks = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["pass"], true, "check {} failed: {}", v["check"], v["detail"]);
        checks += 1;
    }
    assert!(checks >= 6, "expected the deterministic battery, got {checks} checks");
}

#[test]
fn usage_errors_exit_2() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "--n", "5", "--seed", "1", "--bogus"],
        vec!["run", "--n", "0", "--seed", "1"],
        vec!["run", "--n", "5", "--seed", "1", "--envelope-base", "-2"],
        vec!["sweep", "--grid", "8,8", "--reps", "2", "--out", "/tmp/unused"],
        vec!["sweep", "--grid", "16,8", "--reps", "2", "--out", "/tmp/unused"],
        vec!["sweep", "--grid", "8,16", "--reps", "0", "--out", "/tmp/unused"],
        vec!["verify", "--n-max", "4"],
        vec!["verify", "--samples", "599"],
        vec!["curves", "--n", "1024", "--points", "1"],
        vec!["nonsense"],
    ];
    for args in cases {
        let out = tripack(&args);
        assert_eq!(out.status.code(), Some(2), "args {args:?} must exit 2");
    }
}

#[test]
fn sweep_writes_files_and_reproduces_across_invocations() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let sweep = |dir: &std::path::Path| {
        let out = tripack(&[
            "sweep",
            "--grid",
            "5,6",
            "--reps",
            "4",
            "--seed-base",
            "11",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let summary: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
        assert_eq!(summary["schema_version"], 1);
        assert_eq!(summary["runs"], 8);
        summary
    };
    let sa = sweep(dir_a.path());
    let sb = sweep(dir_b.path());
    assert_eq!(sa["per_n"], sb["per_n"], "summaries must be identical");

    // Every n = 5 record carries the forced outcome.
    let records = fs::read_to_string(dir_a.path().join("records.jsonl")).unwrap();
    for line in records.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["n"] == 5 {
            assert_eq!(v["M"], 2);
            assert_eq!(v["final_edges"], 4);
        }
    }
    let norm = |dir: &std::path::Path| -> Vec<String> {
        fs::read_to_string(dir.join("records.jsonl"))
            .unwrap()
            .lines()
            .map(tripack::harness::normalize_json_line)
            .collect()
    };
    assert_eq!(norm(dir_a.path()), norm(dir_b.path()));
    assert_eq!(
        fs::read_to_string(dir_a.path().join("summary.csv")).unwrap(),
        fs::read_to_string(dir_b.path().join("summary.csv")).unwrap()
    );
}
