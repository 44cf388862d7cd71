//! End-to-end runs of the `mhl` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mhl(args: &[&str], out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mhl"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.env("MHL_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn exit_code_triple() {
    let dir = tempfile::tempdir().unwrap();

    let ok = mhl(&["evi-suite", "--space", "euclid-quadratic", "--seed", "7"], &dir.path().join("ok"), None);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let report = fs::read_to_string(dir.path().join("ok/report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 9);
    assert!(report.lines().all(|l| l.contains("\"passed\":true")));

    // A subharmonicity tolerance of −10 demands Δ(E∘u) ≥ 10; here Δ(E∘u) = 2.
    let cfg = write_config(dir.path(), "strict.conf", "[tol]\nsubharmonic = -10.0\n");
    let fail = mhl(&["harmonic", "--config", &cfg, "--n", "9"], &dir.path().join("fail"), None);
    assert_eq!(code(&fail), 1, "{}", String::from_utf8_lossy(&fail.stdout));

    let bad = mhl(&["evi-suite", "--space", "hilbert-cube"], &dir.path().join("bad"), None);
    assert_eq!(code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown space id"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("syntax.conf", "seed 7\n"),
        ("key.conf", "colour = red\n"),
        ("value.conf", "domain.n = many\n"),
        ("recipe.conf", "boundary.recipe = spiral\n"),
        ("kind.conf", "kind = ipp\n"),
    ] {
        let cfg = write_config(dir.path(), name, text);
        let o = mhl(&["harmonic", "--config", &cfg, "--n", "5"], &dir.path().join(name), None);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let missing = mhl(&["harmonic", "--config", "/nonexistent/x.conf"], &dir.path().join("m"), None);
    assert_eq!(code(&missing), 2);
}

#[test]
fn report_files_have_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ipp.conf", "kind = ipp\n[domain]\nn = 33\n[ipp]\neps = 0.5, 0.25, 0.125\n");
    let o = mhl(&["ipp", "--config", &cfg], dir.path(), None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("check,slack,tolerance,passed"));
    assert_eq!(lines.count(), 2);
    let dat = fs::read_to_string(dir.path().join("ipp_linear.dat")).unwrap();
    let eps: Vec<f64> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(eps, vec![0.5, 0.25, 0.125]);
    for line in fs::read_to_string(dir.path().join("report.jsonl")).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec!["check", "lhs", "metadata", "passed", "rhs", "slack", "tolerance"];
        expected.sort();
        let mut got = keys.clone();
        got.sort();
        assert_eq!(got, expected);
        assert!(line.starts_with("{\"check\":"));
    }

    let again = Command::new(env!("CARGO_BIN_EXE_mhl"))
        .args(["report", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap(), summary);
}

fn reports_identical(args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = [("a", "1"), ("b", "4"), ("c", "4")]
        .iter()
        .map(|(name, threads)| {
            let out = dir.path().join(name);
            let o = mhl(args, &out, Some(threads));
            assert!(matches!(code(&o), 0 | 1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
            fs::read(out.join("report.jsonl")).unwrap()
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert_eq!(runs[0], runs[1], "{args:?} differs between 1 and 4 threads");
    assert_eq!(runs[1], runs[2], "{args:?} differs between repeated runs");
}

#[test]
fn deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.conf", "evi.samples = 40\n");
    reports_identical(&["evi-suite", "--space", "quantile-entropy", "--seed", "11", "--config", &cfg]);
    reports_identical(&["evi-suite", "--space", "tripod-quadratic", "--seed", "3"]);
    reports_identical(&["harmonic", "--space", "quantile-entropy", "--n", "9"]);
    reports_identical(&["perturbation", "--space", "euclid-quadratic", "--n", "9"]);
}
