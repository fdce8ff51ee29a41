use std::path::Path;
use std::process::{Command, Output};

use majsos::syk::{self, SykInstance};

const BIN: &str = env!("CARGO_BIN_EXE_majsos");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv_text: &str) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["instance_id", "method", "side", "value", "extra", "runtime_ms", "seed", "status"]);
    r.records().map(|x| x.unwrap()).collect()
}

fn value(r: &csv::StringRecord) -> f64 {
    r[3].parse().unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn closed_stdout_is_not_an_error() {
    // ~180 kB of JSON overflows the pipe buffer once the reader is gone
    let mut child = Command::new(BIN)
        .args(["sample", "--n", "16", "--seed", "2"])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
}

#[test]
fn sample_round_trips_and_diag_matches() {
    let dir = tempfile::tempdir().unwrap();
    let f = p(dir.path(), "inst.json");
    ok(&["sample", "--n", "12", "--q", "4", "--seed", "1", "--out", &f]);
    let loaded = SykInstance::from_json_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    assert_eq!(loaded, syk::sample_syk(12, 4, 1).unwrap());
    let a = rows(&ok(&["diag", "--in", &f]));
    let b = rows(&ok(&["diag", "--n", "12", "--q", "4", "--seed", "1"]));
    assert_eq!(&a[0][0], &b[0][0], "content id is stable");
    let rep = majsos::repr::build_gamma_representation(12).unwrap();
    assert!((value(&a[0]) - majsos::repr::opt(&loaded.h, &rep).unwrap()).abs() < 1e-9);
}

#[test]
fn validation_and_resource_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = p(dir.path(), "missing.json");
    std::fs::write(&missing, r#"{"n": 4, "model": "custom", "q": 2}"#).unwrap();
    let out = run(&["diag", "--in", &missing]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("terms"));
    let unsorted = p(dir.path(), "unsorted.json");
    std::fs::write(&unsorted, r#"{"n": 4, "model": "custom", "q": 2, "terms": [{"support": [2, 1], "re": 1.0, "im": 0.0}]}"#).unwrap();
    let out = run(&["diag", "--in", &unsorted]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("support"));
    assert_eq!(run(&["diag", "--n", "40", "--q", "4"]).status.code(), Some(3));
    assert_eq!(run(&["certify", "--n", "12", "--method", "nope"]).status.code(), Some(2));
}

#[test]
fn certify_and_lower_are_sound() {
    let diag = value(&rows(&ok(&["diag", "--n", "12", "--seed", "3"]))[0]);
    let up = rows(&ok(&["certify", "--n", "12", "--seed", "3"]));
    assert_eq!(up.iter().map(|r| r[1].to_string()).collect::<Vec<_>>(), ["schatten4", "tau", "frag42", "chernoff"]);
    for r in up.iter().filter(|r| &r[1] != "chernoff") {
        assert_eq!(&r[2], "upper");
        assert!(value(r) >= diag - 1e-7, "{r:?}");
    }
    let low = rows(&ok(&["lower", "--n", "12", "--seed", "3", "--trials", "5"]));
    assert_eq!(low.len(), 4);
    for r in &low {
        assert_eq!(&r[7], "ok", "{r:?}");
        if &r[2] == "lower" {
            assert!(value(r) <= diag + 1e-7, "{r:?}");
        }
    }
    assert_eq!(&low[0][2], "sos_lower");
}

#[test]
fn graph_commands() {
    let t = rows(&ok(&["theta", "--n", "12", "--q", "4"]));
    assert!((value(&t[0]) - 15.0).abs() < 1e-9);
    let extra: serde_json::Value = serde_json::from_str(&t[0][4]).unwrap();
    assert!((extra["p_values"][0].as_f64().unwrap() - 33.0).abs() < 1e-9);
    assert_eq!(value(&rows(&ok(&["alpha", "--graph", "cycle:5"]))[0]), 2.0);
    assert_eq!(value(&rows(&ok(&["alpha", "--n", "8", "--q", "4"]))[0]), 14.0);
    let c5 = rows(&ok(&["theta", "--graph", "cycle:5"]));
    assert!((value(&c5[0]) - 5f64.sqrt()).abs() < 1e-6);
    let psi = rows(&ok(&["psi", "--graph", "cycle:5", "--trials", "20", "--seed", "1"]));
    assert!((value(&psi[0]) - 2.0).abs() < 1e-8);
    let lo = rows(&ok(&["localopt", "--graph", "cycle:5", "--set", "1,3"]));
    let extra: serde_json::Value = serde_json::from_str(&lo[0][4]).unwrap();
    assert!(extra["grad_norm"].as_f64().unwrap() <= 1e-5);
    assert!(extra["hessian_max_eig"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn gaussian_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let terms = p(dir.path(), "terms.json");
    let n = 8;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i % 2 == 0 && j == i + 1 { 1.0 } else if i % 2 == 1 && j + 1 == i { -1.0 } else { 0.0 }).collect())
        .collect();
    std::fs::write(&terms, serde_json::json!([{ "lambda": 1.0, "a": a }]).to_string()).unwrap();
    assert!((value(&rows(&ok(&["gaussian", "lowrank", "--in", &terms]))[0]) - 16.0).abs() < 1e-9);
    let sdp = rows(&ok(&["gaussian", "sdp", "--n", "8", "--seed", "2"]));
    let round = rows(&ok(&["gaussian", "round", "--n", "8", "--seed", "2", "--trials", "5"]));
    let wit = rows(&ok(&["gaussian", "witness", "--n", "8", "--seed", "2"]));
    assert!(value(&round[0]) <= value(&sdp[0]) + 1e-6);
    assert_eq!(&wit[0][1], "syk_witness");
}

#[test]
fn variational_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let f = p(dir.path(), "two.json");
    ok(&["sample", "--n", "2", "--n1", "8", "--seed", "4", "--out", &f]);
    let curve = ok(&["variational", "sweep", "--in", &f, "--grid", "0:1.5:7"]);
    let mut r = csv::Reader::from_reader(curve.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["theta", "value"]);
    let pts: Vec<(f64, f64)> = r.records().map(|x| x.unwrap()).map(|x| (x[0].parse().unwrap(), x[1].parse().unwrap())).collect();
    assert_eq!(pts.len(), 7);
    assert!(pts[0].1.abs() < 1e-12 && (pts[6].0 - 1.5).abs() < 1e-15);
    let tr = rows(&ok(&["variational", "trotter", "--in", &f, "--steps", "200", "--theta", "0.5"]));
    let extra: serde_json::Value = serde_json::from_str(&tr[0][4]).unwrap();
    assert!(extra["value_error"].as_f64().unwrap() <= 1e-3);
    let w = rows(&ok(&["variational", "witness", "--n", "8", "--seed", "1"]));
    assert_eq!(&w[0][7], "ok");
    assert_eq!(run(&["variational", "sweep", "--in", &f, "--grid", "0:1"]).status.code(), Some(2));
}

fn suite_config(dir: &Path, n: usize, last_seeds: serde_json::Value, bad_job: bool) -> String {
    let seeds = serde_json::json!({ "start": 0, "end": 5 });
    let mut jobs = vec![serde_json::json!({ "command": "diag", "params": { "n": n }, "seeds": seeds })];
    for m in ["schatten4", "tau", "frag42"] {
        jobs.push(serde_json::json!({ "command": "certify", "params": { "n": n, "method": m }, "seeds": seeds }));
    }
    jobs.push(serde_json::json!({ "command": "lower", "params": { "n": n, "method": "syk-witness" }, "seeds": seeds }));
    let last = if bad_job { serde_json::json!({ "n": n, "method": "variational", "bogus": 1 }) } else { serde_json::json!({ "n": n, "method": "variational" }) };
    jobs.push(serde_json::json!({ "command": "lower", "params": last, "seeds": last_seeds }));
    let cfg = serde_json::json!({ "output_dir": dir.join("out"), "parallelism": 2, "jobs": jobs });
    let path = p(dir, "suite.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

fn strip_runtime(text: &str) -> Vec<Vec<String>> {
    rows(text).iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != 5).map(|(_, s)| s.to_string()).collect()).collect()
}

#[test]
fn suite_counts_rows_and_checks_soundness() {
    // diag, certify ×3, lower ×2 over 5 seeds
    let dir = tempfile::tempdir().unwrap();
    let cfg = suite_config(dir.path(), 16, serde_json::json!([0, 1, 2, 3, 4]), false);
    let out = ok(&["suite", "--config", &cfg]);
    let all = rows(&std::fs::read_to_string(out.trim()).unwrap());
    assert_eq!(all.len(), 30);
    assert!(all.iter().all(|r| &r[7] == "ok"));
    let summary: serde_json::Value = serde_json::from_str(&ok(&["summarize", "--in", out.trim()])).unwrap();
    assert_eq!(summary["soundness"]["violations"], 0);
    assert_eq!(summary["soundness"]["checked"], 25);
    assert_eq!(summary["errors"], 0);
}

#[test]
fn suite_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = suite_config(dir.path(), 12, serde_json::json!([0]), false);
    let out = ok(&["suite", "--config", &cfg]);
    let first = std::fs::read_to_string(out.trim()).unwrap();
    assert_eq!(rows(&first).len(), 26);
    ok(&["suite", "--config", &cfg]);
    let second = std::fs::read_to_string(out.trim()).unwrap();
    assert_eq!(strip_runtime(&first), strip_runtime(&second));
}

#[test]
fn suite_records_bad_jobs_as_error_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = suite_config(dir.path(), 12, serde_json::json!([0]), true);
    let out = ok(&["suite", "--config", &cfg]);
    let all = rows(&std::fs::read_to_string(out.trim()).unwrap());
    assert_eq!(all.len(), 26);
    let errors: Vec<_> = all.iter().filter(|r| &r[7] == "error").collect();
    assert_eq!(errors.len(), 1);
    assert!(errors[0][4].contains("bogus"));
    // unknown commands are rejected before anything runs
    let bad = p(dir.path(), "bad.json");
    std::fs::write(&bad, r#"{"output_dir": "x", "jobs": [{"command": "frobnicate", "seeds": [0]}]}"#).unwrap();
    assert_eq!(run(&["suite", "--config", &bad]).status.code(), Some(2));
}

#[test]
fn summarize_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = p(dir.path(), "empty.csv");
    std::fs::write(&empty, "").unwrap();
    let s: serde_json::Value = serde_json::from_str(&ok(&["summarize", "--in", &empty])).unwrap();
    assert_eq!(s["rows"], 0);
    assert_eq!(s["groups"].as_array().unwrap().len(), 0);
    // mixed n: one group per (method, n)
    let mixed = p(dir.path(), "mixed.csv");
    let mut text = ok(&["diag", "--n", "8"]);
    text.push_str(ok(&["diag", "--n", "10"]).lines().nth(1).unwrap());
    std::fs::write(&mixed, text).unwrap();
    let s: serde_json::Value = serde_json::from_str(&ok(&["summarize", "--in", &mixed])).unwrap();
    let ns: Vec<u64> = s["groups"].as_array().unwrap().iter().map(|g| g["n"].as_u64().unwrap()).collect();
    assert_eq!(ns, [8, 10]);
}
