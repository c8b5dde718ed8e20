use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_s4-bench");
const HEADER: &str = "method,n,l,time_ms_median,time_ms_iqr,peak_aux_bytes,max_rel_err";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn error_column(js: &Value) -> Vec<(String, Value)> {
    js["cases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["method"].as_str().unwrap().to_string(), c["max_rel_err"].clone()))
        .collect()
}

#[test]
fn verify_passes_on_healthy_build() {
    let o = run(&["verify", "--n", "4,8", "--l", "15,64", "--family", "legs"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("kernel.krylov"));
}

#[test]
fn verify_fails_on_injected_perturbation() {
    let o = run(&["verify", "--n", "4", "--l", "16", "--inject-kernel-perturbation", "1e-3"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("verify failed: worst case"), "{err}");
    assert!(err.contains("error=1.000e-3"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--repeats", "2"]).status.code(), Some(2));
    assert_eq!(run(&["nope"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--family", "fourier"]).status.code(), Some(2));
    assert_eq!(run(&["bench-kernel", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn csv_schema() {
    let o = run(&["bench-kernel", "--n", "8", "--l", "64,128", "--repeats", "3", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>().join(","), HEADER);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec.len(), 7);
        rec[1].parse::<usize>().unwrap();
        rec[2].parse::<usize>().unwrap();
        assert!(rec[3].parse::<f64>().unwrap() >= 0.0);
        assert!(rec[4].parse::<f64>().unwrap() >= 0.0);
        rec[5].parse::<usize>().unwrap();
        if !rec[6].is_empty() {
            rec[6].parse::<f64>().unwrap();
        }
        rows += 1;
    }
    assert!(rows >= 4);
}

#[test]
fn json_schema_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&[
        "bench-step", "--n", "8,16", "--l", "32", "--h", "2", "--repeats", "3", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let js: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(js["config"]["n"], serde_json::json!([8, 16]));
    assert_eq!(js["config"]["repeats"], 3);
    for case in js["cases"].as_array().unwrap() {
        for key in ["method", "n", "l", "time_ms_median", "time_ms_iqr", "peak_aux_bytes", "max_rel_err"] {
            assert!(case.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn diagnose_reports_exact_integers() {
    let o = run(&["diagnose", "--n", "12,24", "--l", "64", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let js: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let diags = js["diagnostics"].as_array().unwrap();
    assert!(diags.iter().any(|d| d["context"] == "eigvec_matrix"));
    assert!(diags.iter().any(|d| d["context"] == "charpoly_inverse"));
    for d in diags {
        let digits = d["max_entry"].as_str().unwrap();
        assert!(!digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()), "{digits}");
    }
    let lssl = diags.iter().find(|d| d["context"] == "charpoly_inverse" && d["n"] == 24).unwrap();
    assert_eq!(lssl["max_entry"], s4::diagnostics::binomial(24 + 64 - 2, 63).to_string());
}

#[test]
fn error_columns_are_reproducible() {
    let args = ["verify", "--n", "4,8", "--l", "16", "--seed", "5", "--format", "json"];
    let a: Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
    let b: Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
    assert_eq!(error_column(&a), error_column(&b));
    assert!(!error_column(&a).is_empty());
}

#[test]
fn budget_refusal() {
    let o = run(&["bench-kernel", "--n", "64", "--l", "16384", "--budget", "1e3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}
