use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn probcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probcat"))
        .args(args)
        .env_remove("PROBCAT_TOLERANCE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn eval_json(path: &std::path::Path, extra: &[&str]) -> Value {
    let mut args = vec!["eval", path.to_str().unwrap(), "--json"];
    args.extend_from_slice(extra);
    let out = probcat(&args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn stage(report: &Value, index: u64) -> &Value {
    report["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["stage"] == index)
        .map(|s| &s["values"])
        .unwrap()
}

/// `λ⁻¹ log Σ pᵢ e^{λvᵢ}` in plain f64.
fn entropic(lambda: f64, pairs: &[(f64, f64)]) -> f64 {
    pairs
        .iter()
        .map(|(p, v)| p * (lambda * v).exp())
        .sum::<f64>()
        .ln()
        / lambda
}

#[test]
fn check_accepts_valid_documents() {
    for name in ["worked_mp.json", "two_step.json", "constant_mp.json"] {
        let out = probcat(&["check", data(name).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert!(stdout(&out).contains("valid pipeline"));
    }
}

#[test]
fn check_names_null_atom_on_ac_violation() {
    let out = probcat(&["check", data("ac_violation.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("$.arrows[0]"), "{text}");
    assert!(text.contains("atom {q} is null"), "{text}");
}

#[test]
fn check_reports_weight_sum() {
    let out = probcat(&["check", data("bad_weights.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("weights sum to 99/100, expected 1"));
}

#[test]
fn check_lists_every_violation() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(
        file,
        r#"{{"spaces": {{
              "X": {{"outcomes": ["p"], "weights": {{"p": "2"}}, "atoms": [["p"]]}},
              "Y": {{"outcomes": ["a", "a"], "weights": {{"a": "1"}}, "atoms": [["a"]]}}
            }},
            "arrows": [{{"id": "f", "src": "X", "dst": "W", "map": {{}}}}]}}"#
    )
    .unwrap();
    let out = probcat(&["check", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("$.spaces.X"), "{text}");
    assert!(text.contains("$.spaces.Y"), "{text}");
    assert!(text.contains("$.arrows[0]"), "{text}");
}

#[test]
fn check_rejects_malformed_json() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "{{ not json").unwrap();
    let out = probcat(&["check", file.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid JSON"));
}

#[test]
fn eval_worked_example_matches_summation() {
    let report = eval_json(&data("worked_mp.json"), &[]);
    let x = stage(&report, 0);
    let p = entropic(1.0, &[(0.5, 1.0), (0.5, 3.0)]);
    let q = entropic(1.0, &[(0.5, 2.0), (0.5, 4.0)]);
    assert!((x["{p}"].as_f64().unwrap() - p).abs() <= 1e-12 * p);
    assert!((x["{q}"].as_f64().unwrap() - q).abs() <= 1e-12 * q);
}

#[test]
fn eval_lambda_override() {
    let report = eval_json(&data("worked_mp.json"), &["--lambda", "3"]);
    let p = entropic(3.0, &[(0.5, 1.0), (0.5, 3.0)]);
    assert!((stage(&report, 0)["{p}"].as_f64().unwrap() - p).abs() <= 1e-12 * p);
    assert_eq!(report["lambda"].as_f64(), Some(3.0));
}

#[test]
fn eval_constant_terminal_is_constant_everywhere() {
    let report = eval_json(&data("constant_mp.json"), &[]);
    for s in report["stages"].as_array().unwrap() {
        for v in s["values"].as_object().unwrap().values() {
            assert!((v.as_f64().unwrap() - 5.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn eval_two_step_rollback_and_residual() {
    let report = eval_json(&data("two_step.json"), &["--residual-check"]);
    let lambda = 0.5;
    let u = entropic(lambda, &[(0.5, 3.0), (0.5, -0.5)]);
    let d = entropic(lambda, &[(0.25 / 0.6, 1.0), (0.35 / 0.6, -2.0)]);
    let s = entropic(lambda, &[(0.4, u), (0.6, d)]);
    let x1 = stage(&report, 1);
    assert!((x1["{u}"].as_f64().unwrap() - u).abs() <= 1e-9 * u.abs());
    assert!((x1["{d}"].as_f64().unwrap() - d).abs() <= 1e-9 * d.abs());
    assert!((stage(&report, 0)["{s}"].as_f64().unwrap() - s).abs() <= 1e-9 * s.abs());
    let check = &report["residual_check"];
    assert_eq!(check["passed"], true);
    assert!(check["max_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn eval_table_rounds_to_six_decimals() {
    let out = probcat(&["eval", data("worked_mp.json").to_str().unwrap(), "--table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("{p}  2.433781"), "{text}");
    assert!(text.contains("{q}  3.433781"), "{text}");
}

#[test]
fn eval_json_is_canonical() {
    let out = probcat(&["eval", data("worked_mp.json").to_str().unwrap(), "--json"]);
    let text = stdout(&out);
    assert!(text.contains("\"{p}\": 2.4337808304830273e0"), "{text}");
    let lambda_pos = text.find("\"lambda\"").unwrap();
    let stages_pos = text.find("\"stages\"").unwrap();
    assert!(lambda_pos < stages_pos);
}

#[test]
fn eval_rejects_non_pipeline_and_bad_lambda() {
    let out = probcat(&["eval", data("bad_weights.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    for bad in ["--lambda=-1", "--lambda=0", "--lambda=inf"] {
        let out = probcat(&["eval", data("worked_mp.json").to_str().unwrap(), bad]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn missing_file_is_usage_error() {
    let out = probcat(&["check", "/nonexistent/probcat.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn laws_zero_trials_is_usage_error() {
    assert_eq!(probcat(&["laws", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn laws_small_run_passes_and_is_sorted() {
    let out = probcat(&["laws", "--seed", "3", "--trials", "20", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["all_passed"], true);
    let ids: Vec<&str> = report["laws"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["id"].as_str().unwrap())
        .collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(report["laws"]
        .as_array()
        .unwrap()
        .iter()
        .all(|l| l["counterexample"].is_null()));
}

#[test]
fn laws_table_output_and_tolerance_variable() {
    let out = Command::new(env!("CARGO_BIN_EXE_probcat"))
        .args(["laws", "--trials", "5", "--max-outcomes", "4"])
        .env("PROBCAT_TOLERANCE", "1e-8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("0 failed"));
    let out = Command::new(env!("CARGO_BIN_EXE_probcat"))
        .args(["laws", "--trials", "5"])
        .env("PROBCAT_TOLERANCE", "abc")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
