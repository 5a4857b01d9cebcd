use std::process::{Command, Output};

use serde_json::{json, Value};

fn steenrod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steenrod"))
        .args(args)
        .env_remove("STEENROD_MAX_DIM")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn labels(report: &Value) -> Vec<String> {
    report["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["label"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn describe_projective_plane() {
    let out = steenrod(&["describe", r#"{"type":"projective_space","n":2}"#]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(labels(&report), ["h^0", "h^1", "h^2"]);
    assert_eq!(report["multiplication"]["h^1*h^1"], json!({"h^2": "1"}));
    assert_eq!(report["tangent_ch"]["h^1"], "3");
    assert_eq!(report["tau_matrix"]["h^1"], json!({"h^1": "1", "h^2": "1"}));
}

#[test]
fn describe_quadric_basis() {
    let out = steenrod(&["describe", "--variety", r#"{"type":"odd_quadric","dim":3}"#]);
    assert!(out.status.success());
    assert_eq!(labels(&stdout_json(&out)), ["h^0", "h^1", "l_1", "l_0"]);
}

#[test]
fn malformed_spec_is_an_input_error() {
    for spec in [r#"{"type":"projective_space""#, r#"{"type":"odd_quadric","dim":4}"#, "G(2,4)"] {
        let out = steenrod(&["describe", spec]);
        assert_eq!(out.status.code(), Some(2), "{spec}");
    }
}

#[test]
fn operate_square_of_hyperplane() {
    let out = steenrod(&["operate", "--variety", "P^2", "--p", "2", "--class", r#"{"h^1":1}"#]);
    assert!(out.status.success());
    assert_eq!(
        stdout_json(&out),
        json!({
            "variety": "P^2",
            "p": 2,
            "input": {"h^1": "1"},
            "ops": {"S_0": {"h^1": "1"}, "S_1": {"h^2": "1"}},
            "convention": "cohomological",
        })
    );
}

#[test]
fn operate_cube_at_three() {
    let out = steenrod(&["operate", "--variety", r#"{"type":"projective_space","n":3}"#, "--p", "3", "--class", r#"{"h^1":"1"}"#]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["ops"], json!({"S_0": {"h^1": "1"}, "S_1": {"h^3": "1"}}));
}

#[test]
fn operate_zero_class() {
    for convention in ["coh", "hom"] {
        let out = steenrod(&["operate", "--variety", "Q_3", "--p", "2", "--class", "{}", "--convention", convention]);
        assert!(out.status.success());
        let ops = stdout_json(&out)["ops"].clone();
        assert!(ops.as_object().unwrap().values().all(|v| v == &json!({})));
    }
}

#[test]
fn homological_convention_is_reported() {
    let out = steenrod(&["operate", "--variety", "P^1", "--p", "2", "--class", r#"{"h^0":1}"#, "--convention", "hom"]);
    let report = stdout_json(&out);
    assert_eq!(report["convention"], "homological");
    assert_eq!(report["ops"], json!({"S_0": {"h^0": "1"}, "S_1": {}}));
}

#[test]
fn operate_rejects_bad_input() {
    let cases: [&[&str]; 3] = [
        &["operate", "--variety", "P^2", "--p", "4", "--class", r#"{"h^1":1}"#],
        &["operate", "--variety", "P^2", "--p", "2", "--class", r#"{"x":1}"#],
        &["operate", "--variety", "P^2", "--p", "2", "--class", "not json"],
    ];
    for args in cases {
        assert_eq!(steenrod(args).status.code(), Some(2), "{args:?}");
    }
}

fn table_rows(variety: &str) -> Vec<String> {
    let out = steenrod(&["table", "--variety", variety, "--p", "2"]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn tables() {
    let p1 = table_rows("P^1");
    assert_eq!(p1[0], "input,k,h^0,h^1");
    assert_eq!(&p1[1..], ["h^0,0,1,0", "h^1,0,0,1"]);
    assert_eq!(table_rows("Q_3").len() - 1, 6);
    let pp = table_rows("P^1xP^1");
    assert_eq!(pp[0], "input,k,h^0*h^0,h^0*h^1,h^1*h^0,h^1*h^1");
    assert_eq!(pp.len() - 1, 6);
}

#[test]
fn table_json_matches_operate() {
    let out = steenrod(&["table", "--variety", "P^3", "--p", "2", "--format", "json"]);
    let rows = stdout_json(&out)["rows"].as_array().unwrap().clone();
    let h1: Vec<&Value> = rows.iter().filter(|r| r["input"] == "h^1").collect();
    assert_eq!(h1.len(), 2);
    assert_eq!(h1[1]["output"], json!({"h^2": "1"}));
}

#[test]
fn verify_examples() {
    let cases: [&[&str]; 3] = [
        &["verify", "lucas-oracle", "--n", "8"],
        &["verify", "--suite", "segre", "--p", "2", "--k", "4"],
        &["verify", "xp", "--p", "5", "--variety", "P^6"],
    ];
    for args in cases {
        let out = steenrod(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let report = stdout_json(&out);
        assert_eq!(report["passed"], true);
        assert!(report["checks"].as_u64().unwrap() > 0);
    }
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "lift-independence", "--variety", "P^1xP^2", "--seed", "42", "--trials", "20"];
    let (a, b) = (steenrod(&args), steenrod(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_input_errors() {
    assert_eq!(steenrod(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(steenrod(&["verify", "xp", "--p", "6"]).status.code(), Some(2));
    assert_eq!(steenrod(&["verify"]).status.code(), Some(2));
}

#[test]
fn dimension_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_steenrod"))
        .args(["describe", "P^5"])
        .env("STEENROD_MAX_DIM", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(steenrod(&["describe", "P^8"]).status.success());
    assert_eq!(steenrod(&["describe", "P^9"]).status.code(), Some(2));
}

#[test]
fn output_file() {
    let path = std::env::temp_dir().join(format!("steenrod-cli-test-{}.csv", std::process::id()));
    let out = steenrod(&["table", "--variety", "P^2", "--p", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.starts_with("input,k,h^0,h^1,h^2\n"));
}
