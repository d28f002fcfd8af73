use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SPEC: &str = r#"{"law":"two_point","p_low":0.3,"epsilon0":0.3,"seed":1}"#;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinai-lab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn series_scenario(dir: &Path, threshold: f64) -> String {
    let body = serde_json::json!({
        "name": "tiny_series",
        "kind": "series",
        "seed": 5,
        "params": {
            "env": {"law": "two_point", "p_low": 0.3, "epsilon0": 0.3, "seed": 0},
            "envs": 2,
            "horizon": 1000,
            "thetas": [1.0],
            "tol": 1e-9,
            "per_decade": 5
        },
        "verdicts": [
            {"name": "plateau", "metric": "theta1.last_decade_fraction_max", "op": "<=", "threshold": threshold}
        ]
    });
    let path = dir.join("tiny.json");
    fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn env_sample_prints_potential() {
    let o = lab(&["env", "sample", "--spec", SPEC, "--range", "-2", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,omega,V");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].starts_with("0,") && lines[3].ends_with(",0.0000000000000000e0"));
    let omega: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(omega == 0.3 || omega == 0.7);
}

#[test]
fn exact_hitting_is_a_probability() {
    let o = lab(&["exact", "hitting", "--a", "-5", "--b", "0", "--c", "5", "--spec", SPEC]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mantissa = text.trim().split('e').next().unwrap();
    assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
    let p: f64 = text.trim().parse().unwrap();
    assert!(p > 0.0 && p < 1.0);
}

#[test]
fn landscape_csv_has_header_and_rows() {
    let o = lab(&["landscape", "--n", "1000", "--spec", SPEC, "--csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("site,kind,value,H,e,certified"));
    assert!(lines.count() > 2);
}

#[test]
fn run_exit_code_follows_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let pass = series_scenario(dir.path(), 1.0);
    let out = dir.path().join("out");
    let o = lab(&["run", &pass, "--workers", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS plateau:"));
    for f in ["report.json", "timing.json", "series.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let fail = series_scenario(dir.path(), -1.0);
    let o = lab(&["run", &fail, "--out", dir.path().join("out2").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL plateau:"));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(lab(&["run", "/no/such/scenario.json"]).status.code(), Some(2));
    let o = lab(&["env", "sample", "--spec", r#"{"law":"two_point","p_low":0.5,"epsilon0":0.3,"seed":1}"#, "--range", "0", "1"]);
    assert_eq!(o.status.code(), Some(2));
}
