use std::path::{Path, PathBuf};
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use zerohopf_cli::report::{canonical_json, num};
use zerohopf_cli::{run, TRAJECTORY_HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zerohopf"))
}

fn run_in_process(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("zerohopf").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(&argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stage<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["stages"].as_array().unwrap().iter().find(|s| s["name"] == name).unwrap_or_else(|| panic!("no stage {name}"))
}

#[test]
fn zero_hopf_case_i_report() {
    let dir = tmp();
    let json = dir.path().join("zh.json");
    let status = bin().args(["zero-hopf", "--case", "i", "--c", "1", "--omega", "1", "--json", path_str(&json)]).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let r = read_json(&json);
    let p = &stage(&r, "parameters")["result"]["params"];
    // 3d² - c² = ω² with d < 0, and e = (4c² + ω²)/(3c)
    let d_oracle = -(2.0f64 / 3.0).sqrt();
    assert!((p["d"].as_f64().unwrap() - d_oracle).abs() < 1e-12);
    assert!((p["d"].as_f64().unwrap() - (-0.8164966)).abs() < 1e-7);
    assert!((p["e"].as_f64().unwrap() - 1.6666667).abs() < 1e-7);
    assert_eq!(p["a"].as_f64(), Some(-2.0));
    assert_eq!(p["b"].as_f64(), Some(0.0));
    let residual = stage(&r, "certificate")["result"]["residual"].as_f64().unwrap();
    assert!(residual <= 1e-8, "residual {residual}");
    assert_eq!(r["status"], "ok");
    assert_eq!(r["exit_code"], 0);
    assert_eq!(r["tolerances"]["match"].as_f64(), Some(1e-8));
}

#[test]
fn equilibria_from_raw_parameters() {
    let dir = tmp();
    let json = dir.path().join("eq.json");
    let (code, out, _) = run_in_process(&["equilibria", "--params", "a=2,b=1,c=1,d=1,e=3", "--json", path_str(&json)]);
    assert_eq!(code, 0);
    assert!(out.contains("3 equilibria"));
    let r = read_json(&json);
    let res = &stage(&r, "equilibria")["result"];
    // Δ = (ec - c² - d²)/c = (3 - 1 - 1)/1
    assert_eq!(res["delta"].as_f64(), Some(1.0));
    let eq = res["equilibria"].as_array().unwrap();
    assert_eq!(eq.len(), 3);
    // s = √(bΔ) = 1, z = d·s/c = 1
    let states: Vec<Vec<f64>> = eq.iter().map(|q| q["state"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect()).collect();
    assert!(states.contains(&vec![0.0, 0.0, 0.0, 0.0]));
    assert!(states.contains(&vec![1.0, 1.0, 1.0, 1.0]));
    assert!(states.contains(&vec![-1.0, -1.0, -1.0, 1.0]));
    for q in eq {
        assert!(q["residual"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn zero_c_is_an_input_error() {
    let out = bin().args(["zeros", "--case", "i", "--spec", "c=0,omega=1,a1=1,b1=1,e1=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c must be nonzero"));
}

#[test]
fn input_errors_exit_one() {
    let cases: [&[&str]; 7] = [
        &["equilibria", "--params", "a=2,b=1,c=1,d=1,e=3", "--case", "i", "--c", "1"],
        &["equilibria", "--params", "a=2,b=1,c=1,d=1"],
        &["zeros", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1,q=2"],
        &["zeros", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1", "--c", "2"],
        &["zeros", "--case", "ii", "--spec", "c=1,d=-1,e=3,a1=1,b1=1", "--branch", "minus"],
        &["verify", "--criterion", "9"],
        &["zeros", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1", "--tol", "1e-6"],
    ];
    for args in cases {
        let (code, _, err) = run_in_process(args);
        assert_eq!(code, 1, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
    let (code, _, _) = run_in_process(&["no-such-command"]);
    assert_eq!(code, 1);
}

#[test]
fn numerical_failure_still_writes_the_report() {
    let dir = tmp();
    let json = dir.path().join("fail.json");
    let (code, _, err) = run_in_process(&["zero-hopf", "--case", "i", "--c", "1", "--omega", "1", "--tol", "1e-300", "--json", path_str(&json)]);
    assert_eq!(code, 2, "{err}");
    let r = read_json(&json);
    assert_eq!(r["status"], "numerical_error");
    assert_eq!(r["exit_code"], 2);
    assert!(r["error"].as_str().unwrap().contains("not within"));
    assert!(stage(&r, "certificate")["result"]["error"].is_string());
}

#[test]
fn json_round_trip_is_byte_identical() {
    let dir = tmp();
    let json = dir.path().join("z.json");
    let (code, _, _) = run_in_process(&["zeros", "--case", "ii", "--spec", "c=1,d=-1,e=3,a1=1,b1=1", "--json", path_str(&json)]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&json).unwrap();
    let parsed: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(canonical_json(&parsed).unwrap(), text);
    // keys are sorted at every level
    fn sorted(v: &Value) -> bool {
        match v {
            Value::Object(m) => m.keys().zip(m.keys().skip(1)).all(|(a, b)| a < b) && m.values().all(sorted),
            Value::Array(a) => a.iter().all(sorted),
            _ => true,
        }
    }
    assert!(sorted(&parsed));
}

#[test]
fn report_dir_resolves_relative_paths() {
    let dir = tmp();
    let status = bin()
        .env("ZEROHOPF_REPORT_DIR", dir.path())
        .args(["equilibria", "--params", "a=2,b=1,c=1,d=1,e=3", "--json", "nested/eq.json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let written: PathBuf = dir.path().join("nested/eq.json");
    assert_eq!(read_json(&written)["invocation"]["command"], "equilibria");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("nested")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers.len(), 1, "temporary files left: {leftovers:?}");
}

#[test]
fn orbit_csv_trajectory() {
    let dir = tmp();
    let csv = dir.path().join("orbit.csv");
    let (code, out, err) = run_in_process(&[
        "orbit", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1", "--eps", "0.01", "--csv", path_str(&csv), "--sample-dt", "0.25",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("seed s3,4"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRAJECTORY_HEADER.join(","));
    assert_eq!(lines.next().unwrap().split(',').next().unwrap().parse::<f64>().unwrap(), 0.0);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 5));
    // one period is about 2π/ω; uniform samples at dt = 0.25
    assert!((rows.len() as f64 - 2.0 * std::f64::consts::PI / 0.25).abs() < 3.0, "{} rows", rows.len());
    assert!(rows.windows(2).all(|w| (w[1][0] - w[0][0] - 0.25).abs() < 1e-12));

    // accepted steps end exactly at the period, where the orbit closes
    let csv2 = dir.path().join("steps.csv");
    let (code, _, err) = run_in_process(&["orbit", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1", "--eps", "0.01", "--csv", path_str(&csv2)]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<Vec<f64>> =
        std::fs::read_to_string(&csv2).unwrap().lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let (first, last) = (&rows[0], rows.last().unwrap());
    let gap = (1..5).map(|k| (first[k] - last[k]).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-8, "gap {gap}");
    assert!((last[0] - 2.0 * std::f64::consts::PI).abs() < 0.1);
}

#[test]
fn sample_dt_requires_csv() {
    let (code, _, err) = run_in_process(&["orbit", "--case", "i", "--spec", "c=1,omega=1,a1=1,b1=1,e1=1", "--eps", "0.01", "--sample-dt", "0.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("--csv"));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run_in_process(&["--help"]).0, 0);
    assert_eq!(run_in_process(&["--version"]).0, 0);
}

proptest! {
    #[test]
    fn csv_numbers_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let s = num(v);
        prop_assert!(!s.contains(','));
        prop_assert_eq!(s.parse::<f64>().unwrap(), v);
    }
}
