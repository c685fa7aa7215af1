use serde_json::Value;
use zerohopf_web::{averaged_zeros_json, orbit_json, zero_hopf_json, ORBIT_SAMPLES};

const CASE_I: &str = r#"{"case":"i","c":1,"omega":1,"a1":1,"b1":1,"e1":1}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn zero_hopf_case_i() {
    let v = parse(&zero_hopf_json("i", 1.0, 1.0).unwrap());
    // 3d² - c² = ω², d < 0; e = (4c² + ω²)/(3c)
    assert!((v["d"].as_f64().unwrap() + (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
    assert!((v["e"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-14);
    assert_eq!(v["certified"], true);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);
    let eig = v["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 4);
    let max_im = eig.iter().map(|z| z[1].as_f64().unwrap()).fold(f64::MIN, f64::max);
    assert!((max_im - 1.0).abs() < 1e-8);
}

#[test]
fn zero_hopf_rejects_bad_input() {
    assert!(zero_hopf_json("iv", 1.0, 1.0).is_err());
    assert_eq!(zero_hopf_json("i", 0.0, 1.0).unwrap_err(), "c must be nonzero");
    assert!(zero_hopf_json("i", 1.0, -1.0).is_err());
}

#[test]
fn zeros_case_i() {
    let v = parse(&averaged_zeros_json(CASE_I).unwrap());
    let zeros = v.as_array().unwrap();
    assert_eq!(zeros.len(), 4);
    let s34 = zeros.iter().find(|z| z["label"] == "s3,4").unwrap();
    // r² = 3/4 and w = 1/2 for this unfolding
    let loc: Vec<f64> = s34["location"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((loc[0] - 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert!(loc[1].abs() < 1e-12);
    assert!((loc[2] - 0.5).abs() < 1e-12);
    assert_eq!(s34["orbit_count"], 2);
    assert_eq!(s34["verdict"], "stable");
}

#[test]
fn spec_validation() {
    assert!(averaged_zeros_json(r#"{"case":"ii","c":1,"omega":1,"d":-1,"e":3,"a1":1,"b1":1}"#).unwrap_err().contains("omega"));
    assert!(averaged_zeros_json(r#"{"case":"i","c":1,"omega":1,"a1":1,"b1":1}"#).unwrap_err().contains("e1"));
    assert!(averaged_zeros_json(r#"{"case":"i","c":1,"omega":1,"a1":1,"b1":1,"e1":1,"x":2}"#).is_err());
    assert!(averaged_zeros_json(r#"{"case":"i","c":1,"omega":1,"a1":1,"b1":1,"e1":1,"branch":"minus"}"#).is_err());
    assert!(averaged_zeros_json(r#"{"case":"iii","c":1,"omega":1,"e":3,"a1":1,"b1":1,"branch":"minus"}"#).is_ok());
}

#[test]
fn orbit_case_i_closes() {
    let v = parse(&orbit_json(CASE_I, 0.01, "").unwrap());
    assert_eq!(v["label"], "s3,4");
    let period = v["period"].as_f64().unwrap();
    assert!((period - 2.0 * std::f64::consts::PI).abs() < 0.1);
    assert!(v["closure_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["verdict"], v["averaged_verdict"]);
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), ORBIT_SAMPLES + 1);
    let first: Vec<f64> = samples[0].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let last: Vec<f64> = samples[ORBIT_SAMPLES].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((last[0] - period).abs() < 1e-12);
    assert!((1..5).all(|k| (first[k] - last[k]).abs() < 1e-8));
}

#[test]
fn orbit_rejects_unknown_label_and_eps() {
    assert!(orbit_json(CASE_I, 0.01, "s9").unwrap_err().contains("s9"));
    assert!(orbit_json(CASE_I, 0.5, "").is_err());
    // the trivial zero is the unperturbed equilibrium
    assert!(orbit_json(CASE_I, 0.01, "s0").is_err());
}
