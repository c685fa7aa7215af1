//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain numbers or a JSON unfolding and returns a JSON
//! string. The `*_json` functions hold the logic so they can be tested natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;
use zerohopf_core::averaging::{averaged_zeros, AveragedZero};
use zerohopf_core::model::jacobian;
use zerohopf_core::ode::integrate;
use zerohopf_core::orbits::{find_periodic_orbit, ShootingConfig};
use zerohopf_core::reduction::{Branch, UnfoldingSpec};
use zerohopf_core::spectrum::{eigenvalues4, is_zero_hopf, zero_hopf_params, ZERO_HOPF_TOL};
use zerohopf_core::Case;

/// Samples per period in the orbit projection.
pub const ORBIT_SAMPLES: usize = 256;

/// Unfolding as sent by the page; unused keys of a case must be absent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecInput {
    pub case: Case,
    pub c: f64,
    pub omega: Option<f64>,
    pub a1: f64,
    pub b1: f64,
    pub d1: Option<f64>,
    pub e1: Option<f64>,
    pub d: Option<f64>,
    pub e: Option<f64>,
    pub branch: Option<Branch>,
}

impl SpecInput {
    pub fn build(&self) -> Result<UnfoldingSpec, String> {
        let need = |k: &str, v: Option<f64>| v.ok_or_else(|| format!("case {} needs {k}", self.case));
        let forbid = |k: &str, v: Option<f64>| match v {
            Some(_) => Err(format!("{k} is not a parameter of case {}", self.case)),
            None => Ok(()),
        };
        if self.branch.is_some() && self.case != Case::III {
            return Err("branch applies to case iii only".into());
        }
        let spec = match self.case {
            Case::I => {
                forbid("d", self.d)?;
                forbid("e", self.e)?;
                UnfoldingSpec::case_i(self.c, need("omega", self.omega)?, self.a1, self.b1, self.d1.unwrap_or(0.0), need("e1", self.e1)?)
            }
            Case::II => {
                forbid("omega", self.omega)?;
                forbid("d1", self.d1)?;
                forbid("e1", self.e1)?;
                UnfoldingSpec::case_ii(self.c, need("d", self.d)?, need("e", self.e)?, self.a1, self.b1)
            }
            Case::III => {
                forbid("d", self.d)?;
                forbid("e1", self.e1)?;
                let branch = self.branch.unwrap_or(Branch::Plus);
                UnfoldingSpec::case_iii(self.c, need("omega", self.omega)?, need("e", self.e)?, self.a1, self.b1, self.d1.unwrap_or(0.0), branch)
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

fn parse_spec(spec_json: &str) -> Result<UnfoldingSpec, String> {
    let input: SpecInput = serde_json::from_str(spec_json).map_err(|e| format!("bad unfolding: {e}"))?;
    input.build()
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct ZeroHopfOut {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    omega: f64,
    equilibrium: [f64; 4],
    /// `[re, im]` pairs.
    eigenvalues: Vec<[f64; 2]>,
    certified: bool,
    residual: Option<f64>,
}

/// Zero-Hopf parameters for `case` with their spectral certificate.
pub fn zero_hopf_json(case: &str, c: f64, omega: f64) -> Result<String, String> {
    let case: Case = case.parse().map_err(|e: zerohopf_core::Error| e.to_string())?;
    let zh = zero_hopf_params(case, c, Some(omega), None, None).map_err(|e| e.to_string())?;
    let p = zh.params;
    let eigenvalues = eigenvalues4(&jacobian(&p, &zh.equilibrium)).iter().map(|z| [z.re, z.im]).collect();
    let cert = is_zero_hopf(&p, &zh.equilibrium, ZERO_HOPF_TOL);
    let s = zh.equilibrium;
    to_json(&ZeroHopfOut {
        a: p.a,
        b: p.b,
        c: p.c,
        d: p.d,
        e: p.e,
        omega: zh.omega,
        equilibrium: [s[0], s[1], s[2], s[3]],
        eigenvalues,
        certified: cert.is_some(),
        residual: cert.map(|c| c.residual),
    })
}

#[derive(Debug, Serialize)]
struct ZeroOut {
    label: String,
    location: [f64; 3],
    trivial: bool,
    orbit_count: usize,
    det: f64,
    eigenvalues: Vec<[f64; 2]>,
    verdict: String,
}

fn zero_out(z: &AveragedZero) -> ZeroOut {
    ZeroOut {
        label: z.label.clone(),
        location: z.location,
        trivial: z.trivial,
        orbit_count: z.orbit_count,
        det: z.stability.det,
        eigenvalues: z.stability.eigenvalues.iter().map(|e| [e.re, e.im]).collect(),
        verdict: format!("{:?}", z.stability.verdict).to_lowercase(),
    }
}

/// Zeros of the averaged map with their stability.
pub fn averaged_zeros_json(spec_json: &str) -> Result<String, String> {
    let spec = parse_spec(spec_json)?;
    let zeros = averaged_zeros(&spec).map_err(|e| e.to_string())?;
    to_json(&zeros.iter().map(zero_out).collect::<Vec<_>>())
}

#[derive(Debug, Serialize)]
struct OrbitOut {
    label: String,
    period: f64,
    closure_residual: f64,
    multipliers: Vec<[f64; 2]>,
    verdict: String,
    averaged_verdict: String,
    /// Uniform samples over one period, `[t, x, y, z, w]`.
    samples: Vec<[f64; 5]>,
}

/// Periodic orbit born from the averaged zero `label` (empty: the first `r > 0` zero).
pub fn orbit_json(spec_json: &str, eps: f64, label: &str) -> Result<String, String> {
    let spec = parse_spec(spec_json)?;
    let zeros = averaged_zeros(&spec).map_err(|e| e.to_string())?;
    let seed = if label.is_empty() {
        zeros.iter().find(|z| !z.trivial && !z.axis).ok_or("no zero with r > 0")?
    } else {
        zeros.iter().find(|z| z.label == label).ok_or_else(|| format!("no zero labelled '{label}'"))?
    };
    let cfg = ShootingConfig::default();
    let orbit = find_periodic_orbit(&spec, eps, seed, &cfg).map_err(|e| e.to_string())?;
    let traj = integrate(&orbit.params, orbit.initial_state, orbit.period, &cfg.integrator).map_err(|e| e.to_string())?;
    let samples = (0..=ORBIT_SAMPLES)
        .map(|k| {
            let t = orbit.period * k as f64 / ORBIT_SAMPLES as f64;
            traj.sample(t).map(|s| [t, s[0], s[1], s[2], s[3]])
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    to_json(&OrbitOut {
        label: seed.label.clone(),
        period: orbit.period,
        closure_residual: orbit.closure_residual,
        multipliers: orbit.floquet_multipliers.iter().map(|m| [m.re, m.im]).collect(),
        verdict: format!("{:?}", orbit.verdict()).to_lowercase(),
        averaged_verdict: format!("{:?}", seed.stability.verdict).to_lowercase(),
        samples,
    })
}

#[wasm_bindgen]
pub fn zero_hopf(case: &str, c: f64, omega: f64) -> Result<String, JsError> {
    zero_hopf_json(case, c, omega).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn zeros(spec_json: &str) -> Result<String, JsError> {
    averaged_zeros_json(spec_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn orbit(spec_json: &str, eps: f64, label: &str) -> Result<String, JsError> {
    orbit_json(spec_json, eps, label).map_err(|e| JsError::new(&e))
}
