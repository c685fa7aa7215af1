//! First-order averaging: periodic quadrature, the averaged maps in closed
//! form, their zeros and the linear stability of each zero.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduction::{ReducedField, UnfoldingSpec};
use crate::spectrum::eigenvalues3;
use crate::Case;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Default panel count for [`average_quadrature`].
pub const DEFAULT_QUAD_N: usize = 256;
/// Eigenvalue real parts within this band of zero give a nonhyperbolic verdict.
pub const VERDICT_BAND: f64 = 1e-10;
/// Newton target on `‖f‖∞`.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 20;
/// Relative tolerance for agreement with printed formulas.
pub const PRINTED_TOL: f64 = 1e-8;

/// `(1/2π) ∫₀^{2π} F(θ, x) dθ` by the composite trapezoid rule on `n` panels.
pub fn average_quadrature(field: &dyn ReducedField, state: [f64; 3], n: usize) -> Result<[f64; 3]> {
    if n < 8 {
        return Err(Error::Invalid(format!("quadrature needs at least 8 panels, got {n}")));
    }
    let mut acc = [0.0; 3];
    for k in 0..n {
        let f = field.eval(2.0 * PI * k as f64 / n as f64, state)?;
        for i in 0..3 {
            acc[i] += f[i];
        }
    }
    Ok(acc.map(|v| v / n as f64))
}

/// The averaged map `f(r, z, w)` of an unfolding, with its exact Jacobian.
///
/// In all three cases `f₁ = r·g(z, w)` and `f₂, f₃` depend on `r` through
/// `r²` only, so `f` is odd in `r` in its first component and even in the others.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMap {
    pub spec: UnfoldingSpec,
}

pub fn averaged_map_closed(spec: &UnfoldingSpec) -> Result<AveragedMap> {
    spec.validate()?;
    Ok(AveragedMap { spec: *spec })
}

impl AveragedMap {
    pub fn case(&self) -> Case {
        self.spec.case
    }

    /// `g` with `f₁ = r·g`.
    fn radial_rate(&self, z: f64, w: f64) -> f64 {
        let UnfoldingSpec { c, omega: om, a1, d1, e1, d, .. } = self.spec;
        match self.spec.case {
            Case::I => {
                (6.0 * c * c * (e1 - w) - 3.0 * a1 * om * om + 4.0 * SQRT_3 * c * d1 * self.spec.s())
                    / (6.0 * om.powi(3))
            }
            Case::II => (a1 * (c * c - 3.0 * d * d) - 2.0 * c * c * z) / (2.0 * om.powi(3)),
            Case::III => -(2.0 * c * c * w + a1 * om * om) / (2.0 * om.powi(3)),
        }
    }

    fn case_ii_denominator(&self) -> f64 {
        let UnfoldingSpec { c, d, omega, .. } = self.spec;
        let k = c.powi(3) - 3.0 * c * d * d;
        3.0 * omega * k * k
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        let [r, z, w] = x;
        let UnfoldingSpec { c, omega: om, a1, b1, d1, e1, d, e, .. } = self.spec;
        let f1 = r * self.radial_rate(z, w);
        let (c2, om2) = (c * c, om * om);
        let (f2, f3) = match self.spec.case {
            Case::I => (
                -2.0 * c * z * (3.0 * c * (e1 - w) + 2.0 * SQRT_3 * d1 * self.spec.s()) / (3.0 * om.powi(3)),
                (12.0 * c2 * c2 * z * z + 2.0 * c2 * r * r * om2 - 3.0 * b1 * w * om2 * om2) / (3.0 * om.powi(5)),
            ),
            Case::II => {
                let d2 = d * d;
                let q = c2 - 3.0 * d2;
                let num = -2.0 * c2 * d2 * q * r * r + 12.0 * c2.powi(3) * w * w
                    - 3.0 * b1 * c2 * q * (2.0 * c2 - 2.0 * d2 - c * e) * z
                    + 1.5 * a1 * b1 * (c2 * c2 - 4.0 * c2 * d2 + 3.0 * d2 * d2) * (c2 + d2 - c * e);
                (num / self.case_ii_denominator(), 2.0 * c2 * w * z / om.powi(3))
            }
            Case::III => (
                2.0 * c2 * w * z / om.powi(3),
                (24.0 * c2 * c2 * z * z
                    + c * (4.0 * c * c2 * r * r - 12.0 * b1 * c * w + 9.0 * b1 * e * w) * om2
                    + (4.0 * c2 * r * r - 9.0 * b1 * w) * om2 * om2)
                    / (6.0 * om.powi(5)),
            ),
        };
        [f1, f2, f3]
    }

    pub fn jacobian(&self, x: [f64; 3]) -> Matrix3<f64> {
        let [r, z, w] = x;
        let UnfoldingSpec { c, omega: om, b1, d1, e1, d, e, .. } = self.spec;
        let (c2, om2, om3) = (c * c, om * om, om.powi(3));
        let g = self.radial_rate(z, w);
        match self.spec.case {
            Case::I => Matrix3::new(
                g, 0.0, -c2 * r / om3,
                0.0, -2.0 * c * (3.0 * c * (e1 - w) + 2.0 * SQRT_3 * d1 * self.spec.s()) / (3.0 * om3), 2.0 * c2 * z / om3,
                4.0 * c2 * r / (3.0 * om3), 8.0 * c2 * c2 * z / om.powi(5), -b1 / om,
            ),
            Case::II => {
                let d2 = d * d;
                let q = c2 - 3.0 * d2;
                let k = self.case_ii_denominator();
                Matrix3::new(
                    g, -c2 * r / om3, 0.0,
                    -4.0 * c2 * d2 * q * r / k, -3.0 * b1 * c2 * q * (2.0 * c2 - 2.0 * d2 - c * e) / k, 24.0 * c2.powi(3) * w / k,
                    0.0, 2.0 * c2 * w / om3, 2.0 * c2 * z / om3,
                )
            }
            Case::III => Matrix3::new(
                g, 0.0, -c2 * r / om3,
                0.0, 2.0 * c2 * w / om3, 2.0 * c2 * z / om3,
                8.0 * c2 * r * (c2 + om2) / (6.0 * om3), 8.0 * c2 * c2 * z / om.powi(5),
                (c * (9.0 * b1 * e - 12.0 * b1 * c) * om2 - 9.0 * b1 * om2 * om2) / (6.0 * om.powi(5)),
            ),
        }
    }

    /// The averaged field in Cartesian reduced coordinates `(X, Y, z, w)`,
    /// smooth across the axis `r = 0`.
    pub fn eval_cartesian(&self, x: [f64; 4]) -> [f64; 4] {
        let [bx, by, z, w] = x;
        let g = self.radial_rate(z, w);
        let [_, f2, f3] = self.eval([bx.hypot(by), z, w]);
        [g * bx, g * by, f2, f3]
    }
}

/// Stability verdict from the eigenvalues of the averaged Jacobian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Unstable,
    Nonhyperbolic,
}

impl Verdict {
    pub fn from_real_parts(re: impl IntoIterator<Item = f64>) -> Self {
        let mut all_negative = true;
        for x in re {
            if x > VERDICT_BAND {
                return Verdict::Unstable;
            }
            if x >= -VERDICT_BAND {
                all_negative = false;
            }
        }
        if all_negative {
            Verdict::Stable
        } else {
            Verdict::Nonhyperbolic
        }
    }
}

/// A printed quantity compared against its computed counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrintedCheck {
    pub name: String,
    pub printed: Vec<f64>,
    pub computed: Vec<f64>,
    pub max_error: f64,
    pub agrees: bool,
}

impl PrintedCheck {
    fn scalar(name: &str, printed: f64, computed: f64) -> Self {
        let err = (printed - computed).abs();
        let agrees = err <= PRINTED_TOL * computed.abs().max(1.0);
        Self { name: name.into(), printed: vec![printed], computed: vec![computed], max_error: err, agrees }
    }

    /// Eigenvalue sets compared under the best matching; values are stored as `[re, im, ...]`.
    fn eigen(name: &str, printed: [Complex64; 3], computed: &[Complex64; 3]) -> Self {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let (err, best) = perms
            .iter()
            .map(|p| ((0..3).map(|k| (printed[p[k]] - computed[k]).norm()).fold(0.0, f64::max), *p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        let flat = |v: [Complex64; 3]| v.iter().flat_map(|z| [z.re, z.im]).collect::<Vec<_>>();
        let scale = computed.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
        Self {
            name: name.into(),
            printed: flat([printed[best[0]], printed[best[1]], printed[best[2]]]),
            computed: flat(*computed),
            max_error: err,
            agrees: err <= PRINTED_TOL * scale,
        }
    }
}

/// Linearization of the averaged map at a zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEntry {
    pub jacobian: Matrix3<f64>,
    pub det: f64,
    pub trace: f64,
    /// Sum of the principal 2×2 minors.
    pub minor_sum: f64,
    /// Coefficients of `det(λI - J) = λ³ + k₂λ² + k₁λ + k₀`, leading first.
    pub char_cubic: [f64; 4],
    pub eigenvalues: [Complex64; 3],
    pub verdict: Verdict,
    /// `|det| > 1e-12·scale`, the nondegeneracy hypothesis of the averaging theorem.
    pub theorem_applicable: bool,
    pub printed: Vec<PrintedCheck>,
}

/// A zero of the averaged map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedZero {
    pub label: String,
    /// `(r, z, w)` with `r ≥ 0`.
    pub location: [f64; 3],
    pub residual: f64,
    /// On the axis `r = 0`.
    pub axis: bool,
    /// The unperturbed equilibrium itself (no bifurcating orbit).
    pub trivial: bool,
    /// Orbits this zero stands for: 2 for an `r > 0` zero (a ± pair), 1 on the axis, 0 if trivial.
    pub orbit_count: usize,
    pub newton_iterations: usize,
    pub stability: StabilityEntry,
}

impl AveragedZero {
    pub fn jac_det(&self) -> f64 {
        self.stability.det
    }
}

fn det_scale(j: &Matrix3<f64>) -> f64 {
    j.amax().max(1e-300).powi(3)
}

/// Printed formulas for the zero carrying `label`, as functions of the computed quantities.
fn printed_checks(spec: &UnfoldingSpec, label: &str, e: &StabilityEntry) -> Vec<PrintedCheck> {
    let UnfoldingSpec { c, omega: om, a1, b1, d1, e1, d, e: ee, .. } = *spec;
    let s = spec.s();
    let (tr, m2, det) = (e.trace, e.minor_sum, e.det);
    let cx = Complex64::from;
    let mut out = Vec::new();
    match (spec.case, label) {
        (Case::I, "s1" | "s2") => {
            let eta = 3.0 * c * e1 + 2.0 * SQRT_3 * d1 * s;
            let c3 = 2.0 * a1 * b1 * c * eta / (3.0 * om.powi(5));
            out.push(PrintedCheck::scalar("det", c3, det));
            out.push(PrintedCheck::scalar("c1", -(a1 + 2.0 * b1) / (2.0 * om), tr));
            out.push(PrintedCheck::scalar("c2", b1 * (-3.0 * a1 * om * om + 8.0 * c * eta) / (6.0 * om.powi(4)), -m2));
            out.push(PrintedCheck::scalar("c3", c3, det));
            let root = cx(b1 * (48.0 * c * c * e1 + 3.0 * b1 * om * om + 32.0 * SQRT_3 * c * d1 * s) / om.powi(4)).sqrt();
            let l23 = |sg: f64| -(3.0 * b1 + sg * SQRT_3 * om * root) / (6.0 * om.powi(3));
            out.push(PrintedCheck::eigen("eigenvalues", [cx(-a1 / (2.0 * om)), l23(1.0), l23(-1.0)], &e.eigenvalues));
        }
        (Case::I, "s3,4") => {
            let eta = 3.0 * c * e1 + 2.0 * SQRT_3 * d1 * s;
            let c3 = a1 * b1 * (-6.0 * c * c * e1 + 3.0 * a1 * om * om - 4.0 * SQRT_3 * c * d1 * s) / (3.0 * om.powi(5));
            out.push(PrintedCheck::scalar("det", c3, det));
            out.push(PrintedCheck::scalar("c1", -(a1 + b1) / om, tr));
            out.push(PrintedCheck::scalar("c2", -2.0 * b1 * c * eta / (3.0 * om.powi(4)), -m2));
            out.push(PrintedCheck::scalar("c3", c3, det));
            let root = (cx(b1 * om.powi(4) * (3.0 * (4.0 * a1 + b1) * om * om - 8.0 * c * eta))).sqrt();
            let l23 = |sg: f64| -(3.0 * b1 * om.powi(3) + sg * SQRT_3 * root) / (6.0 * om.powi(3));
            out.push(PrintedCheck::eigen("eigenvalues", [cx(-a1 / om), l23(1.0), l23(-1.0)], &e.eigenvalues));
        }
        (Case::II, _) => {
            let (c2, d2) = (c * c, d * d);
            let q = c2 - 3.0 * d2;
            let rr = (-q).sqrt();
            let big_e = c2 + d2 - c * ee;
            let x1 = c2 * c2 - 8.0 * c2 * d2 + 7.0 * d2 * d2 + 2.0 * c * d2 * ee;
            let u = 2.0 * c2 - 2.0 * d2 - c * ee;
            let v = 2.0 * d2 + c * (-2.0 * c + ee);
            let h = -c2 * c2 + d2 * d2 + c * c2 * ee - c * d2 * ee;
            match label {
                "s1" => {
                    let theta3 = a1 * a1 * b1 * (c2 - d2) * big_e * x1 / (2.0 * rr.powi(9) * u);
                    let theta1 = (a1 * (-3.0 * c2 * c2 + 8.0 * c2 * d2 - 5.0 * d2 * d2 + 2.0 * c * c2 * ee - 4.0 * c * d2 * ee)
                        - 2.0 * b1 * v * v)
                        / (2.0 * rr.powi(3) * u);
                    let theta2 = a1 / (2.0 * q.powi(3) * v * v)
                        * (a1 * (c2 - d2) * big_e * x1
                            + b1 * (3.0 * c2 * c2 - 8.0 * c2 * d2 + 5.0 * d2 * d2 - 2.0 * c * c2 * ee + 4.0 * c * d2 * ee) * v * v);
                    out.push(PrintedCheck::scalar("det", theta3, det));
                    out.push(PrintedCheck::scalar("Theta1", theta1, -tr));
                    out.push(PrintedCheck::scalar("Theta2", theta2, -m2));
                    out.push(PrintedCheck::scalar("Theta3", theta3, det));
                    let ev = [
                        cx(-b1 * v / rr.powi(3)),
                        cx(a1 * x1 / (2.0 * rr.powi(3) * u)),
                        cx(a1 * h / (rr.powi(3) * v)),
                    ];
                    out.push(PrintedCheck::eigen("eigenvalues", ev, &e.eigenvalues));
                }
                "s2,3" => {
                    let det_printed = a1 * a1 * b1 * (c2 * c2 - 8.0 * c2 * d2 + 7.0 * d2 + 2.0 * c * d2 * ee) / rr.powi(7);
                    out.push(PrintedCheck::scalar("det", det_printed, det));
                    out.push(PrintedCheck::scalar("Upsilon1", (a1 * q + b1 * u) / rr.powi(3), tr));
                    out.push(PrintedCheck::scalar("Upsilon2", a1 * b1 * (c2 - d2) * big_e / q.powi(3), -m2));
                    out.push(PrintedCheck::scalar("Upsilon3", a1 * a1 * b1 * x1 / rr.powi(7), det));
                    let root = cx(b1 * (-4.0 * a1 * x1 - b1 * v * v)).sqrt() * Complex64::i();
                    let l = |sg: f64| -(cx(b1 * v) + root * sg) / (2.0 * rr.powi(3));
                    out.push(PrintedCheck::eigen("eigenvalues", [cx(-a1 / rr), l(1.0), l(-1.0)], &e.eigenvalues));
                }
                "s4" | "s5" => {
                    out.push(PrintedCheck::scalar(
                        "det",
                        a1 * a1 * b1 * (c2 - d2) * (c2 + d2 - 2.0 * c * ee) / rr.powi(7),
                        det,
                    ));
                    out.push(PrintedCheck::scalar(
                        "Gamma1",
                        (a1 * c2 + 4.0 * b1 * c2 - 3.0 * a1 * d2 - 4.0 * b1 * d2 - 2.0 * b1 * c * ee) / (2.0 * rr.powi(3)),
                        tr,
                    ));
                    out.push(PrintedCheck::scalar(
                        "Gamma2",
                        a1 * b1 * (2.0 * c2 * c2 + 8.0 * c2 * d2 - 10.0 * d2 * d2 - 3.0 * c * c2 * ee + c * d2 * ee)
                            / (2.0 * q.powi(3)),
                        m2,
                    ));
                    out.push(PrintedCheck::scalar("Gamma3", a1 * a1 * b1 * (c2 - d2) * big_e / rr.powi(7), det));
                    let root = cx(b1 * (8.0 * a1 * h - b1 * v * v)).sqrt() * Complex64::i();
                    let l = |sg: f64| -(cx(b1 * v) + root * sg) / (2.0 * rr.powi(3));
                    out.push(PrintedCheck::eigen("eigenvalues", [cx(-a1 / (2.0 * rr)), l(1.0), l(-1.0)], &e.eigenvalues));
                }
                _ => {}
            }
        }
        (Case::III, "s1,2") => {
            let kappa = b1 * (4.0 * c * c - 3.0 * c * ee + 3.0 * om * om);
            let b = a1 * a1 * kappa / (2.0 * om.powi(5));
            out.push(PrintedCheck::scalar("det", b, det));
            out.push(PrintedCheck::scalar(
                "lambda2_coefficient",
                (b1 * c * (4.0 * c - 3.0 * ee) + (2.0 * a1 + 3.0 * b1) * om * om) / (2.0 * om.powi(3)),
                -tr,
            ));
            out.push(PrintedCheck::scalar("lambda1_coefficient", 0.0, m2));
            out.push(PrintedCheck::scalar("constant", -b, -det));
            let root = cx(kappa * (kappa + 8.0 * a1 * om * om)).sqrt();
            let l = |sg: f64| -(cx(kappa) + root * sg) / (4.0 * om.powi(3));
            out.push(PrintedCheck::eigen("eigenvalues", [cx(-a1 / om), l(1.0), l(-1.0)], &e.eigenvalues));
        }
        _ => {}
    }
    out
}

fn jacobian_analysis(map: &AveragedMap, x: [f64; 3]) -> StabilityEntry {
    let j = map.jacobian(x);
    let det = j.determinant();
    let trace = j.trace();
    let minor_sum = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)] + j[(0, 0)] * j[(2, 2)] - j[(0, 2)] * j[(2, 0)]
        + j[(1, 1)] * j[(2, 2)]
        - j[(1, 2)] * j[(2, 1)];
    let eigenvalues = eigenvalues3(&j);
    StabilityEntry {
        jacobian: j,
        det,
        trace,
        minor_sum,
        char_cubic: [1.0, -trace, minor_sum, -det],
        eigenvalues,
        verdict: Verdict::from_real_parts(eigenvalues.iter().map(|z| z.re)),
        theorem_applicable: det.abs() > 1e-12 * det_scale(&j),
        printed: Vec::new(),
    }
}

/// Jacobian, determinant, characteristic cubic, eigenvalues and verdict at
/// `zero`, with the printed formulas cross-checked where available.
///
/// Fails with [`Error::NonHyperbolic`] when the determinant vanishes, since the
/// averaging theorem then says nothing about the zero.
pub fn stability_analysis(spec: &UnfoldingSpec, zero: &AveragedZero) -> Result<StabilityEntry> {
    let map = averaged_map_closed(spec)?;
    let res = inf_norm(map.eval(zero.location));
    if res > 1e-10 {
        return Err(Error::Invalid(format!("not a zero of the averaged map (residual {res:e})")));
    }
    let mut entry = jacobian_analysis(&map, zero.location);
    if !entry.theorem_applicable {
        return Err(Error::NonHyperbolic { det: entry.det });
    }
    entry.printed = printed_checks(spec, &zero.label, &entry);
    Ok(entry)
}

fn inf_norm(v: [f64; 3]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on the closed-form map.
fn polish(map: &AveragedMap, seed: [f64; 3]) -> Result<([f64; 3], f64, usize)> {
    let mut x = Vector3::from(seed);
    let mut res = inf_norm(map.eval(seed));
    for it in 0..=NEWTON_MAX_ITER {
        if res <= NEWTON_TOL {
            return Ok((x.into(), res, it));
        }
        if it == NEWTON_MAX_ITER {
            break;
        }
        let f = Vector3::from(map.eval(x.into()));
        let Some(step) = map.jacobian(x.into()).lu().solve(&f) else { break };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = x - step * lambda;
            let r = inf_norm(map.eval(trial.into()));
            if r < res || r <= NEWTON_TOL {
                x = trial;
                res = r;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // stagnation at roundoff level is still a converged zero
    if res <= 1e-10 && res <= 64.0 * f64::EPSILON * (1.0 + x.amax()).powi(2) * map_scale(map) {
        return Ok((x.into(), res, NEWTON_MAX_ITER));
    }
    Err(Error::Inconsistent { seed, residual: res })
}

fn map_scale(map: &AveragedMap) -> f64 {
    let s = map.spec;
    [s.c, s.omega, s.a1, s.b1, s.d1, s.e1, s.d, s.e]
        .iter()
        .fold(1.0_f64, |m, v| m.max(v.abs()))
        .powi(6)
        / s.omega.min(1.0).powi(5)
}

/// A closed-form zero before Newton polishing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrintedZero {
    pub label: &'static str,
    pub location: [f64; 3],
    pub trivial: bool,
}

/// Closed-form zeros whose existence conditions hold, one representative per ± pair.
pub fn printed_zeros(spec: &UnfoldingSpec) -> Vec<PrintedZero> {
    let UnfoldingSpec { c, omega: om, a1, b1, d1, e1, d, e, .. } = *spec;
    let s = spec.s();
    let mut seeds = Vec::new();
    let mut push = |label, location, trivial| seeds.push(PrintedZero { label, location, trivial });
    match spec.case {
        Case::I => {
            push("s0", [0.0, 0.0, 0.0], true);
            let w12 = e1 + 2.0 * d1 * s / (SQRT_3 * c);
            let z2 = b1 * om.powi(4) * w12 / (4.0 * c.powi(4));
            if z2 >= 0.0 {
                push("s1", [0.0, -z2.sqrt(), w12], false);
                push("s2", [0.0, z2.sqrt(), w12], false);
            }
            let w34 = e1 + (-3.0 * a1 * om * om + 4.0 * SQRT_3 * c * d1 * s) / (6.0 * c * c);
            let r2 = 3.0 * b1 * om * om * w34 / (2.0 * c * c);
            if r2 >= 0.0 {
                push("s3,4", [r2.sqrt(), 0.0, w34], false);
            }
        }
        Case::II => {
            let (c2, d2) = (c * c, d * d);
            let big_e = c2 + d2 - c * e;
            let u = 2.0 * c2 - 2.0 * d2 - c * e;
            if u != 0.0 {
                push("s1", [0.0, a1 * (c2 - d2) * big_e / (2.0 * c2 * u), 0.0], false);
            }
            let x1 = c2 * c2 - 8.0 * c2 * d2 + 7.0 * d2 * d2 + 2.0 * c * d2 * e;
            let r2 = -3.0 * a1 * b1 * x1 / (4.0 * c2 * d2);
            if r2 >= 0.0 {
                push("s2,3", [r2.sqrt(), a1 * (1.0 - 3.0 * d2 / c2) / 2.0, 0.0], false);
            }
            let w2 = -a1 * b1 * (c2 * c2 - 4.0 * c2 * d2 + 3.0 * d2 * d2) * big_e / (8.0 * c2.powi(3));
            if w2 >= 0.0 {
                push("s4", [0.0, 0.0, w2.sqrt()], false);
                push("s5", [0.0, 0.0, -w2.sqrt()], false);
            }
        }
        Case::III => {
            push("s0", [0.0, 0.0, 0.0], true);
            let kappa = b1 * (4.0 * c * c - 3.0 * c * e + 3.0 * om * om);
            let r2 = -3.0 * a1 * om * om * kappa / (8.0 * c.powi(4) * (c * c + om * om));
            if r2 >= 0.0 {
                push("s1,2", [r2.sqrt(), 0.0, -a1 * om * om / (2.0 * c * c)], false);
            }
        }
    }
    seeds
}

/// Zeros of the averaged map: every closed-form zero that is real for the
/// given spec, Newton-polished, canonicalized to `r ≥ 0`, deduplicated and
/// analysed.
pub fn averaged_zeros(spec: &UnfoldingSpec) -> Result<Vec<AveragedZero>> {
    let map = averaged_map_closed(spec)?;
    let mut out: Vec<AveragedZero> = Vec::new();
    for seed in printed_zeros(spec) {
        let (mut x, residual, iterations) = polish(&map, seed.location)?;
        x[0] = x[0].abs();
        let norm = inf_norm(x);
        if out.iter().any(|z| inf_norm([z.location[0] - x[0], z.location[1] - x[1], z.location[2] - x[2]]) <= 1e-9 * (1.0 + norm)) {
            continue;
        }
        let axis = x[0] <= 1e-12 * (1.0 + norm);
        if axis {
            x[0] = 0.0;
        }
        let mut stability = jacobian_analysis(&map, x);
        stability.printed = printed_checks(spec, seed.label, &stability);
        out.push(AveragedZero {
            label: seed.label.to_string(),
            location: x,
            residual,
            axis,
            trivial: seed.trivial,
            orbit_count: if seed.trivial {
                0
            } else if axis {
                1
            } else {
                2
            },
            newton_iterations: iterations,
            stability,
        });
    }
    Ok(out)
}

/// Number of bifurcating orbits predicted by a zero list, counted as ± pairs.
pub fn orbit_count(zeros: &[AveragedZero]) -> usize {
    zeros.iter().map(|z| z.orbit_count).sum()
}

/// Case-specific quantities that decide existence and stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case")]
pub enum Discriminants {
    #[serde(rename = "i")]
    I { eta: f64, eta1: f64 },
    #[serde(rename = "ii")]
    II {
        /// `c⁴ - 8c²d² + 7d⁴ + 2cd²e`
        x1: f64,
        /// `(c⁴ - 4c²d² + 3d⁴)(c² + d² - ce)`
        x2: f64,
        /// `2c² - 2d² - ce`
        x3: f64,
    },
    #[serde(rename = "iii")]
    III { kappa: f64 },
}

pub fn discriminants(spec: &UnfoldingSpec) -> Discriminants {
    let UnfoldingSpec { c, omega: om, a1, b1, d1, e1, d, e, .. } = *spec;
    match spec.case {
        Case::I => {
            let eta = 3.0 * c * e1 + 2.0 * SQRT_3 * d1 * spec.s();
            Discriminants::I { eta, eta1: 3.0 * a1 * om * om - 2.0 * c * eta }
        }
        Case::II => {
            let (c2, d2) = (c * c, d * d);
            Discriminants::II {
                x1: c2 * c2 - 8.0 * c2 * d2 + 7.0 * d2 * d2 + 2.0 * c * d2 * e,
                x2: (c2 * c2 - 4.0 * c2 * d2 + 3.0 * d2 * d2) * (c2 + d2 - c * e),
                x3: 2.0 * c2 - 2.0 * d2 - c * e,
            }
        }
        Case::III => Discriminants::III { kappa: b1 * (4.0 * c * c - 3.0 * c * e + 3.0 * om * om) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroVerdict {
    pub label: String,
    pub verdict: Verdict,
    pub theorem_applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub discriminants: Discriminants,
    pub zeros: Vec<ZeroVerdict>,
}

pub fn stability_report(spec: &UnfoldingSpec, zeros: &[AveragedZero]) -> StabilityReport {
    StabilityReport {
        discriminants: discriminants(spec),
        zeros: zeros
            .iter()
            .map(|z| ZeroVerdict {
                label: z.label.clone(),
                verdict: z.stability.verdict,
                theorem_applicable: z.stability.theorem_applicable,
            })
            .collect(),
    }
}
