//! Unfoldings of the zero-Hopf families and their reduction to a 2π-periodic
//! field in `(r, z, w)` with the angle `θ` as independent variable.
//!
//! The pipeline is: perturb the parameters by `ε`, translate to the relevant
//! equilibrium, rescale the state by `ε`, change to real Jordan coordinates,
//! pass to cylindrical coordinates in the rotation plane and divide the rates
//! by `dθ/dt`. Two independent implementations of the first-order field are
//! provided: the closed forms ([`ClosedFormField`]) and a purely numerical
//! pipeline ([`NumericField`]) that extracts series coefficients from the
//! exact transformed field.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::SystemParams;
use crate::spectrum::{zero_hopf_d, zero_hopf_e_origin};
use crate::Case;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Which of the two nontrivial equilibria `p±` the case iii unfolding follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// A one-parameter unfolding of a zero-Hopf point.
///
/// Only the fields relevant to `case` are read:
/// * case i: `c, omega, a1, b1, d1, e1`;
/// * case ii: `c, d, e, a1, b1` with `omega = √(3d² - c²)`;
/// * case iii: `c, omega, e, a1, b1, d1, branch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnfoldingSpec {
    pub case: Case,
    pub c: f64,
    pub omega: f64,
    pub a1: f64,
    pub b1: f64,
    #[serde(default)]
    pub d1: f64,
    #[serde(default)]
    pub e1: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub e: f64,
    #[serde(default)]
    pub branch: Branch,
}

impl UnfoldingSpec {
    pub fn case_i(c: f64, omega: f64, a1: f64, b1: f64, d1: f64, e1: f64) -> Self {
        Self { case: Case::I, c, omega, a1, b1, d1, e1, d: zero_hopf_d(c, omega), e: 0.0, branch: Branch::Plus }
    }

    /// Case ii; `omega` is derived from `d` (NaN if `3d² ≤ c²`, rejected by [`validate`](Self::validate)).
    pub fn case_ii(c: f64, d: f64, e: f64, a1: f64, b1: f64) -> Self {
        let omega = (3.0 * d * d - c * c).sqrt();
        Self { case: Case::II, c, omega, a1, b1, d1: 0.0, e1: 0.0, d, e, branch: Branch::Plus }
    }

    pub fn case_iii(c: f64, omega: f64, e: f64, a1: f64, b1: f64, d1: f64, branch: Branch) -> Self {
        Self { case: Case::III, c, omega, a1, b1, d1, e1: 0.0, d: zero_hopf_d(c, omega), e, branch }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c", self.c),
            ("omega", self.omega),
            ("a1", self.a1),
            ("b1", self.b1),
            ("d1", self.d1),
            ("e1", self.e1),
            ("d", self.d),
            ("e", self.e),
        ] {
            ensure_finite(name, v)?;
        }
        if self.c == 0.0 {
            return Err(Error::ZeroC);
        }
        if !(self.omega > 0.0) {
            return Err(Error::Invalid(format!("omega must be positive, got {}", self.omega)));
        }
        if self.case == Case::II {
            let disc = 3.0 * self.d * self.d - self.c * self.c;
            if !(disc > 0.0) {
                return Err(Error::Degenerate(format!("3d² - c² = {disc} must be positive")));
            }
            let w = disc.sqrt();
            if (w - self.omega).abs() > 1e-14 * w.max(1.0) {
                return Err(Error::Invalid(format!("omega = {} disagrees with √(3d² - c²) = {w}", self.omega)));
            }
        }
        Ok(())
    }

    /// `√(c² + ω²)`.
    pub fn s(&self) -> f64 {
        self.c.hypot(self.omega)
    }

    /// Unperturbed `d` (the zero-Hopf value).
    pub fn d0(&self) -> f64 {
        match self.case {
            Case::II => self.d,
            Case::I | Case::III => zero_hopf_d(self.c, self.omega),
        }
    }

    /// Unperturbed `e`.
    pub fn e0(&self) -> f64 {
        match self.case {
            Case::I => zero_hopf_e_origin(self.c, self.omega),
            Case::II | Case::III => self.e,
        }
    }

    /// `Δ` of the unperturbed parameters.
    pub fn delta0(&self) -> f64 {
        let (c, d) = (self.c, self.d0());
        (self.e0() * c - c * c - d * d) / c
    }

    /// `(d₁, e₁)` as used by the perturbation: zero where the case keeps them fixed.
    fn d1_e1(&self) -> (f64, f64) {
        match self.case {
            Case::I => (self.d1, self.e1),
            Case::II => (0.0, 0.0),
            Case::III => (self.d1, 0.0),
        }
    }
}

/// Parameters of the unfolding at `eps`; `eps = 0` is the zero-Hopf point.
pub fn perturb(spec: &UnfoldingSpec, eps: f64) -> Result<SystemParams> {
    spec.validate()?;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::Invalid(format!("eps must be finite and nonnegative, got {eps}")));
    }
    let (d1, e1) = spec.d1_e1();
    Ok(SystemParams::new(
        -2.0 * spec.c + eps * spec.a1,
        eps * spec.b1,
        spec.c,
        spec.d0() + eps * d1,
        spec.e0() + eps * e1,
    ))
}

/// A linear change of coordinates `u = forward · U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearChange {
    pub forward: Matrix4<f64>,
    pub inverse: Matrix4<f64>,
}

/// The change to real Jordan coordinates `(X, Y, Z, W)` in which the
/// unperturbed linearization is `blockdiag([[0, -ω], [ω, 0]], 0, 0)`.
///
/// For case ii the third reduced coordinate is the original `w`.
pub fn jordan_change(spec: &UnfoldingSpec) -> Result<LinearChange> {
    spec.validate()?;
    let (c, om) = (spec.c, spec.omega);
    let s = spec.s();
    let m = match spec.case {
        Case::I => Matrix4::new(
            2.0 * SQRT_3 * c / (3.0 * s), 2.0 * SQRT_3 * c * c / (3.0 * om * s), -2.0 * c * c / (om * om), 0.0,
            SQRT_3 * c / (3.0 * s), SQRT_3 * (om * om + 2.0 * c * c) / (3.0 * om * s), -2.0 * c * c / (om * om), 0.0,
            1.0 / 3.0, -2.0 * c / (3.0 * om), 2.0 * SQRT_3 * c * s / (3.0 * om * om), 0.0,
            0.0, 0.0, 0.0, 1.0,
        ),
        Case::II => {
            let d = spec.d;
            let rr = om;
            let q = c * c - 3.0 * d * d;
            Matrix4::new(
                2.0 / 3.0, -2.0 * c * rr / (3.0 * q), 0.0, 2.0 * c * c / q,
                1.0 / 3.0, -rr * (c * c + 3.0 * d * d) / (3.0 * c * q), 0.0, 2.0 * c * c / q,
                -d / (3.0 * c), -2.0 * rr * d / (3.0 * q), 0.0, 2.0 * c * d / q,
                0.0, 0.0, 1.0, 0.0,
            )
        }
        Case::III => Matrix4::new(
            2.0 * c / SQRT_3, 2.0 * c * c / (SQRT_3 * om), -2.0 * c * c / (om * om), 0.0,
            c / SQRT_3, (om * om + 2.0 * c * c) / (SQRT_3 * om), -2.0 * c * c / (om * om), 0.0,
            s / 3.0, -2.0 * c * s / (3.0 * om), 2.0 * SQRT_3 * c * s / (3.0 * om * om), 0.0,
            0.0, 0.0, 0.0, 1.0,
        ),
    };
    let scale = m.amax().max(1.0).powi(4);
    let det = m.determinant();
    if !(det.abs() >= 1e-12 * scale) {
        return Err(Error::Degenerate(format!("Jordan change is singular (det = {det:e})")));
    }
    let inverse = m
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("Jordan change is not invertible".into()))?;
    Ok(LinearChange { forward: m, inverse })
}

/// Which implementation produced a reduced field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    NumericPipeline,
}

/// A 2π-periodic first-order field `(dr/dθ, dz/dθ, dw/dθ)`.
pub trait ReducedField: Sync {
    fn eval(&self, theta: f64, state: [f64; 3]) -> Result<[f64; 3]>;
    fn provenance(&self) -> Provenance;
}

/// Value of `numerator(r) / (r · denom)`, with the limit at `r = 0` taken from
/// `numerator'(0)` when `numerator(0)` vanishes. Numerators are polynomials of
/// degree at most four in `r`, for which the five-point stencil with unit step
/// is exact.
fn over_r(numerator: impl Fn(f64) -> f64, r: f64, denom: f64) -> Result<f64> {
    if r != 0.0 {
        return Ok(numerator(r) / (r * denom));
    }
    let n0 = numerator(0.0);
    let (p1, m1, p2, m2) = (numerator(1.0), numerator(-1.0), numerator(2.0), numerator(-2.0));
    let scale = [n0, p1, m1].iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if n0.abs() > 1e-12 * scale {
        return Err(Error::AxisSingular { numerator: n0 });
    }
    let slope = (8.0 * (p1 - m1) - (p2 - m2)) / 12.0;
    Ok(slope / denom)
}

/// The first-order fields in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormField {
    pub spec: UnfoldingSpec,
}

pub fn first_order_field_closed(spec: &UnfoldingSpec) -> Result<ClosedFormField> {
    spec.validate()?;
    Ok(ClosedFormField { spec: *spec })
}

impl ClosedFormField {
    fn case_i(&self, t: f64, r: f64, z: f64, w: f64) -> [f64; 3] {
        let UnfoldingSpec { c, omega: om, a1, b1, d1, e1, .. } = self.spec;
        let s = self.spec.s();
        let (ct, st) = (t.cos(), t.sin());
        let (om2, om3) = (om * om, om * om * om);
        let c2 = c * c;
        let f1 = (c * r * om3 * (SQRT_3 * c * d1 - a1 * s) * ct * ct
            + om * s * ct * (-6.0 * c * c2 * d1 * z + r * om * (6.0 * c2 * (e1 - w) + a1 * om2) * st)
            + c * st
                * (6.0 * c * z * (-(2.0 * c2 + om2) * d1 * s - SQRT_3 * c * (e1 - w) * (c2 + om2))
                    + r * om
                        * (2.0 * c * om * (SQRT_3 * c * d1 + a1 * s) * ct
                            + ((4.0 * c * c2 + 3.0 * c * om2) * SQRT_3 * d1
                                + (6.0 * c2 * (e1 - w) - 2.0 * a1 * om2) * s)
                                * st)))
            / (3.0 * c * om2 * om2 * s);
        let f2 = (-12.0 * c * c2 * z * (2.0 * SQRT_3 * (c2 + om2) * d1 + 3.0 * c * (e1 - w) * s)
            + SQRT_3 * c * r * om2 * (4.0 * c2 * (a1 + 3.0 * e1 - 3.0 * w) + a1 * om2) * ct
            + r * om
                * (6.0 * (4.0 * c * c2 + c * om2) * d1 * s
                    - SQRT_3 * (12.0 * c2 * c2 * (w - e1) + 4.0 * a1 * c2 * om2 + a1 * om2 * om2))
                * st)
            / (18.0 * c2 * om3 * s);
        let f3 = ((c2 + om2) * (12.0 * c2 * c2 * z * z + 2.0 * c2 * r * r * om2 - 3.0 * b1 * w * om2 * om2)
            + c * r
                * om
                * (-2.0 * c * c2 * r * om * (2.0 * t).cos()
                    - 2.0 * SQRT_3 * c * z * s * (3.0 * c * om * ct + (4.0 * c2 + om2) * st)
                    + 3.0 * c2 * r * om2 * (2.0 * t).sin()
                    + r * om2 * om2 * (2.0 * t).sin()))
            / (3.0 * om3 * om2 * (c2 + om2));
        [f1, f2, f3]
    }

    fn case_ii(&self, t: f64, r: f64, z: f64, w: f64) -> Result<[f64; 3]> {
        let UnfoldingSpec { c, d, e, a1, b1, .. } = self.spec;
        let rr = self.spec.omega;
        let (ct, st) = (t.cos(), t.sin());
        let (c2, d2) = (c * c, d * d);
        let q = c2 - 3.0 * d2;
        let big_e = c2 + d2 - c * e;
        let f1 = -(a1 * c * rr.powi(3) * r * ct * ct
            + q * r * (a1 * (c2 + 3.0 * d2) - 6.0 * c2 * z) * ct * st
            + 2.0 * c * st * (-9.0 * c * c2 * w * z + rr * r * (-a1 * c2 + 3.0 * a1 * d2 + 3.0 * c2 * z) * st))
            / (3.0 * c * q * q);
        let n2 = |r: f64| {
            3.0 * c2 * r * (-2.0 * d2 * q * r * r + 12.0 * c2 * c2 * w * w - 3.0 * b1 * q * q * z)
                + 18.0 * c2 * c2 * w * (q * r * r - 3.0 * b1 * big_e * z) * ct
                + 6.0 * b1 * c2 * q * big_e * r * (a1 - 3.0 * z) * ct * ct
                + 2.0 * c2 * c2 * q * r.powi(3) * (2.0 * t).cos()
                + c * rr
                    * r
                    * (-q * (3.0 * a1 * b1 * big_e + 2.0 * (2.0 * c2 + 3.0 * d2) * r * r)
                        + 18.0 * b1 * c2 * big_e * z)
                    * ct
                    * st
                + 3.0 * r * st * (-6.0 * c * c2 * (c2 + d2) * rr * r * w + a1 * b1 * q * q * big_e * st)
        };
        let cq = c * c2 - 3.0 * c * d2;
        let f2 = over_r(n2, r, 9.0 * rr * cq * cq)?;
        let f3 = -(rr * r * (-a1 * q * (c2 + d2) + 4.0 * c2 * c2 * z) * st - 12.0 * c2 * c2 * c * w * z
            + c * q * r * (a1 * (c2 + d2) - 4.0 * c2 * z) * ct)
            / (6.0 * c * c2 * rr.powi(3));
        Ok([f1, f2, f3])
    }

    fn case_iii(&self, t: f64, r: f64, z: f64, w: f64) -> Result<[f64; 3]> {
        let UnfoldingSpec { c, omega: om, e, a1, b1, d1, .. } = self.spec;
        let s = self.spec.s();
        let (ct, st) = (t.cos(), t.sin());
        let (c2, om2) = (c * c, om * om);
        let x3 = 4.0 * c2 - 3.0 * c * e + om2;
        let n1 = |r: f64| {
            -a1 * c * r * r * om * om2 * s * ct * ct
                + ct * (-6.0 * c * c2 * d1 * r * z * om
                    + (-2.0 * SQRT_3 * c * c2 * d1 * r * r * om2
                        + om2 * s * (3.0 * b1 * w * w + a1 * r * r * om2)
                        + 2.0 * c2 * s * (6.0 * b1 * w * w + r * r * (a1 - 3.0 * w) * om2)
                        - c * (4.0 * SQRT_3 * d1 * r * r * om2 * om2 + 9.0 * b1 * e * w * w * s))
                        * st)
                + c * r
                    * (SQRT_3 * c * d1 * r * om * om2 * (2.0 * t).cos()
                        + 6.0 * c * z * (d1 * om2 + SQRT_3 * c * w * s) * st
                        - 2.0 * r * om * s * (3.0 * c2 * w + a1 * om2) * st * st)
        };
        let n2 = |r: f64| {
            c * (6.0 * SQRT_3 * b1 * w * w * x3
                + r * r * om2 * (-24.0 * c * d1 * s + SQRT_3 * (4.0 * c2 * (a1 - 3.0 * w) + a1 * om2)))
                * ct
                + r * (36.0 * c2 * c2 * w * z
                    + r * om
                        * (6.0 * c * d1 * om2 * s
                            - SQRT_3 * (12.0 * c2 * c2 * w + 4.0 * a1 * c2 * om2 + a1 * om2 * om2))
                        * st)
        };
        let n3 = |r: f64| {
            -SQRT_3
                * w
                * b1
                * x3
                * (-12.0 * z * c2 + 4.0 * SQRT_3 * c2 * om * r * st + 3.0 * SQRT_3 * c * om2 * r * ct
                    + SQRT_3 * om * om2 * r * st)
                * ct
                + c * r
                    * (-9.0 * w * b1 * om2 * om2
                        + 2.0
                            * c
                            * (-3.0 * z * c + SQRT_3 * c * om * r * st + SQRT_3 * om2 * r * ct)
                            * (-6.0 * z * c2 + SQRT_3 * c * om2 * r * ct + SQRT_3 * om * r * (2.0 * c2 + om2) * st))
        };
        Ok([
            over_r(n1, r, 3.0 * c * om2 * om2 * s)?,
            over_r(n2, r, 18.0 * c2 * om * om2)?,
            over_r(n3, r, 9.0 * c * om * om2 * om2)?,
        ])
    }
}

impl ReducedField for ClosedFormField {
    fn eval(&self, theta: f64, state: [f64; 3]) -> Result<[f64; 3]> {
        let [r, z, w] = state;
        match self.spec.case {
            Case::I => Ok(self.case_i(theta, r, z, w)),
            Case::II => self.case_ii(theta, r, z, w),
            Case::III => self.case_iii(theta, r, z, w),
        }
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedForm
    }
}

/// Series coefficients of the reduced field in the natural small variable
/// (`ε` for cases i and ii, `√ε` for case iii).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldExpansion {
    /// Part surviving at `ε = 0`.
    pub zeroth: [f64; 3],
    /// Coefficient of `√ε`; identically zero outside case iii.
    pub half: [f64; 3],
    /// Coefficient of `ε`.
    pub first: [f64; 3],
    /// Agreement between two contour resolutions, plus imaginary leakage.
    pub residual: f64,
}

/// Settings for coefficient extraction on a circle in the complex series variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Points on the contour; halved for the residual estimate.
    pub nodes: usize,
    /// Radii tried in order until the residual drops below `target`.
    pub radii: [f64; 4],
    pub target: f64,
    /// Residual above which extraction fails.
    pub max_residual: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { nodes: 32, radii: [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0, 1.0 / 1024.0], target: 1e-11, max_residual: 1e-6 }
    }
}

type C4 = Vector4<Complex64>;

fn field_c(p: &[Complex64; 5], s: &C4) -> C4 {
    let [a, b, c, d, e] = *p;
    C4::new(a * (s.y - s.x), -c * s.y - d * s.z + (e - s.w) * s.x, d * s.y - c * s.z, -b * s.w + s.x * s.y)
}

/// Part of the field that is bilinear in the state (parameter independent).
fn quadratic_c(s: &C4) -> C4 {
    C4::new(Complex64::default(), -s.w * s.x, Complex64::default(), s.x * s.y)
}

fn jacobian_times_c(p: &[Complex64; 5], at: &C4, v: &C4) -> C4 {
    let [a, b, c, d, e] = *p;
    C4::new(
        a * (v.y - v.x),
        (e - at.w) * v.x - c * v.y - d * v.z - at.x * v.w,
        d * v.y - c * v.z,
        at.y * v.x + at.x * v.y - b * v.w,
    )
}

/// The first-order field computed from the transformed system itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericField {
    pub spec: UnfoldingSpec,
    pub change: LinearChange,
    pub config: ExtractionConfig,
}

pub fn first_order_field_numeric(spec: &UnfoldingSpec) -> Result<NumericField> {
    let change = jordan_change(spec)?;
    if spec.case == Case::III && !(spec.b1 * spec.delta0() >= 0.0) {
        return Err(Error::Degenerate(format!(
            "case iii needs b1·Δ ≥ 0 for the branch p± to exist (b1·Δ = {})",
            spec.b1 * spec.delta0()
        )));
    }
    Ok(NumericField { spec: *spec, change, config: ExtractionConfig::default() })
}

impl NumericField {
    /// Parameters and translation point at series variable `s`.
    fn params_and_equilibrium(&self, s: Complex64) -> ([Complex64; 5], C4, Complex64) {
        let sp = &self.spec;
        let eps = if sp.case == Case::III { s * s } else { s };
        let (d1, e1) = sp.d1_e1();
        let c = Complex64::from(sp.c);
        let p = [
            -2.0 * c + eps * sp.a1,
            eps * sp.b1,
            c,
            sp.d0() + eps * d1,
            sp.e0() + eps * e1,
        ];
        let zero = Complex64::default();
        let eq = match sp.case {
            Case::I => C4::zeros(),
            Case::II | Case::III => {
                let delta = (p[4] * c - c * c - p[3] * p[3]) / c;
                if sp.case == Case::II {
                    C4::new(zero, zero, zero, delta)
                } else {
                    // b = s²·b₁, so √(bΔ) = s·√(b₁Δ) on the branch through s > 0
                    let q = sp.branch.sign() * s * (sp.b1 * delta).sqrt();
                    C4::new(q, q, p[3] * q / c, delta)
                }
            }
        };
        (p, eq, eps)
    }

    /// Full reduced field and `dθ/dt` at complex series variable `s`.
    fn reduced(&self, s: Complex64, theta: f64, state: [f64; 3]) -> ([Complex64; 3], Complex64) {
        let [r, z, w] = state;
        let (p, eq, eps) = self.params_and_equilibrium(s);
        let (ct, st) = (theta.cos(), theta.sin());
        let big_u = Vector4::new(r * ct, r * st, z, w);
        let v: C4 = (self.change.forward * big_u).map(Complex64::from);
        // f(eq + εv)/ε expanded exactly for a quadratic field
        let g = field_c(&p, &eq) / eps + jacobian_times_c(&p, &eq, &v) + quadratic_c(&v) * eps;
        let ud = self.change.inverse.map(Complex64::from) * g;
        let rdot = ud[0] * ct + ud[1] * st;
        let thdot = (ud[1] * ct - ud[0] * st) / r;
        ([rdot / thdot, ud[2] / thdot, ud[3] / thdot], thdot)
    }

    /// `dθ/dt` of the rescaled system at a real `eps > 0`.
    pub fn rotation_rate(&self, eps: f64, theta: f64, state: [f64; 3]) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
        }
        if state[0] == 0.0 {
            return Err(Error::ReparametrizationSingular { rate: f64::INFINITY });
        }
        let s = if self.spec.case == Case::III { eps.sqrt() } else { eps };
        Ok(self.reduced(Complex64::from(s), theta, state).1.re)
    }

    /// Taylor coefficients of the reduced field by the trapezoid rule on a
    /// circle of radius `rho`, at resolutions `n` and `n/2`.
    fn coefficients(&self, rho: f64, theta: f64, state: [f64; 3]) -> Result<([[f64; 3]; 3], f64)> {
        let n = self.config.nodes;
        let mut full = [[Complex64::default(); 3]; 3];
        let mut half = [[Complex64::default(); 3]; 3];
        for k in 0..n {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            let (f, thdot) = self.reduced(phase * rho, theta, state);
            if thdot.norm() < 1e-6 {
                return Err(Error::ReparametrizationSingular { rate: thdot.norm() });
            }
            let mut rot = Complex64::from(1.0);
            for order in 0..3 {
                for i in 0..3 {
                    let term = f[i] * rot.conj();
                    full[order][i] += term;
                    if k % 2 == 0 {
                        half[order][i] += term;
                    }
                }
                rot *= phase;
            }
        }
        let mut out = [[0.0; 3]; 3];
        let mut residual: f64 = 0.0;
        for order in 0..3 {
            let scale = rho.powi(order as i32);
            for i in 0..3 {
                let a = full[order][i] / (n as f64 * scale);
                let b = half[order][i] / ((n / 2) as f64 * scale);
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::Extraction { residual: f64::INFINITY });
                }
                out[order][i] = a.re;
                residual = residual.max((a - b).norm()).max(a.im.abs());
            }
        }
        Ok((out, residual))
    }

    /// Series expansion of the reduced field at `(θ, r, z, w)`, `r ≠ 0`.
    pub fn expansion(&self, theta: f64, state: [f64; 3]) -> Result<FieldExpansion> {
        if state[0] == 0.0 {
            return Err(Error::ReparametrizationSingular { rate: f64::INFINITY });
        }
        let mut best: Option<([[f64; 3]; 3], f64)> = None;
        let mut last_err = None;
        for &rho in &self.config.radii {
            match self.coefficients(rho, theta, state) {
                Ok((coef, res)) => {
                    let better = best.as_ref().is_none_or(|(_, b)| res < *b);
                    if better {
                        best = Some((coef, res));
                    }
                    if res <= self.config.target {
                        break;
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let Some((coef, residual)) = best else {
            return Err(last_err.unwrap_or(Error::Extraction { residual: f64::INFINITY }));
        };
        if residual > self.config.max_residual {
            return Err(Error::Extraction { residual });
        }
        Ok(match self.spec.case {
            Case::I | Case::II => FieldExpansion { zeroth: coef[0], half: [0.0; 3], first: coef[1], residual },
            Case::III => FieldExpansion { zeroth: coef[0], half: coef[1], first: coef[2], residual },
        })
    }
}

impl ReducedField for NumericField {
    fn eval(&self, theta: f64, state: [f64; 3]) -> Result<[f64; 3]> {
        Ok(self.expansion(theta, state)?.first)
    }

    fn provenance(&self) -> Provenance {
        Provenance::NumericPipeline
    }
}

/// Maps reduced coordinates `(r, z, w)` at angle `θ` back to the state of the
/// full system at `eps`.
pub fn reduced_to_full(
    spec: &UnfoldingSpec,
    change: &LinearChange,
    eps: f64,
    theta: f64,
    reduced: [f64; 3],
) -> Result<Vector4<f64>> {
    let eq = translation_point(spec, eps)?;
    let [r, z, w] = reduced;
    let u = change.forward * Vector4::new(r * theta.cos(), r * theta.sin(), z, w);
    Ok(eq + u * eps)
}

/// Inverse of [`reduced_to_full`]: returns `(θ, r, z, w)` with `r ≥ 0`.
pub fn full_to_reduced(spec: &UnfoldingSpec, change: &LinearChange, eps: f64, state: &Vector4<f64>) -> Result<(f64, [f64; 3])> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    let eq = translation_point(spec, eps)?;
    let big_u = change.inverse * ((state - eq) / eps);
    let r = big_u[0].hypot(big_u[1]);
    Ok((big_u[1].atan2(big_u[0]), [r, big_u[2], big_u[3]]))
}

/// The point the unfolding is translated to before rescaling.
pub fn translation_point(spec: &UnfoldingSpec, eps: f64) -> Result<Vector4<f64>> {
    let p = perturb(spec, eps)?;
    Ok(match spec.case {
        Case::I => Vector4::zeros(),
        Case::II => Vector4::new(0.0, 0.0, 0.0, p.delta()?),
        Case::III => {
            let delta = p.delta()?;
            let bd = p.b * delta;
            if bd < 0.0 {
                return Err(Error::Degenerate(format!("b·Δ = {bd} < 0: the branch p± does not exist")));
            }
            let q = spec.branch.sign() * bd.sqrt();
            Vector4::new(q, q, p.d * q / p.c, delta)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{jacobian, vector_field, State4};
    use approx::assert_abs_diff_eq;

    fn ex_i() -> UnfoldingSpec {
        UnfoldingSpec::case_i(1.0, 1.0, 1.0, 1.0, 0.0, 1.0)
    }

    #[test]
    fn complex_field_matches_real_model() {
        let p = SystemParams::new(0.3, -1.2, 0.7, 2.0, -0.4);
        let pc = [p.a, p.b, p.c, p.d, p.e].map(Complex64::from);
        let s = State4::new(0.3, -0.8, 1.1, 0.25);
        let v = State4::new(-0.5, 0.2, 0.9, -1.3);
        let f = field_c(&pc, &s.map(Complex64::from));
        let jv = jacobian_times_c(&pc, &s.map(Complex64::from), &v.map(Complex64::from));
        let fr = vector_field(&p, &s);
        let jr = jacobian(&p, &s) * v;
        for i in 0..4 {
            assert_abs_diff_eq!(f[i].re, fr[i], epsilon = 1e-15);
            assert_abs_diff_eq!(jv[i].re, jr[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn perturb_examples() {
        let p0 = perturb(&ex_i(), 0.0).unwrap();
        assert_abs_diff_eq!(p0.a, -2.0);
        assert_abs_diff_eq!(p0.d, -0.816_496_580_927_726, epsilon = 1e-14);
        assert_abs_diff_eq!(p0.e, 5.0 / 3.0, epsilon = 1e-15);
        let p = perturb(&ex_i(), 0.01).unwrap();
        assert_abs_diff_eq!(p.a, -1.99, epsilon = 1e-15);
        assert_abs_diff_eq!(p.b, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(p.e, 1.676_666_666_666_666_7, epsilon = 1e-14);
        let iii = UnfoldingSpec::case_iii(1.0, 1.0, 3.0, 1.0, 1.0, 0.0, Branch::Plus);
        let p = perturb(&iii, 0.01).unwrap();
        assert_abs_diff_eq!(p.a, -1.99, epsilon = 1e-15);
        assert_abs_diff_eq!(p.d, -0.816_496_580_927_726, epsilon = 1e-14);
        assert_eq!(p.e, 3.0);
        assert!(perturb(&ex_i(), -1e-3).is_err());
    }

    #[test]
    fn spec_validation() {
        assert_eq!(UnfoldingSpec::case_i(0.0, 1.0, 1.0, 1.0, 0.0, 1.0).validate().unwrap_err(), Error::ZeroC);
        assert!(UnfoldingSpec::case_i(1.0, -1.0, 1.0, 1.0, 0.0, 1.0).validate().is_err());
        assert!(UnfoldingSpec::case_ii(1.0, 0.5, 6.0, 1.0, 1.0).validate().is_err());
        let mut bad = UnfoldingSpec::case_ii(1.0, 2.0, 6.0, 1.0, 1.0);
        bad.omega += 1e-9;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn axis_singular_and_removable_limits() {
        let ii = first_order_field_closed(&UnfoldingSpec::case_ii(1.0, 2.0, 6.0, 1.0, 1.0)).unwrap();
        assert!(matches!(ii.eval(0.0, [0.0, 0.5, 0.5]), Err(Error::AxisSingular { .. })));
        // with w = 0 the 1/r term vanishes and the limit is the r → 0 value
        let at0 = ii.eval(0.4, [0.0, 0.5, 0.0]).unwrap();
        let near = ii.eval(0.4, [1e-7, 0.5, 0.0]).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(at0[i], near[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn case_ii_zeroth_order_drift() {
        // the translated point is not an equilibrium of the perturbed system:
        // ẇ = -εb₁Δ survives the rescaling as a constant drift of z
        let spec = UnfoldingSpec::case_ii(1.0, 2.0, 6.0, 1.0, 1.0);
        let num = first_order_field_numeric(&spec).unwrap();
        let ex = num.expansion(0.3, [1.0, 0.2, 0.1]).unwrap();
        assert_abs_diff_eq!(ex.zeroth[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.zeroth[1], -spec.b1 * spec.delta0() / spec.omega, epsilon = 1e-12);
        assert_abs_diff_eq!(ex.zeroth[2], 0.0, epsilon = 1e-12);
    }
}
