//! Characteristic polynomials of the linearization and zero-Hopf detection.
//!
//! Closed forms are cross-checked against a dense eigensolver. At the origin
//! the `λ` coefficient carries `-(b + c) e`, which is what the expansion of
//! `det(λI - J)` produces.

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jacobian, scaled_residual, State4, SystemParams};
use crate::Case;

/// Default matching tolerance for zero-Hopf certificates.
pub const ZERO_HOPF_TOL: f64 = 1e-8;

/// Coefficients of the monic quartic `λ⁴ + A λ³ + B λ² + C λ + D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticCoeffs {
    #[serde(rename = "A")]
    pub a3: f64,
    #[serde(rename = "B")]
    pub a2: f64,
    #[serde(rename = "C")]
    pub a1: f64,
    #[serde(rename = "D")]
    pub a0: f64,
}

impl QuarticCoeffs {
    pub fn as_array(&self) -> [f64; 4] {
        [self.a3, self.a2, self.a1, self.a0]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (((z + self.a3) * z + self.a2) * z + self.a1) * z + self.a0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharPoly {
    pub coeffs: QuarticCoeffs,
    /// False when `at` is not an equilibrium (scaled residual above 1e-9).
    pub at_equilibrium: bool,
}

/// Closed-form coefficients at the origin.
pub fn origin_char_poly(p: &SystemParams) -> QuarticCoeffs {
    let SystemParams { a, b, c, d, e } = *p;
    let cd = c * c + d * d;
    QuarticCoeffs {
        a3: a + b + 2.0 * c,
        a2: 2.0 * b * c + cd + a * (b + 2.0 * c - e),
        a1: b * cd + a * (2.0 * b * c + cd - (b + c) * e),
        a0: a * b * (cd - c * e),
    }
}

/// Closed form at `(0, 0, 0, Δ)` with `b = 0`: `λ²(λ² + (a + 2c)λ + c² + d² + a(c - d²/c))`.
pub fn line_char_poly(p: &SystemParams) -> Result<QuarticCoeffs> {
    if p.c == 0.0 {
        return Err(Error::ZeroC);
    }
    let SystemParams { a, c, d, .. } = *p;
    Ok(QuarticCoeffs {
        a3: a + 2.0 * c,
        a2: c * c + d * d + a * (c - d * d / c),
        a1: 0.0,
        a0: 0.0,
    })
}

/// Closed form at `p₊` (and `p₋`, by symmetry).
pub fn branch_char_poly(p: &SystemParams) -> Result<QuarticCoeffs> {
    if p.c == 0.0 {
        return Err(Error::ZeroC);
    }
    let SystemParams { a, b, c, d, e } = *p;
    let q = d * d / c;
    Ok(QuarticCoeffs {
        a3: a + b + 2.0 * c,
        a2: c * c + d * d + a * (b + c - q) + b * (c - q + e),
        a1: b * (c * e + a * (-c - 3.0 * q + 2.0 * e)),
        a0: -2.0 * a * b * (c * c + d * d - c * e),
    })
}

/// Expansion of `det(λI - M)` through sums of principal minors.
pub fn quartic_from_matrix(m: &Matrix4<f64>) -> QuarticCoeffs {
    let mut minors2 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            minors2 += m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
        }
    }
    let mut minors3 = 0.0;
    for skip in 0..4 {
        let idx: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
        let sub = Matrix3::from_fn(|r, c| m[(idx[r], idx[c])]);
        minors3 += sub.determinant();
    }
    QuarticCoeffs { a3: -m.trace(), a2: minors2, a1: -minors3, a0: m.determinant() }
}

pub fn char_poly(p: &SystemParams, at: &State4) -> CharPoly {
    let coeffs = if *at == State4::zeros() {
        origin_char_poly(p)
    } else {
        quartic_from_matrix(&jacobian(p, at))
    };
    CharPoly { coeffs, at_equilibrium: scaled_residual(p, at) <= 1e-9 }
}

/// Eigenvalues of a real 4×4 matrix, sorted by descending imaginary part then real part.
pub fn eigenvalues4(m: &Matrix4<f64>) -> [Complex64; 4] {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|x, y| y.im.total_cmp(&x.im).then(y.re.total_cmp(&x.re)));
    out
}

pub fn eigenvalues3(m: &Matrix3<f64>) -> [Complex64; 3] {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|x, y| x.re.total_cmp(&y.re).then(y.im.total_cmp(&x.im)));
    out
}

/// Parameters placing an equilibrium at a zero-Hopf point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroHopfParams {
    pub case: Case,
    pub params: SystemParams,
    pub omega: f64,
    /// The zero-Hopf equilibrium: the origin (case i) or `(0, 0, 0, Δ)`.
    pub equilibrium: State4,
}

/// `d` on the zero-Hopf surface: `3d² - c² = ω²`, negative root.
pub fn zero_hopf_d(c: f64, omega: f64) -> f64 {
    -((c * c + omega * omega) / 3.0).sqrt()
}

/// `e` placing the zero-Hopf point of cases i: `(4c² + ω²) / (3c)`.
pub fn zero_hopf_e_origin(c: f64, omega: f64) -> f64 {
    (4.0 * c * c + omega * omega) / (3.0 * c)
}

/// Builds zero-Hopf parameters for one of the three equilibrium families.
///
/// Case i puts the origin at a zero-Hopf point. Cases ii and iii share
/// `a = -2c, b = 0, 3d² - c² = ω² > 0` and the zero-Hopf point is the
/// line representative `(0, 0, 0, Δ)`, which is where `p±` collapse as
/// `b → 0`. For these two cases `e` is free; when omitted it is chosen so
/// that `Δ = 1`. Case ii takes `d` and reports `ω = √(3d² - c²)`; if `d` is
/// omitted it is derived from `ω`.
pub fn zero_hopf_params(
    case: Case,
    c: f64,
    omega: Option<f64>,
    d_free: Option<f64>,
    e_free: Option<f64>,
) -> Result<ZeroHopfParams> {
    crate::error::ensure_finite("c", c)?;
    if c == 0.0 {
        return Err(Error::ZeroC);
    }
    let check_omega = |w: f64| -> Result<f64> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Invalid(format!("omega must be positive, got {w}")));
        }
        Ok(w)
    };
    let (d, omega) = match case {
        Case::I | Case::III => {
            let w = check_omega(omega.ok_or_else(|| Error::Invalid("omega is required".into()))?)?;
            (zero_hopf_d(c, w), w)
        }
        Case::II => match d_free {
            Some(d) => {
                let disc = 3.0 * d * d - c * c;
                if !(disc > 0.0) {
                    return Err(Error::Degenerate(format!("3d² - c² = {disc} must be positive")));
                }
                let w = disc.sqrt();
                if let Some(given) = omega {
                    if (given - w).abs() > 1e-12 * w.max(1.0) {
                        return Err(Error::Invalid(format!(
                            "omega = {given} inconsistent with d = {d} (expected {w})"
                        )));
                    }
                }
                (d, w)
            }
            None => {
                let w = check_omega(omega.ok_or_else(|| Error::Invalid("case ii needs d or omega".into()))?)?;
                (zero_hopf_d(c, w), w)
            }
        },
    };
    let a = -2.0 * c;
    let (e, equilibrium) = match case {
        Case::I => (zero_hopf_e_origin(c, omega), State4::zeros()),
        Case::II | Case::III => {
            let e = e_free.unwrap_or((c * c + d * d) / c + 1.0);
            let params = SystemParams::new(a, 0.0, c, d, e);
            (e, State4::new(0.0, 0.0, 0.0, params.delta()?))
        }
    };
    Ok(ZeroHopfParams { case, params: SystemParams::new(a, 0.0, c, d, e), omega, equilibrium })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroHopfCertificate {
    pub omega: f64,
    /// Matched eigenvalues in the order `+iω, -iω, 0, 0`.
    pub eigenvalues: [Complex64; 4],
    /// Largest distance in the bottleneck matching against `{iω, -iω, 0, 0}`.
    pub residual: f64,
}

/// Minimises the largest pairwise distance over all assignments; returns the
/// residual and the permutation mapping target slots to eigenvalue indices.
fn bottleneck_match(eigs: &[Complex64; 4], targets: &[Complex64; 4]) -> (f64, [usize; 4]) {
    let mut best = (f64::INFINITY, [0, 1, 2, 3]);
    let mut perm = [0usize, 1, 2, 3];
    permute(&mut perm, 0, &mut |pm| {
        let cost = (0..4).map(|k| (eigs[pm[k]] - targets[k]).norm()).fold(0.0, f64::max);
        if cost < best.0 {
            best = (cost, *pm);
        }
    });
    best
}

fn permute(v: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Certificate iff the spectrum of the Jacobian at `at` lies within `tol` of
/// `{0, 0, ±iω}` for some `ω > 0`.
pub fn is_zero_hopf(p: &SystemParams, at: &State4, tol: f64) -> Option<ZeroHopfCertificate> {
    let eigs = eigenvalues4(&jacobian(p, at));
    let omega = eigs.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    if !(omega > tol) {
        return None;
    }
    let targets = [
        Complex64::new(0.0, omega),
        Complex64::new(0.0, -omega),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let (residual, perm) = bottleneck_match(&eigs, &targets);
    (residual <= tol).then(|| ZeroHopfCertificate {
        omega,
        eigenvalues: [eigs[perm[0]], eigs[perm[1]], eigs[perm[2]], eigs[perm[3]]],
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn from_roots(roots: &[Complex64; 4]) -> [f64; 4] {
        // expand prod (λ - r_i)
        let mut c = [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default()];
        for (n, r) in roots.iter().enumerate() {
            for k in (1..=n + 1).rev() {
                c[k] -= r * c[k - 1];
            }
        }
        [c[1].re, c[2].re, c[3].re, c[4].re]
    }

    #[test]
    fn a_and_d_vanish_on_zero_hopf_surface() {
        for (d, e) in [(0.3, 2.0), (-1.2, -0.7)] {
            let q = origin_char_poly(&SystemParams::new(-2.0, 0.0, 1.0, d, e));
            assert_eq!(q.a3, 0.0);
            assert_eq!(q.a0, 0.0);
        }
    }

    #[test]
    fn origin_coefficients_match_eigenvalue_expansion() {
        let p = SystemParams::new(1.0, 2.0, 3.0, 4.0, 5.0);
        let q = origin_char_poly(&p);
        let expected = from_roots(&eigenvalues4(&jacobian(&p, &State4::zeros())));
        for (got, want) in q.as_array().iter().zip(expected) {
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn unit_frequency_example() {
        let p = SystemParams::new(-2.0, 0.0, 1.0, -(2.0_f64 / 3.0).sqrt(), 5.0 / 3.0);
        let q = origin_char_poly(&p);
        assert_abs_diff_eq!(q.a3, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.a2, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.a1, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q.a0, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn branch_and_line_closed_forms_match_minors() {
        let p = SystemParams::new(0.7, 0.4, -1.3, 2.2, 2.0);
        let (plus, minus) = crate::model::branch_points(&p).unwrap().unwrap();
        let closed = branch_char_poly(&p).unwrap().as_array();
        for at in [plus, minus] {
            let m = quartic_from_matrix(&jacobian(&p, &at)).as_array();
            for k in 0..4 {
                assert!((closed[k] - m[k]).abs() < 1e-11 * m[k].abs().max(1.0));
            }
        }
        let l = SystemParams::new(0.7, 0.0, -1.3, 2.2, 2.0);
        let at = State4::new(0.0, 0.0, 0.0, l.delta().unwrap());
        let m = quartic_from_matrix(&jacobian(&l, &at)).as_array();
        let closed = line_char_poly(&l).unwrap().as_array();
        for k in 0..4 {
            assert!((closed[k] - m[k]).abs() < 1e-12 * m[k].abs().max(1.0));
        }
    }

    #[test]
    fn char_poly_flags_non_equilibria() {
        let p = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert!(char_poly(&p, &State4::zeros()).at_equilibrium);
        assert!(!char_poly(&p, &State4::new(1.0, 0.0, 0.0, 0.0)).at_equilibrium);
    }

    #[test]
    fn case_i_parameters() {
        let z = zero_hopf_params(Case::I, 1.0, Some(1.0), None, None).unwrap();
        assert_eq!(z.params.a, -2.0);
        assert_eq!(z.params.b, 0.0);
        assert_abs_diff_eq!(z.params.d, -0.816496580927726, epsilon = 1e-14);
        assert_abs_diff_eq!(z.params.e, 5.0 / 3.0, epsilon = 1e-15);
        let cert = is_zero_hopf(&z.params, &z.equilibrium, ZERO_HOPF_TOL).unwrap();
        assert_abs_diff_eq!(cert.omega, 1.0, epsilon = 1e-12);
        assert!(cert.eigenvalues[0].im > 0.0);
    }

    #[test]
    fn case_ii_reports_omega_from_d() {
        let z = zero_hopf_params(Case::II, 1.0, None, Some(2.0), None).unwrap();
        assert_eq!((z.params.a, z.params.b), (-2.0, 0.0));
        assert_abs_diff_eq!(z.omega, 11.0_f64.sqrt(), epsilon = 1e-15);
        let cert = is_zero_hopf(&z.params, &z.equilibrium, ZERO_HOPF_TOL).unwrap();
        assert_abs_diff_eq!(cert.omega, 11.0_f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn case_iii_negative_c() {
        let z = zero_hopf_params(Case::III, -1.0, Some(2.0), None, None).unwrap();
        assert_eq!((z.params.a, z.params.b), (2.0, 0.0));
        assert_abs_diff_eq!(z.params.d, -(5.0_f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(is_zero_hopf(&z.params, &z.equilibrium, ZERO_HOPF_TOL).is_some());
    }

    #[test]
    fn generic_params_are_not_zero_hopf() {
        let p = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert!(is_zero_hopf(&p, &State4::zeros(), ZERO_HOPF_TOL).is_none());
    }

    #[test]
    fn invalid_requests() {
        assert_eq!(zero_hopf_params(Case::I, 0.0, Some(1.0), None, None).unwrap_err(), Error::ZeroC);
        assert!(zero_hopf_params(Case::I, 1.0, Some(0.0), None, None).is_err());
        assert!(zero_hopf_params(Case::II, 1.0, None, Some(0.5), None).is_err());
        assert!(zero_hopf_params(Case::II, 1.0, Some(3.0), Some(2.0), None).is_err());
    }
}
