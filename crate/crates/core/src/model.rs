//! The four-dimensional Lorenz-Haken system
//!
//! ```text
//! x' = a (y - x)
//! y' = -c y - d z + (e - w) x
//! z' = d y - c z
//! w' = -b w + x y
//! ```
//!
//! together with its Jacobian, the reflection symmetry
//! `(x, y, z, w) -> (-x, -y, -z, w)` and the closed-form equilibria.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// State vector `(x, y, z, w)`; nalgebra exposes the components as `.x .y .z .w`.
pub type State4 = Vector4<f64>;

/// Residual bound for points reported by [`equilibria`], before scaling.
pub const EQUILIBRIUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl SystemParams {
    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64) -> Self {
        Self { a, b, c, d, e }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e)] {
            ensure_finite(name, v)?;
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        [self.a, self.b, self.c, self.d, self.e]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `Δ = (e c - c² - d²) / c`.
    pub fn delta(&self) -> Result<f64> {
        if self.c == 0.0 {
            return Err(Error::ZeroC);
        }
        Ok((self.e * self.c - self.c * self.c - self.d * self.d) / self.c)
    }
}

/// The reflection `σ = diag(-1, -1, -1, 1)`.
pub fn sigma() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, -1.0, -1.0, 1.0))
}

pub fn vector_field(p: &SystemParams, s: &State4) -> State4 {
    let (x, y, z, w) = (s.x, s.y, s.z, s.w);
    Vector4::new(
        p.a * (y - x),
        -p.c * y - p.d * z + (p.e - w) * x,
        p.d * y - p.c * z,
        -p.b * w + x * y,
    )
}

pub fn jacobian(p: &SystemParams, s: &State4) -> Matrix4<f64> {
    let (x, y, w) = (s.x, s.y, s.w);
    Matrix4::new(
        -p.a, p.a, 0.0, 0.0, //
        p.e - w, -p.c, -p.d, -x, //
        0.0, p.d, -p.c, 0.0, //
        y, x, 0.0, -p.b,
    )
}

/// Max-norm of the field at `s`, divided by `max(1, ‖p‖∞)`.
pub fn scaled_residual(p: &SystemParams, s: &State4) -> f64 {
    vector_field(p, s).amax() / p.max_abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumTag {
    Origin,
    PlusBranch,
    MinusBranch,
    /// Representative `(0, 0, 0, Δ)` of the line of equilibria present when `b = 0`.
    LineRepresentative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub tag: EquilibriumTag,
    pub state: State4,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    /// Isolated points only.
    Isolated,
    /// `b = 0`: the whole `w`-axis consists of equilibria.
    Line,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub delta: f64,
    pub kind: EquilibriumKind,
    pub points: Vec<Equilibrium>,
}

impl EquilibriumSet {
    pub fn get(&self, tag: EquilibriumTag) -> Option<&Equilibrium> {
        self.points.iter().find(|q| q.tag == tag)
    }
}

/// The nontrivial pair `p±`, or `None` when `bΔ ≤ 0`.
///
/// The `z`-component is `d·√(bΔ)/c`: the third equation forces `z = d y / c`.
pub fn branch_points(p: &SystemParams) -> Result<Option<(State4, State4)>> {
    let delta = p.delta()?;
    let bd = p.b * delta;
    if !(bd > 0.0) {
        return Ok(None);
    }
    let s = bd.sqrt();
    let plus = Vector4::new(s, s, p.d * s / p.c, delta);
    Ok(Some((plus, sigma() * plus)))
}

/// Equilibria of the system. The origin is always listed since it annihilates
/// the field for every parameter value.
pub fn equilibria(p: &SystemParams) -> Result<EquilibriumSet> {
    p.validate()?;
    let delta = p.delta()?;
    let mut points = Vec::with_capacity(3);
    let mut push = |tag, state: State4| {
        points.push(Equilibrium { tag, state, residual: scaled_residual(p, &state) });
    };
    push(EquilibriumTag::Origin, State4::zeros());

    let kind = if p.b == 0.0 {
        if delta != 0.0 {
            push(EquilibriumTag::LineRepresentative, Vector4::new(0.0, 0.0, 0.0, delta));
        }
        EquilibriumKind::Line
    } else {
        if let Some((plus, minus)) = branch_points(p)? {
            push(EquilibriumTag::PlusBranch, plus);
            push(EquilibriumTag::MinusBranch, minus);
        }
        EquilibriumKind::Isolated
    };
    Ok(EquilibriumSet { delta, kind, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn field_examples() {
        let p = SystemParams::new(2.0, 1.0, 1.0, 1.0, 3.0);
        assert_eq!(vector_field(&p, &State4::zeros()), State4::zeros());
        assert_eq!(vector_field(&p, &Vector4::new(1.0, 1.0, 1.0, 1.0)), State4::zeros());
        let q = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0);
        assert_eq!(vector_field(&q, &Vector4::new(1.0, 0.0, 0.0, 0.0)), Vector4::new(-1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn jacobian_at_origin() {
        let p = SystemParams::new(1.5, -0.3, 0.7, 2.0, 4.0);
        let j = jacobian(&p, &State4::zeros());
        let expected = Matrix4::new(
            -1.5, 1.5, 0.0, 0.0, 4.0, -0.7, -2.0, 0.0, 0.0, 2.0, -0.7, 0.0, 0.0, 0.0, 0.0, 0.3,
        );
        assert_eq!(j, expected);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let p = SystemParams::new(1.0, 1.0, 1.0, 1.0, 1.0);
        let s = Vector4::new(0.3, -0.2, 0.5, 0.1);
        let j = jacobian(&p, &s);
        let h = 1e-6;
        for k in 0..4 {
            let mut sp = s;
            let mut sm = s;
            sp[k] += h;
            sm[k] -= h;
            let col = (vector_field(&p, &sp) - vector_field(&p, &sm)) / (2.0 * h);
            for i in 0..4 {
                assert_abs_diff_eq!(col[i], j[(i, k)], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn three_equilibria_when_delta_positive() {
        let p = SystemParams::new(2.0, 1.0, 1.0, 1.0, 3.0);
        let set = equilibria(&p).unwrap();
        assert_eq!(set.delta, 1.0);
        assert_eq!(set.points.len(), 3);
        assert_eq!(set.get(EquilibriumTag::PlusBranch).unwrap().state, Vector4::new(1.0, 1.0, 1.0, 1.0));
        assert_eq!(set.get(EquilibriumTag::MinusBranch).unwrap().state, Vector4::new(-1.0, -1.0, -1.0, 1.0));
        assert!(set.points.iter().all(|q| q.residual <= EQUILIBRIUM_TOL));
    }

    #[test]
    fn origin_only_when_delta_negative() {
        let p = SystemParams::new(2.0, 1.0, 1.0, 1.0, 1.0);
        let set = equilibria(&p).unwrap();
        assert_eq!(set.delta, -1.0);
        assert_eq!(set.points.len(), 1);
        assert_eq!(set.points[0].tag, EquilibriumTag::Origin);
    }

    #[test]
    fn negative_b_delta_gives_no_branch() {
        let p = SystemParams::new(2.0, -1.0, 1.0, 1.0, 3.0);
        assert_eq!(equilibria(&p).unwrap().points.len(), 1);
    }

    #[test]
    fn line_of_equilibria_when_b_zero() {
        let p = SystemParams::new(2.0, 0.0, 1.0, 1.0, 3.0);
        let set = equilibria(&p).unwrap();
        assert_eq!(set.kind, EquilibriumKind::Line);
        let rep = set.get(EquilibriumTag::LineRepresentative).unwrap();
        assert_eq!(rep.state, Vector4::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(rep.residual, 0.0);
    }

    #[test]
    fn rejects_zero_c() {
        let p = SystemParams::new(2.0, 1.0, 0.0, 1.0, 3.0);
        assert_eq!(equilibria(&p).unwrap_err(), Error::ZeroC);
    }

    #[test]
    fn general_d_branch_points_annihilate_field() {
        let p = SystemParams::new(0.7, 0.4, -1.3, 2.2, 2.0);
        let set = equilibria(&p).unwrap();
        assert_eq!(set.points.len(), 3);
        for q in &set.points {
            assert!(q.residual <= EQUILIBRIUM_TOL, "{:?}", q);
        }
    }

    // Printed p± with z = √(bΔ)/c is off the equilibrium set whenever d ≠ 1.
    #[test]
    fn literal_branch_point_is_not_equilibrium() {
        let p = SystemParams::new(0.7, 0.4, -1.3, 2.2, 2.0);
        let delta = p.delta().unwrap();
        let s = (p.b * delta).sqrt();
        let printed = Vector4::new(s, s, s / p.c, delta);
        assert!(scaled_residual(&p, &printed) > 1e-3);
    }
}
