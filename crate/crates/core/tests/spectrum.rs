use num_complex::Complex64;
use proptest::prelude::*;
use zerohopf_core::model::{equilibria, jacobian, EquilibriumTag, State4};
use zerohopf_core::spectrum::{
    branch_char_poly, eigenvalues4, is_zero_hopf, origin_char_poly, zero_hopf_params, ZERO_HOPF_TOL,
};
use zerohopf_core::{Case, SystemParams};

/// Coefficients of `∏(λ - rᵢ)` below the leading one.
fn expand_roots(roots: &[Complex64; 4]) -> [f64; 4] {
    let mut c = [Complex64::from(1.0), Complex64::default(), Complex64::default(), Complex64::default(), Complex64::default()];
    for (n, r) in roots.iter().enumerate() {
        for k in (1..=n + 1).rev() {
            c[k] -= r * c[k - 1];
        }
    }
    [c[1].re, c[2].re, c[3].re, c[4].re]
}

#[test]
fn zero_hopf_grid_is_certified() {
    for case in Case::ALL {
        for c in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            for omega in [0.5, 1.0, 2.0, 3.0] {
                let zh = zero_hopf_params(case, c, Some(omega), None, None).unwrap();
                let cert = is_zero_hopf(&zh.params, &zh.equilibrium, ZERO_HOPF_TOL).expect("certified");
                assert!((cert.omega - omega).abs() <= 1e-8, "{case} c={c} ω={omega}");
                // independent oracle: the spectrum is that of J at the point
                let ev = eigenvalues4(&jacobian(&zh.params, &zh.equilibrium));
                assert!(ev.iter().filter(|z| z.norm() < 1e-7).count() == 2);
            }
        }
    }
}

#[test]
fn printed_d_over_three_is_not_zero_hopf() {
    for c in [-1.0, 0.5, 2.0] {
        for omega in [0.5, 1.0, 3.0] {
            let zh = zero_hopf_params(Case::I, c, Some(omega), None, None).unwrap();
            let mut p = zh.params;
            p.d = -(c * c + omega * omega).sqrt() / 3.0;
            let ok = is_zero_hopf(&p, &State4::zeros(), ZERO_HOPF_TOL).is_some_and(|z| (z.omega - omega).abs() <= 1e-8);
            assert!(!ok, "c={c} ω={omega}");
        }
    }
}

#[test]
fn case_i_unit_example() {
    let zh = zero_hopf_params(Case::I, 1.0, Some(1.0), None, None).unwrap();
    assert!((zh.params.d + 0.816_496_580_927_726).abs() < 1e-12);
    assert!((zh.params.e - 5.0 / 3.0).abs() < 1e-12);
    assert_eq!(zh.params.a, -2.0);
    assert_eq!(zh.params.b, 0.0);
}

#[test]
fn printed_c_coefficient_disagrees_with_expansion() {
    let p = SystemParams::new(1.0, 2.0, 3.0, 4.0, 5.0);
    let q = origin_char_poly(&p);
    let oracle = expand_roots(&eigenvalues4(&jacobian(&p, &State4::zeros())));
    assert!((q.a1 - oracle[2]).abs() < 1e-9 * oracle[2].abs());
    let SystemParams { a, b, c, d, e } = p;
    let printed = b * (c * c + d * d) + a * (2.0 * b * c + c * c + d * d - (b - c) * e);
    assert!((printed - oracle[2]).abs() > 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn origin_coefficients_match_root_expansion(
        a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, d in -3.0..3.0f64, e in -3.0..3.0f64,
    ) {
        let p = SystemParams::new(a, b, c, d, e);
        let q = origin_char_poly(&p).as_array();
        let oracle = expand_roots(&eigenvalues4(&jacobian(&p, &State4::zeros())));
        for i in 0..4 {
            prop_assert!((q[i] - oracle[i]).abs() <= 1e-8 * oracle[i].abs().max(10.0));
        }
    }

    #[test]
    fn branch_coefficients_match_root_expansion(
        a in 0.2..3.0f64, b in 0.2..3.0f64, c in 0.3..3.0f64, d in -2.0..2.0f64, extra in 0.1..3.0f64,
    ) {
        // e chosen so that Δ = extra > 0 and p± exist
        let e = (c * c + d * d) / c + extra;
        let p = SystemParams::new(a, b, c, d, e);
        let set = equilibria(&p).unwrap();
        let plus = set.get(EquilibriumTag::PlusBranch).unwrap();
        prop_assert!(plus.residual <= 1e-12);
        let q = branch_char_poly(&p).unwrap().as_array();
        let oracle = expand_roots(&eigenvalues4(&jacobian(&p, &plus.state)));
        for i in 0..4 {
            prop_assert!((q[i] - oracle[i]).abs() <= 1e-8 * oracle[i].abs().max(10.0));
        }
    }
}
