//! Periodic orbits of the full system near an averaged zero: shooting with
//! the period as an unknown, Floquet multipliers, and ε-convergence sweeps.

use std::f64::consts::PI;

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::averaging::{AveragedZero, Verdict};
use crate::error::{Error, Result};
use crate::model::{equilibria, vector_field, State4, SystemParams};
use crate::ode::{flow, integrate, variational_flow, IntegratorConfig};
use crate::reduction::{full_to_reduced, jordan_change, perturb, reduced_to_full, UnfoldingSpec};
use crate::spectrum::eigenvalues4;

/// Largest ε for which first-order predictions are trusted.
pub const EPS_MAX: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub integrator: IntegratorConfig,
    pub max_iter: usize,
    /// Converged when `‖φ_T(s) - s‖∞ ≤ tol·(1 + ‖s‖∞)`.
    pub tol: f64,
    /// The period is kept inside `[lo, hi]·2π/ω`.
    pub period_window: (f64, f64),
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self { integrator: IntegratorConfig::default(), max_iter: 25, tol: 1e-10, period_window: (0.5, 1.5) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub eps: f64,
    pub params: SystemParams,
    pub initial_state: State4,
    pub period: f64,
    /// Eigenvalues of the monodromy matrix.
    pub floquet_multipliers: [Complex64; 4],
    /// Index of the multiplier closest to 1 (the direction along the flow).
    pub trivial_index: usize,
    /// Exactly one multiplier lies within 1e-4 of 1.
    pub trivial_isolated: bool,
    /// `‖φ_T(s) - s‖∞`.
    pub closure_residual: f64,
    /// Reduced coordinates `(r, z, w)` where the orbit crosses `θ = 0`.
    pub reduced_section_point: [f64; 3],
    pub iterations: usize,
}

impl PeriodicOrbit {
    pub fn nontrivial_multipliers(&self) -> Vec<Complex64> {
        (0..4).filter(|&k| k != self.trivial_index).map(|k| self.floquet_multipliers[k]).collect()
    }

    /// `log|μ| / (2πε)` for the nontrivial multipliers, sorted descending; these
    /// approximate the real parts of the averaged eigenvalues per unit θ.
    pub fn floquet_rates(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.nontrivial_multipliers().iter().map(|m| m.norm().ln() / (2.0 * PI * self.eps)).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_real_parts(self.nontrivial_multipliers().iter().map(|m| m.norm().ln()))
    }

    pub fn has_unstable_multiplier(&self) -> bool {
        self.nontrivial_multipliers().iter().any(|m| m.norm() > 1.0)
    }
}

/// `‖φ_T(s) - s‖∞`.
pub fn closure_residual(p: &SystemParams, s: State4, period: f64, cfg: &IntegratorConfig) -> Result<f64> {
    Ok((flow(p, s, period, cfg)? - s).amax())
}

/// Full-system state for an averaged zero at `θ = 0`.
pub fn seed_state(spec: &UnfoldingSpec, eps: f64, seed: &AveragedZero) -> Result<State4> {
    let change = jordan_change(spec)?;
    reduced_to_full(spec, &change, eps, 0.0, seed.location)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= EPS_MAX) {
        return Err(Error::Invalid(format!("eps must lie in (0, {EPS_MAX}], got {eps}")));
    }
    Ok(())
}

/// Rejects seeds that sit on an equilibrium of the perturbed system, measured
/// in reduced coordinates where the first-order error is O(ε).
fn equilibrium_guard(spec: &UnfoldingSpec, eps: f64, p: &SystemParams, seed: &AveragedZero) -> Result<()> {
    let change = jordan_change(spec)?;
    let [r, z, w] = seed.location;
    let scale = 1.0 + r.abs().max(z.abs()).max(w.abs());
    let mut nearest: Option<(f64, State4)> = None;
    for eq in equilibria(p)?.points {
        let (th, [er, ez, ew]) = full_to_reduced(spec, &change, eps, &eq.state)?;
        let dist = ((er * th.cos() - r).powi(2) + (er * th.sin()).powi(2) + (ez - z).powi(2) + (ew - w).powi(2)).sqrt();
        if nearest.is_none_or(|(d, _)| dist < d) {
            nearest = Some((dist, eq.state));
        }
    }
    if let Some((dist, state)) = nearest {
        if seed.trivial || dist <= 2.0 * eps * scale {
            return Err(Error::SeedIsEquilibrium { state: state.into(), distance: dist });
        }
    } else if seed.trivial {
        return Err(Error::SeedIsEquilibrium { state: seed_state(spec, eps, seed)?.into(), distance: 0.0 });
    }
    Ok(())
}

/// Shooting for a periodic orbit from the seed mapped into the full system.
///
/// Unknowns are the initial state and the period; the phase is fixed by the
/// hyperplane through the guess normal to the flow there.
pub fn find_periodic_orbit(spec: &UnfoldingSpec, eps: f64, seed: &AveragedZero, cfg: &ShootingConfig) -> Result<PeriodicOrbit> {
    check_eps(eps)?;
    if !seed.stability.theorem_applicable && !seed.axis {
        return Err(Error::NonHyperbolic { det: seed.stability.det });
    }
    let p = perturb(spec, eps)?;
    equilibrium_guard(spec, eps, &p, seed)?;
    let s0 = seed_state(spec, eps, seed)?;
    let normal = vector_field(&p, &s0);
    if normal.amax() == 0.0 {
        return Err(Error::SeedIsEquilibrium { state: s0.into(), distance: 0.0 });
    }
    let t0 = 2.0 * PI / spec.omega;
    let (t_lo, t_hi) = (cfg.period_window.0 * t0, cfg.period_window.1 * t0);

    let residual = |s: &State4, t: f64| -> Result<(Vector5<f64>, Matrix5<f64>)> {
        let (end, phi) = variational_flow(&p, *s, t, &cfg.integrator)?;
        let mut r = Vector5::zeros();
        r.fixed_rows_mut::<4>(0).copy_from(&(end - s));
        r[4] = normal.dot(&(s - s0));
        let mut a = Matrix5::zeros();
        a.fixed_view_mut::<4, 4>(0, 0).copy_from(&(phi - nalgebra::Matrix4::identity()));
        a.fixed_view_mut::<4, 1>(0, 4).copy_from(&vector_field(&p, &end));
        a.fixed_view_mut::<1, 4>(4, 0).copy_from(&normal.transpose());
        Ok((r, a))
    };
    let closure = |r: &Vector5<f64>| r.fixed_rows::<4>(0).amax();

    let (mut s, mut t) = (s0, t0);
    let (mut r, mut a) = residual(&s, t)?;
    let mut best = closure(&r);
    let mut iterations = 0;
    while closure(&r) > cfg.tol * (1.0 + s.amax()) {
        if iterations >= cfg.max_iter {
            return Err(Error::OrbitNotFound { iterations, best_residual: best });
        }
        iterations += 1;
        let Some(step) = a.lu().solve(&(-r)) else {
            return Err(Error::OrbitNotFound { iterations, best_residual: best });
        };
        let current = closure(&r);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let ts = t + lambda * step[4];
            if (t_lo..=t_hi).contains(&ts) {
                let ss = s + step.fixed_rows::<4>(0) * lambda;
                if let Ok((rn, an)) = residual(&ss, ts) {
                    if closure(&rn) < current || lambda < 1e-3 {
                        accepted = Some((ss, ts, rn, an));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((ss, ts, rn, an)) = accepted else {
            return Err(Error::OrbitNotFound { iterations, best_residual: best });
        };
        (s, t, r, a) = (ss, ts, rn, an);
        best = best.min(closure(&r));
    }

    let (_, monodromy) = variational_flow(&p, s, t, &cfg.integrator)?;
    let mu = eigenvalues4(&monodromy);
    let trivial_index = (0..4).min_by(|&i, &j| (mu[i] - 1.0).norm().total_cmp(&(mu[j] - 1.0).norm())).unwrap();
    let trivial_isolated = mu.iter().filter(|m| (*m - 1.0).norm() <= 1e-4).count() == 1;
    Ok(PeriodicOrbit {
        eps,
        params: p,
        initial_state: s,
        period: t,
        floquet_multipliers: mu,
        trivial_index,
        trivial_isolated,
        closure_residual: closure(&r),
        reduced_section_point: section_point(spec, eps, &p, s, t, &cfg.integrator)?,
        iterations,
    })
}

/// Reduced coordinates where the orbit crosses `θ = 0` (the half-plane `Y = 0, X > 0`).
fn section_point(spec: &UnfoldingSpec, eps: f64, p: &SystemParams, s: State4, period: f64, cfg: &IntegratorConfig) -> Result<[f64; 3]> {
    let change = jordan_change(spec)?;
    let dense = IntegratorConfig { dense: true, ..*cfg };
    let traj = integrate(p, s, period, &dense)?;
    let angle = |x: &State4| full_to_reduced(spec, &change, eps, x).map(|(th, _)| th);
    let (th0, x0) = full_to_reduced(spec, &change, eps, &s)?;
    if th0 == 0.0 {
        return Ok(x0);
    }
    // scan accepted steps for a crossing of θ = 0 (Y changes sign with X > 0)
    let mut prev = (traj.t[0], th0);
    for (&t, x) in traj.t.iter().zip(&traj.states).skip(1) {
        let th = angle(x)?;
        if prev.1.signum() != th.signum() && prev.1.abs() < PI / 2.0 && th.abs() < PI / 2.0 {
            let (mut lo, mut hi) = (prev, (t, th));
            for _ in 0..100 {
                let mid = 0.5 * (lo.0 + hi.0);
                let tm = angle(&traj.sample(mid)?)?;
                if tm.signum() == lo.1.signum() {
                    lo = (mid, tm);
                } else {
                    hi = (mid, tm);
                }
                if hi.0 - lo.0 <= 1e-14 * period {
                    break;
                }
            }
            let at = traj.sample(0.5 * (lo.0 + hi.0))?;
            return Ok(full_to_reduced(spec, &change, eps, &at)?.1);
        }
        prev = (t, th);
    }
    // no crossing: the orbit does not wind around the axis; report the start
    Ok(x0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub orbit: Option<PeriodicOrbit>,
    pub error: Option<String>,
    /// `‖section point - seed‖₂` in reduced coordinates.
    pub distance: Option<f64>,
    /// `|T·ω/(2π) - 1|`.
    pub period_error: Option<f64>,
    /// Floquet verdict agrees with the averaged-Jacobian verdict.
    pub verdict_agrees: Option<bool>,
    /// `max_k |log|μ_k|/(2πε) - Re λ_k| / |Re λ_k|` over the nontrivial multipliers.
    pub rate_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log regression.
    pub residual: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub seed: AveragedZero,
    pub theorem_applicable: bool,
    /// Every run found the seed on an equilibrium of the full system.
    pub seed_is_equilibrium: bool,
    pub entries: Vec<SweepEntry>,
    pub fit: Option<OrderFit>,
    /// Fitted order inside `[0.8, 1.2]`; `None` when no order is asserted.
    pub order_ok: Option<bool>,
    /// `max |T·ω/(2π) - 1| / ε` over the converged runs.
    pub period_constant: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> Option<OrderFit> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len();
    if n < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let order = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - order * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - order * p.0).powi(2)).sum::<f64>() / n as f64).sqrt();
    Some(OrderFit { order, intercept, residual, points: n })
}

fn rate_error(orbit: &PeriodicOrbit, seed: &AveragedZero) -> f64 {
    let mut re: Vec<f64> = seed.stability.eigenvalues.iter().map(|z| z.re).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    orbit
        .floquet_rates()
        .iter()
        .zip(&re)
        .map(|(f, l)| (f - l).abs() / l.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Runs [`find_periodic_orbit`] for each ε (concurrently) and measures the
/// convergence of section points, periods and Floquet rates.
pub fn epsilon_sweep(spec: &UnfoldingSpec, seed: &AveragedZero, eps_list: &[f64], cfg: &ShootingConfig) -> Result<ConvergenceReport> {
    if eps_list.len() < 3 {
        return Err(Error::Invalid(format!("need at least 3 eps values, got {}", eps_list.len())));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("eps list must be strictly decreasing".into()));
    }
    for &e in eps_list {
        check_eps(e)?;
    }
    let results: Vec<Result<PeriodicOrbit>> = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_list.iter().map(|&eps| scope.spawn(move || find_periodic_orbit(spec, eps, seed, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("shooting thread panicked")).collect()
    });
    let seed_is_equilibrium = results.iter().all(|r| matches!(r, Err(Error::SeedIsEquilibrium { .. })));
    let entries: Vec<SweepEntry> = eps_list
        .iter()
        .zip(results)
        .map(|(&eps, res)| match res {
            Ok(orbit) => {
                let d = orbit.reduced_section_point.iter().zip(seed.location).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                SweepEntry {
                    eps,
                    distance: Some(d),
                    period_error: Some((orbit.period * spec.omega / (2.0 * PI) - 1.0).abs()),
                    verdict_agrees: Some(orbit.verdict() == seed.stability.verdict),
                    rate_error: Some(rate_error(&orbit, seed)),
                    orbit: Some(orbit),
                    error: None,
                }
            }
            Err(e) => SweepEntry {
                eps,
                orbit: None,
                error: Some(e.to_string()),
                distance: None,
                period_error: None,
                verdict_agrees: None,
                rate_error: None,
            },
        })
        .collect();
    let ok: Vec<&SweepEntry> = entries.iter().filter(|e| e.distance.is_some()).collect();
    let fit = fit_order(&ok.iter().map(|e| e.eps).collect::<Vec<_>>(), &ok.iter().map(|e| e.distance.unwrap()).collect::<Vec<_>>());
    let applicable = seed.stability.theorem_applicable;
    let order_ok = match (&fit, applicable && !seed_is_equilibrium) {
        (Some(f), true) if f.points == entries.len() => Some((0.8..=1.2).contains(&f.order)),
        (_, true) => Some(false),
        _ => None,
    };
    let period_constant = ok.iter().map(|e| e.period_error.unwrap() / e.eps).reduce(f64::max);
    Ok(ConvergenceReport { seed: seed.clone(), theorem_applicable: applicable, seed_is_equilibrium, entries, fit, order_ok, period_constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_fit_recovers_power_law() {
        let x = [0.01, 0.005, 0.0025];
        let y = x.map(|v: f64| 3.0 * v.powf(1.5));
        let f = fit_order(&x, &y).unwrap();
        assert!((f.order - 1.5).abs() < 1e-12 && f.residual < 1e-12);
        assert!(fit_order(&[0.1], &[0.2]).is_none());
    }

    #[test]
    fn eps_range_is_enforced() {
        assert!(check_eps(0.0).is_err());
        assert!(check_eps(0.06).is_err());
        assert!(check_eps(0.05).is_ok());
    }
}
