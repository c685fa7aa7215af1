//! Adaptive Dormand-Prince 5(4) integration of the full system, with dense
//! output and the variational equation.

use nalgebra::{Matrix4, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jacobian, vector_field, State4, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Keep the per-step interpolants so the trajectory can be sampled anywhere.
    pub dense: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 1_000_000, dense: true }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) || !self.rtol.is_finite() || !self.atol.is_finite() {
            return Err(Error::Invalid(format!("tolerances must be positive, got rtol={} atol={}", self.rtol, self.atol)));
        }
        if self.max_steps == 0 {
            return Err(Error::Invalid("max_steps must be positive".into()));
        }
        Ok(())
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, PartialEq)]
struct Segment<const N: usize> {
    t0: f64,
    h: f64,
    r: [SVector<f64, N>; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> SVector<f64, N> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        r1 + (r2 + (r3 + (r4 + r5 * th1) * th) * th1) * th
    }
}

#[derive(Debug)]
struct Run<const N: usize> {
    t: Vec<f64>,
    y: Vec<SVector<f64, N>>,
    segments: Vec<Segment<N>>,
    steps: usize,
    rejected: usize,
}

fn error_norm<const N: usize>(err: &SVector<f64, N>, y0: &SVector<f64, N>, y1: &SVector<f64, N>, cfg: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sk = cfg.atol + cfg.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sk).powi(2);
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &impl Fn(&SVector<f64, N>) -> SVector<f64, N>,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    span: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let scale = |y: &SVector<f64, N>| y.map(|v| cfg.atol + cfg.rtol * v.abs());
    let sk = scale(y0);
    let d0 = (y0.component_div(&sk).norm_squared() / N as f64).sqrt();
    let d1 = (f0.component_div(&sk).norm_squared() / N as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let f1 = f(&(y0 + f0 * h0));
    let d2 = ((f1 - f0).component_div(&sk).norm_squared() / N as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

fn dopri<const N: usize>(
    f: impl Fn(&SVector<f64, N>) -> SVector<f64, N>,
    y0: SVector<f64, N>,
    t_end: f64,
    cfg: &IntegratorConfig,
    record: bool,
) -> Result<Run<N>> {
    cfg.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Invalid(format!("t_end must be finite and nonnegative, got {t_end}")));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("initial state must be finite".into()));
    }
    let mut run = Run { t: vec![0.0], y: vec![y0], segments: Vec::new(), steps: 0, rejected: 0 };
    if t_end == 0.0 {
        return Ok(run);
    }
    let blow_up = 1e12 * (1.0 + y0.amax());
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = initial_step(&f, &y, &k1, t_end, cfg);
    let mut last_rejected = false;
    while t < t_end {
        if run.steps + run.rejected >= cfg.max_steps {
            return Err(Error::StepLimit { steps: cfg.max_steps, t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }
        let k2 = f(&(y + k1 * (h * A21)));
        let k3 = f(&(y + (k1 * A31 + k2 * A32) * h));
        let k4 = f(&(y + (k1 * A41 + k2 * A42 + k3 * A43) * h));
        let k5 = f(&(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h));
        let k6 = f(&(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h));
        let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
        let k7 = f(&y1);
        let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
        let en = error_norm(&err, &y, &y1, cfg);
        if !en.is_finite() || y1.iter().any(|v| !v.is_finite()) {
            if h < 1e-300 {
                return Err(Error::BlowUp { t });
            }
            h *= 0.1;
            run.rejected += 1;
            last_rejected = true;
            continue;
        }
        if en <= 1.0 {
            if record && cfg.dense {
                let r2 = y1 - y;
                let r3 = k1 * h - r2;
                let r4 = r2 - k7 * h - r3;
                let r5 = (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h;
                run.segments.push(Segment { t0: t, h, r: [y, r2, r3, r4, r5] });
            }
            t = if last { t_end } else { t + h };
            y = y1;
            k1 = k7;
            run.steps += 1;
            if record {
                run.t.push(t);
                run.y.push(y);
            }
            if y.amax() > blow_up {
                return Err(Error::BlowUp { t });
            }
            let mut fac = 0.9 * en.max(1e-10).powf(-0.2);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac.clamp(0.2, 10.0);
            last_rejected = false;
        } else {
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            run.rejected += 1;
            last_rejected = true;
        }
    }
    if !record {
        run.t.push(t);
        run.y.push(y);
    }
    Ok(run)
}

/// Accepted steps of one integration, with the dense interpolant when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<State4>,
    pub rejected_steps: usize,
    segments: Vec<Segment<4>>,
}

impl Trajectory {
    pub fn end(&self) -> State4 {
        *self.states.last().expect("trajectory holds the initial point")
    }

    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty() || self.t.len() == 1
    }

    /// State at time `t` from the dense interpolant.
    pub fn sample(&self, t: f64) -> Result<State4> {
        let t_end = *self.t.last().unwrap();
        if !(0.0..=t_end).contains(&t) {
            return Err(Error::Invalid(format!("sample time {t} outside [0, {t_end}]")));
        }
        if self.t.len() == 1 {
            return Ok(self.states[0]);
        }
        if self.segments.is_empty() {
            return Err(Error::Invalid("trajectory was integrated without dense output".into()));
        }
        let k = self.segments.partition_point(|s| s.t0 + s.h < t).min(self.segments.len() - 1);
        Ok(self.segments[k].eval(t))
    }

    /// Samples at `0, dt, 2dt, ...` up to the final time.
    pub fn sample_uniform(&self, dt: f64) -> Result<Vec<(f64, State4)>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Invalid(format!("sample interval must be positive, got {dt}")));
        }
        let t_end = *self.t.last().unwrap();
        let n = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|k| (k as f64 * dt).min(t_end)).map(|t| Ok((t, self.sample(t)?))).collect()
    }
}

/// Integrates the full system from `s0` over `[0, t_end]`.
pub fn integrate(p: &SystemParams, s0: State4, t_end: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    p.validate()?;
    let run = dopri(|y| vector_field(p, y), s0, t_end, cfg, true)?;
    Ok(Trajectory { t: run.t, states: run.y, rejected_steps: run.rejected, segments: run.segments })
}

/// Endpoint of the flow without storing the trajectory.
pub fn flow(p: &SystemParams, s0: State4, t_end: f64, cfg: &IntegratorConfig) -> Result<State4> {
    p.validate()?;
    let run = dopri(|y| vector_field(p, y), s0, t_end, cfg, false)?;
    Ok(*run.y.last().unwrap())
}

/// Endpoint of the flow together with the fundamental matrix `∂φ_t/∂s₀`.
pub fn variational_flow(p: &SystemParams, s0: State4, t_end: f64, cfg: &IntegratorConfig) -> Result<(State4, Matrix4<f64>)> {
    p.validate()?;
    let mut y0 = SVector::<f64, 20>::zeros();
    y0.fixed_rows_mut::<4>(0).copy_from(&s0);
    for i in 0..4 {
        y0[4 + i * 5] = 1.0;
    }
    let rhs = |y: &SVector<f64, 20>| {
        let s = State4::from(y.fixed_rows::<4>(0));
        let phi = Matrix4::from_column_slice(&y.as_slice()[4..]);
        let mut out = SVector::<f64, 20>::zeros();
        out.fixed_rows_mut::<4>(0).copy_from(&vector_field(p, &s));
        out.as_mut_slice()[4..].copy_from_slice((jacobian(p, &s) * phi).as_slice());
        out
    };
    let run = dopri(rhs, y0, t_end, cfg, false)?;
    let y = run.y.last().unwrap();
    Ok((State4::from(y.fixed_rows::<4>(0)), Matrix4::from_column_slice(&y.as_slice()[4..])))
}
