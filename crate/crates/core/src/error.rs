use thiserror::Error;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("c must be nonzero")]
    ZeroC,

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("field is singular on the axis r = 0 (non-removable 1/r term, numerator {numerator:e})")]
    AxisSingular { numerator: f64 },

    #[error("reparametrization by theta is singular (dtheta/dt = {rate:e})")]
    ReparametrizationSingular { rate: f64 },

    #[error("series extraction did not converge (residual {residual:e})")]
    Extraction { residual: f64 },

    #[error("zero is nonhyperbolic, averaging theorem inapplicable (det = {det:e})")]
    NonHyperbolic { det: f64 },

    #[error("Newton polish diverged from closed-form seed {seed:?} (residual {residual:e})")]
    Inconsistent { seed: [f64; 3], residual: f64 },

    #[error("integrator exhausted {steps} steps at t = {t}")]
    StepLimit { steps: usize, t: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("periodic orbit not found after {iterations} iterations (best residual {best_residual:e})")]
    OrbitNotFound { iterations: usize, best_residual: f64 },

    #[error("seed maps onto an equilibrium of the full system (distance {distance:e})")]
    SeedIsEquilibrium { state: [f64; 4], distance: f64 },
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Invalid(_) | Error::ZeroC | Error::Degenerate(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must be finite, got {v}")))
    }
}
