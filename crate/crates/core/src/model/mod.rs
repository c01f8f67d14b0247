//! McKean–Vlasov coefficient interface, drift taming and the benchmark models.

mod builtin;
mod probe;

pub use builtin::{make_builtin, BuiltinModel, BuiltinModelParams, Example};
pub use probe::{probe_assumptions, AssumptionReport, PairDiagnostic};

use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasureView;

/// Scalar McKean–Vlasov SDE `dX = b(X, μ) dt + σ(X, μ) dW` together with the
/// derivatives the Milstein correction needs.
///
/// Implementations must be pure: the same arguments give bit-identical
/// results, and the measure view is never modified.
pub trait McKeanVlasovModel: Send + Sync {
    fn name(&self) -> &str;

    /// Deterministic initial value shared by every particle.
    fn initial_value(&self) -> f64;

    fn drift(&self, x: f64, mu: &EmpiricalMeasureView) -> f64;

    fn diffusion(&self, x: f64, mu: &EmpiricalMeasureView) -> f64;

    /// ∂σ/∂x at `(x, μ)`.
    fn diffusion_state_gradient(&self, x: f64, mu: &EmpiricalMeasureView) -> f64;

    /// Lions derivative `D^L σ(x, μ)(y)`.
    fn diffusion_lions_derivative(&self, x: f64, mu: &EmpiricalMeasureView, y: f64) -> f64;
}

/// Drift taming applied by the explicit schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TamingVariant {
    None,
    /// `b / (1 + δ|b|)`
    #[default]
    Scheme1,
    /// `b / (1 + δ|b|²)`
    Scheme2,
}

#[inline]
pub(crate) fn tame(b: f64, delta: f64, variant: TamingVariant) -> f64 {
    match variant {
        TamingVariant::None => b,
        TamingVariant::Scheme1 => b / (1.0 + delta * b.abs()),
        TamingVariant::Scheme2 => b / (1.0 + delta * b * b),
    }
}

/// Tamed drift value for step size `delta`.
pub fn tame_drift(b_value: f64, delta: f64, variant: TamingVariant) -> Result<f64> {
    if !b_value.is_finite() || !delta.is_finite() {
        return Err(Error::invalid(format!(
            "tame_drift needs finite inputs, got b = {b_value}, delta = {delta}"
        )));
    }
    if delta <= 0.0 {
        return Err(Error::invalid(format!("tame_drift needs delta > 0, got {delta}")));
    }
    Ok(tame(b_value, delta, variant))
}

/// Linear mean-field model `dX = (a X + c E[X]) dt + s dW`.
///
/// Its mean solves `m' = (a + c) m`, which gives a closed-form oracle. With
/// `c = 0` the coefficients ignore the measure entirely, and with `s = 0` the
/// equation is a linear ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMeanField {
    pub a: f64,
    pub c: f64,
    pub s: f64,
    pub x0: f64,
}

impl LinearMeanField {
    pub fn new(a: f64, c: f64, s: f64, x0: f64) -> Result<Self> {
        if ![a, c, s, x0].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("linear mean-field parameters must be finite"));
        }
        Ok(Self { a, c, s, x0 })
    }

    /// `E[X_t] = x0 · e^{(a + c) t}`.
    pub fn exact_mean(&self, t: f64) -> f64 {
        self.x0 * ((self.a + self.c) * t).exp()
    }
}

impl McKeanVlasovModel for LinearMeanField {
    fn name(&self) -> &str {
        "linear-mean-field"
    }

    fn initial_value(&self) -> f64 {
        self.x0
    }

    fn drift(&self, x: f64, mu: &EmpiricalMeasureView) -> f64 {
        if self.c == 0.0 {
            self.a * x
        } else {
            self.a * x + self.c * crate::measure::mean(mu)
        }
    }

    fn diffusion(&self, _x: f64, _mu: &EmpiricalMeasureView) -> f64 {
        self.s
    }

    fn diffusion_state_gradient(&self, _x: f64, _mu: &EmpiricalMeasureView) -> f64 {
        0.0
    }

    fn diffusion_lions_derivative(&self, _x: f64, _mu: &EmpiricalMeasureView, _y: f64) -> f64 {
        0.0
    }
}
