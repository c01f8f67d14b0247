//! Validation against the linear mean-field model, whose mean is known in
//! closed form.

use crate::error::{Error, Result};
use crate::model::LinearMeanField;
use crate::schemes::{simulate_coupled_pair, SchemeSpec, SimOptions, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuOracleConfig {
    pub a: f64,
    pub c: f64,
    pub s: f64,
    pub x0: f64,
    pub horizon: f64,
    /// Fine grid size; must be even (the coarse grid estimates the bias).
    pub steps: usize,
    pub particles: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuOracleReport {
    pub exact_mean: f64,
    pub ensemble_mean: f64,
    pub coarse_mean: f64,
    pub abs_error: f64,
    /// Standard error of the ensemble mean of the discrete scheme.
    pub standard_error: f64,
    /// Time-discretisation allowance `C_bias δ`, from the fine/coarse gap.
    pub bias_allowance: f64,
    pub pass: bool,
}

/// Standard Milstein run of `dX = (aX + c E[X]) dt + s dW` compared with
/// `x0 e^{(a+c)T}`; passes when the error lies within three standard errors
/// plus the bias allowance.
pub fn run_meanfield_ou_oracle(config: &OuOracleConfig, opts: &SimOptions) -> Result<OuOracleReport> {
    let model = LinearMeanField::new(config.a, config.c, config.s, config.x0)?;
    if config.particles == 0 {
        return Err(Error::invalid("particle count must be positive"));
    }
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let pair = simulate_coupled_pair(
        &model,
        &SchemeSpec::standard_milstein(false),
        grid,
        config.particles,
        config.seed,
        opts,
    )?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ensemble_mean = mean(&pair.fine.positions);
    let coarse_mean = mean(&pair.coarse.positions);
    let exact_mean = model.exact_mean(config.horizon);

    // The ensemble mean follows m' = m (1 + λδ) + s·mean(ΔW) exactly.
    let delta = grid.delta();
    let growth = (1.0 + (config.a + config.c) * delta).powi(2);
    let mut geometric = 0.0;
    let mut term = 1.0;
    for _ in 0..grid.steps() {
        geometric += term;
        term *= growth;
    }
    let standard_error = config.s.abs() * (delta / config.particles as f64 * geometric).sqrt();

    // Euler bias is linear in δ; the coarse run carries twice the fine bias.
    let bias_allowance = (ensemble_mean - coarse_mean).abs();
    let abs_error = (ensemble_mean - exact_mean).abs();
    Ok(OuOracleReport {
        exact_mean,
        ensemble_mean,
        coarse_mean,
        abs_error,
        standard_error,
        bias_allowance,
        pass: abs_error <= 3.0 * standard_error + bias_allowance,
    })
}
