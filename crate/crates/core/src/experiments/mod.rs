//! Convergence ladders, particle-count sweeps and closed-form validation.
//!
//! Repetitions and levels are independent jobs with seeds derived from
//! `(base seed, level, repetition)`; results are reduced in job-index order,
//! so tables do not depend on scheduling.

mod ladder;
mod moments;
mod oracle;
mod sweep;

pub use ladder::{run_convergence_ladder, steps_for_level, ConvergenceLadderConfig, ConvergenceResult, LadderRow};
pub use moments::{moment_profile, MomentProfile};
pub use oracle::{run_meanfield_ou_oracle, OuOracleConfig, OuOracleReport};
pub use sweep::{run_lderiv_decay, run_poc_split, DecayConfig, PocConfig, SweepResult, SweepRow};

use crate::error::{Error, Result};
use crate::exec::{available_workers, Execution};
use crate::noise::derive_seed;
use crate::schemes::{EnsembleState, SimOptions};

/// Minimum number of usable levels before a slope is reported.
pub const MIN_SLOPE_POINTS: usize = 3;

/// `sqrt((1/N) Σ (aᵢ − bᵢ)²)` over matched particles.
pub fn rmse_pathwise(a: &EnsembleState, b: &EnsembleState) -> Result<f64> {
    rmse_slices(&a.positions, &b.positions)
}

pub fn rmse_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    Ok(mean_square_diff(a, b)?.sqrt())
}

pub(crate) fn mean_square_diff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!(
            "RMSE needs two non-empty ensembles of equal size, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(sq / a.len() as f64)
}

/// Least-squares fit of `log₂(value)` against `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// Standard error of the slope from the residuals; NaN for two points.
    pub stderr: f64,
    pub intercept: f64,
}

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return Err(Error::invalid("slope fit needs at least two points"));
    }
    if let Some((_, v)) = points.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid(format!("slope fit needs positive values, got {v}")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("slope fit needs at least two distinct levels"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if points.len() > 2 {
        let ssr: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (intercept + slope * x);
                r * r
            })
            .sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(SlopeFit {
        slope,
        stderr,
        intercept,
    })
}

/// Propagation-of-chaos rate: `N^{-1/2}` for `d < 4`, `N^{-1/2} ln N` for
/// `d = 4` and `N^{-2/d}` for `d > 4`.
pub fn phi(n: u64, d: u32) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("phi needs N >= 1 and d >= 1"));
    }
    let nf = n as f64;
    match d {
        1..=3 => Ok(nf.powf(-0.5)),
        4 if n < 2 => Err(Error::invalid("phi with d = 4 needs N >= 2")),
        4 => Ok(nf.powf(-0.5) * nf.ln()),
        _ => Ok(nf.powf(-2.0 / d as f64)),
    }
}

/// Seed of repetition `rep` at `level`.
pub fn job_seed(base: u64, level: u32, rep: usize) -> u64 {
    derive_seed(base, &[level as u64, rep as u64])
}

/// Outcome of the repetitions at one level.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LevelOutcome {
    /// Mean of the per-repetition squared RMSE; NaN when diverged.
    pub mean_square: f64,
    pub diverged: bool,
}

/// Runs `job(level, rep, opts)` for every (level, repetition) pair and
/// averages the returned squared errors per level in repetition order.
///
/// Divergence in any repetition flags the whole level; other errors abort.
pub(crate) fn run_level_jobs<F>(
    levels: &[u32],
    repetitions: usize,
    opts: &SimOptions,
    job: F,
) -> Result<Vec<LevelOutcome>>
where
    F: Fn(u32, usize, &SimOptions) -> Result<f64> + Sync,
{
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    let total = levels.len() * repetitions;
    // Many small jobs: parallelise across jobs and keep each job sequential.
    let inner = if total >= available_workers() {
        SimOptions {
            execution: Execution::Sequential,
            ..*opts
        }
    } else {
        *opts
    };
    let results = opts.execution.map(total, |k| {
        let (li, rep) = (k / repetitions, k % repetitions);
        job(levels[li], rep, &inner)
    });
    let mut out = Vec::with_capacity(levels.len());
    for chunk in results.chunks(repetitions) {
        let mut sum = 0.0;
        let mut diverged = false;
        for r in chunk {
            match r {
                Ok(v) => sum += v,
                Err(e) if e.is_divergence() => diverged = true,
                Err(e) => return Err(e.clone()),
            }
        }
        out.push(LevelOutcome {
            mean_square: if diverged { f64::NAN } else { sum / repetitions as f64 },
            diverged,
        });
    }
    Ok(out)
}

/// Fits a slope over the non-diverged levels when enough survive.
pub(crate) fn fit_surviving(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let usable: Vec<(f64, f64)> = points.iter().copied().filter(|(_, v)| v.is_finite() && *v > 0.0).collect();
    if usable.len() < MIN_SLOPE_POINTS {
        return None;
    }
    fit_loglog_slope(&usable).ok()
}

pub(crate) fn check_levels(levels: &[u32], what: &str) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::invalid(format!("{what} list is empty")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!("{what} must be strictly increasing")));
    }
    if levels.iter().any(|&l| l > 40) {
        return Err(Error::invalid(format!("{what} exponent above 40")));
    }
    Ok(())
}
