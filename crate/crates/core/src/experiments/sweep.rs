//! Error against particle count at a fixed time grid.

use super::{check_levels, fit_surviving, job_seed, mean_square_diff, run_level_jobs, SlopeFit};
use crate::error::{Error, Result};
use crate::model::{McKeanVlasovModel, TamingVariant};
use crate::schemes::{simulate_terminal, SchemeSpec, SimOptions, TimeGrid};

/// Tamed Euler against the full tamed Milstein scheme (or any other pair)
/// under identical noise, for `N = 2^l`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayConfig {
    pub reference: SchemeSpec,
    pub full: SchemeSpec,
    pub steps: usize,
    pub horizon: f64,
    pub particle_levels: Vec<u32>,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl DecayConfig {
    pub fn euler_vs_milstein(
        taming: TamingVariant,
        steps: usize,
        particle_levels: Vec<u32>,
        repetitions: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            reference: SchemeSpec::tamed_euler(taming),
            full: SchemeSpec::milstein(taming, true),
            steps,
            horizon: 1.0,
            particle_levels,
            repetitions,
            base_seed,
        }
    }
}

/// Full `N`-particle system against two independent half systems that share
/// its Brownian motions.
#[derive(Debug, Clone, PartialEq)]
pub struct PocConfig {
    pub scheme: SchemeSpec,
    pub steps: usize,
    pub horizon: f64,
    pub particle_levels: Vec<u32>,
    pub repetitions: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub level: u32,
    pub particles: usize,
    pub rmse: f64,
    pub repetitions: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub steps: usize,
    pub rows: Vec<SweepRow>,
    /// Slope of `log₂ RMSE` against `log₂ N`.
    pub fit: Option<SlopeFit>,
    pub partial: bool,
}

fn check_sweep(steps: usize, levels: &[u32], reps: usize) -> Result<()> {
    check_levels(levels, "particle levels")?;
    if levels.iter().any(|&l| l > 30) {
        return Err(Error::invalid("particle level above 30"));
    }
    if steps == 0 {
        return Err(Error::invalid("steps must be positive"));
    }
    if reps == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    Ok(())
}

fn collect(levels: &[u32], reps: usize, steps: usize, outcomes: Vec<super::LevelOutcome>) -> SweepResult {
    let rows: Vec<SweepRow> = levels
        .iter()
        .zip(&outcomes)
        .map(|(&level, o)| SweepRow {
            level,
            particles: 1usize << level,
            rmse: o.mean_square.sqrt(),
            repetitions: reps,
            diverged: o.diverged,
        })
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.level as f64, r.rmse)).collect();
    SweepResult {
        steps,
        fit: fit_surviving(&points),
        partial: rows.iter().any(|r| r.diverged),
        rows,
    }
}

pub fn run_lderiv_decay(
    model: &(impl McKeanVlasovModel + ?Sized),
    config: &DecayConfig,
    opts: &SimOptions,
) -> Result<SweepResult> {
    check_sweep(config.steps, &config.particle_levels, config.repetitions)?;
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let outcomes = run_level_jobs(&config.particle_levels, config.repetitions, opts, |level, rep, inner| {
        let n = 1usize << level;
        let seed = job_seed(config.base_seed, level, rep);
        let a = simulate_terminal(model, &config.reference, grid, 0..n, seed, inner)?;
        let b = simulate_terminal(model, &config.full, grid, 0..n, seed, inner)?;
        mean_square_diff(&a.positions, &b.positions)
    })?;
    Ok(collect(&config.particle_levels, config.repetitions, config.steps, outcomes))
}

pub fn run_poc_split(
    model: &(impl McKeanVlasovModel + ?Sized),
    config: &PocConfig,
    opts: &SimOptions,
) -> Result<SweepResult> {
    check_sweep(config.steps, &config.particle_levels, config.repetitions)?;
    if config.particle_levels.contains(&0) {
        return Err(Error::invalid("splitting needs an even particle count (level >= 1)"));
    }
    let grid = TimeGrid::new(config.horizon, config.steps)?;
    let outcomes = run_level_jobs(&config.particle_levels, config.repetitions, opts, |level, rep, inner| {
        let n = 1usize << level;
        let seed = job_seed(config.base_seed, level, rep);
        let full = simulate_terminal(model, &config.scheme, grid, 0..n, seed, inner)?;
        let mut split = simulate_terminal(model, &config.scheme, grid, 0..n / 2, seed, inner)?.positions;
        split.extend(simulate_terminal(model, &config.scheme, grid, n / 2..n, seed, inner)?.positions);
        mean_square_diff(&full.positions, &split)
    })?;
    Ok(collect(&config.particle_levels, config.repetitions, config.steps, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinModelParams, Example, LinearMeanField};

    #[test]
    fn identical_schemes_give_zero_table() {
        let m = make_builtin(Example::Ex4, BuiltinModelParams::default()).unwrap();
        let plain = SchemeSpec::new(crate::schemes::SchemeKind::Milstein, TamingVariant::Scheme1, false, false).unwrap();
        let cfg = DecayConfig {
            reference: SchemeSpec::tamed_euler(TamingVariant::Scheme1),
            full: plain,
            ..DecayConfig::euler_vs_milstein(TamingVariant::Scheme1, 16, vec![2, 3, 4], 2, 7)
        };
        let res = run_lderiv_decay(&m, &cfg, &SimOptions::default()).unwrap();
        assert!(res.rows.iter().all(|r| r.rmse == 0.0));
        assert!(res.fit.is_none());
    }

    #[test]
    fn model_without_derivatives_gives_zero_decay() {
        let m = LinearMeanField::new(-1.0, 0.5, 0.4, 1.0).unwrap();
        let cfg = DecayConfig::euler_vs_milstein(TamingVariant::Scheme1, 16, vec![2, 3], 1, 3);
        let res = run_lderiv_decay(&m, &cfg, &SimOptions::default()).unwrap();
        assert!(res.rows.iter().all(|r| r.rmse == 0.0));
    }

    #[test]
    fn ex1_decay_is_positive() {
        let m = make_builtin(Example::Ex1, BuiltinModelParams::default()).unwrap();
        let cfg = DecayConfig::euler_vs_milstein(TamingVariant::Scheme1, 16, vec![2, 3, 4], 4, 3);
        let res = run_lderiv_decay(&m, &cfg, &SimOptions::default()).unwrap();
        assert!(res.rows.iter().all(|r| r.rmse > 0.0 && r.rmse.is_finite()));
        assert!(res.fit.is_some());
    }

    #[test]
    fn measure_free_model_has_no_chaos_error() {
        let m = LinearMeanField::new(-1.0, 0.0, 0.7, 1.0).unwrap();
        let cfg = PocConfig {
            scheme: SchemeSpec::standard_milstein(false),
            steps: 16,
            horizon: 1.0,
            particle_levels: vec![1, 2, 3],
            repetitions: 2,
            base_seed: 11,
        };
        let res = run_poc_split(&m, &cfg, &SimOptions::default()).unwrap();
        assert!(res.rows.iter().all(|r| r.rmse == 0.0));
    }

    #[test]
    fn smallest_split_is_finite() {
        let m = make_builtin(Example::Ex1, BuiltinModelParams::default()).unwrap();
        let cfg = PocConfig {
            scheme: SchemeSpec::milstein(TamingVariant::Scheme1, true),
            steps: 16,
            horizon: 1.0,
            particle_levels: vec![1],
            repetitions: 1,
            base_seed: 5,
        };
        let res = run_poc_split(&m, &cfg, &SimOptions::default()).unwrap();
        assert_eq!(res.rows[0].particles, 2);
        assert!(res.rows[0].rmse.is_finite() && res.rows[0].rmse > 0.0);
        let bad = PocConfig {
            particle_levels: vec![0, 1],
            ..cfg
        };
        assert!(run_poc_split(&m, &bad, &SimOptions::default()).is_err());
    }
}
