use super::{check_levels, fit_surviving, job_seed, mean_square_diff, run_level_jobs, SlopeFit};
use crate::error::{Error, Result};
use crate::model::McKeanVlasovModel;
use crate::schemes::{simulate_coupled_pair, SchemeSpec, SimOptions, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLadderConfig {
    pub scheme: SchemeSpec,
    pub particles: usize,
    /// Exponents `l`; level `l` runs `M = 2^l · T` fine steps against the
    /// coarsened `M/2`-step path.
    pub levels: Vec<u32>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub horizon: f64,
}

impl ConvergenceLadderConfig {
    pub fn validate(&self) -> Result<()> {
        check_levels(&self.levels, "levels")?;
        if self.particles == 0 {
            return Err(Error::invalid("particle count must be positive"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        for &l in &self.levels {
            steps_for_level(l, self.horizon)?;
        }
        Ok(())
    }
}

/// `M = 2^l · T`; must be an even integer so that the level can be coarsened.
pub fn steps_for_level(level: u32, horizon: f64) -> Result<usize> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
    }
    let m = 2f64.powi(level as i32) * horizon;
    if m.fract() != 0.0 || !(2.0..=1e12).contains(&m) || !(m as u64).is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "level {level} with horizon {horizon} gives {m} steps; need an even integer"
        )));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderRow {
    pub level: u32,
    pub steps: usize,
    /// Root of the repetition-averaged squared RMSE; NaN when diverged.
    pub rmse: f64,
    pub repetitions: usize,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<LadderRow>,
    /// Least-squares slope of `log₂ RMSE` against level; `None` with fewer
    /// than three usable levels.
    pub fit: Option<SlopeFit>,
    /// Some level diverged.
    pub partial: bool,
}

/// RMSE between coupled fine and coarse terminal states for each level.
pub fn run_convergence_ladder(
    model: &(impl McKeanVlasovModel + ?Sized),
    config: &ConvergenceLadderConfig,
    opts: &SimOptions,
) -> Result<ConvergenceResult> {
    config.validate()?;
    let outcomes = run_level_jobs(&config.levels, config.repetitions, opts, |level, rep, inner| {
        let grid = TimeGrid::new(config.horizon, steps_for_level(level, config.horizon)?)?;
        let seed = job_seed(config.base_seed, level, rep);
        let pair = simulate_coupled_pair(model, &config.scheme, grid, config.particles, seed, inner)?;
        mean_square_diff(&pair.fine.positions, &pair.coarse.positions)
    })?;
    let rows: Vec<LadderRow> = config
        .levels
        .iter()
        .zip(&outcomes)
        .map(|(&level, o)| LadderRow {
            level,
            steps: steps_for_level(level, config.horizon).expect("validated"),
            rmse: o.mean_square.sqrt(),
            repetitions: config.repetitions,
            diverged: o.diverged,
        })
        .collect();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.level as f64, r.rmse)).collect();
    Ok(ConvergenceResult {
        fit: fit_surviving(&points),
        partial: rows.iter().any(|r| r.diverged),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::model::{make_builtin, BuiltinModelParams, Example, LinearMeanField, TamingVariant};

    fn config(scheme: SchemeSpec, n: usize, levels: Vec<u32>, reps: usize) -> ConvergenceLadderConfig {
        ConvergenceLadderConfig {
            scheme,
            particles: n,
            levels,
            repetitions: reps,
            base_seed: 2024,
            horizon: 1.0,
        }
    }

    #[test]
    fn steps_follow_levels() {
        assert_eq!(steps_for_level(4, 1.0).unwrap(), 16);
        assert_eq!(steps_for_level(3, 2.0).unwrap(), 16);
        assert!(steps_for_level(0, 1.0).is_err());
        assert!(steps_for_level(2, 0.3).is_err());
    }

    #[test]
    fn invalid_configs() {
        let s = SchemeSpec::standard_milstein(false);
        assert!(config(s, 4, vec![4, 4], 1).validate().is_err());
        assert!(config(s, 4, vec![5, 4], 1).validate().is_err());
        assert!(config(s, 4, vec![4, 5], 0).validate().is_err());
        assert!(config(s, 0, vec![4, 5], 1).validate().is_err());
        assert!(config(s, 4, vec![4, 5], 1).validate().is_ok());
    }

    #[test]
    fn deterministic_linear_model_has_slope_one() {
        let m = LinearMeanField::new(-1.0, 0.5, 0.0, 1.0).unwrap();
        let cfg = config(SchemeSpec::standard_milstein(false), 2, (4..10).collect(), 1);
        let res = run_convergence_ladder(&m, &cfg, &SimOptions::default()).unwrap();
        let fit = res.fit.unwrap();
        assert!((fit.slope + 1.0).abs() < 0.05, "slope {}", fit.slope);
        assert!(!res.partial);
    }

    #[test]
    fn repetition_order_does_not_matter_and_execution_agrees() {
        let m = make_builtin(Example::Ex1, BuiltinModelParams::default()).unwrap();
        let cfg = config(SchemeSpec::milstein(TamingVariant::Scheme1, true), 5, vec![3, 4, 5], 4);
        let par = run_convergence_ladder(&m, &cfg, &SimOptions::default()).unwrap();
        let seq = run_convergence_ladder(
            &m,
            &cfg,
            &SimOptions {
                execution: Execution::Sequential,
                ..SimOptions::default()
            },
        )
        .unwrap();
        assert_eq!(par, seq);
        // A level computed alone matches the same level inside the ladder.
        let single = run_convergence_ladder(&m, &config(cfg.scheme, 5, vec![4], 4), &SimOptions::default()).unwrap();
        assert_eq!(single.rows[0].rmse.to_bits(), par.rows[1].rmse.to_bits());
        assert!(single.fit.is_none());
    }

    #[test]
    fn divergence_is_flagged_per_level() {
        // Untamed Euler on a quintic drift blows up on coarse grids only.
        struct Blowup;
        impl McKeanVlasovModel for Blowup {
            fn name(&self) -> &str {
                "blowup"
            }
            fn initial_value(&self) -> f64 {
                10.0
            }
            fn drift(&self, x: f64, _: &crate::measure::EmpiricalMeasureView<'_>) -> f64 {
                -x.powi(5)
            }
            fn diffusion(&self, _: f64, _: &crate::measure::EmpiricalMeasureView<'_>) -> f64 {
                0.0
            }
            fn diffusion_state_gradient(&self, _: f64, _: &crate::measure::EmpiricalMeasureView<'_>) -> f64 {
                0.0
            }
            fn diffusion_lions_derivative(&self, _: f64, _: &crate::measure::EmpiricalMeasureView<'_>, _: f64) -> f64 {
                0.0
            }
        }
        let cfg = config(SchemeSpec::tamed_euler(TamingVariant::None), 1, vec![2, 14, 15, 16], 1);
        let res = run_convergence_ladder(&Blowup, &cfg, &SimOptions::default()).unwrap();
        assert!(res.partial);
        assert!(res.rows[0].diverged && res.rows[0].rmse.is_nan());
        assert!(!res.rows[3].diverged && res.rows[3].rmse.is_finite());
        assert!(res.fit.is_some());
    }
}
