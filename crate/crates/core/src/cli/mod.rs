//! Command-line front end.
//!
//! Settings come from an optional `key = value` file (`--config`) and from
//! flags; flags win. The effective settings are echoed into the output, which
//! is written as CSV or JSON to `--out` or stdout. Exit codes: 0 success,
//! 1 usage, 2 I/O, 3 divergence (partial output written), 4 a validation
//! check failed.

mod config;
mod output;

pub use config::{parse_config, Command, ExperimentConfig, OutputFormat};
pub use output::render;

use std::ffi::OsString;
use std::io::Write;

use crate::error::Error;
use crate::exec::with_workers;
use crate::experiments::{
    moment_profile, run_convergence_ladder, run_lderiv_decay, run_meanfield_ou_oracle, run_poc_split,
    ConvergenceLadderConfig, ConvergenceResult, DecayConfig, MomentProfile, OuOracleConfig, OuOracleReport, PocConfig,
    SweepResult,
};
use crate::model::make_builtin;
use crate::schemes::{SchemeKind, SchemeSpec, TimeGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_VALIDATION_FAILED: i32 = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Simulate(MomentProfile),
    Convergence(ConvergenceResult),
    Sweep(SweepResult),
    Validate(OuOracleReport),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Simulate(p) if p.diverged_at.is_some() => EXIT_PARTIAL,
            Outcome::Convergence(r) if r.partial => EXIT_PARTIAL,
            Outcome::Sweep(r) if r.partial => EXIT_PARTIAL,
            Outcome::Validate(r) if !r.pass => EXIT_VALIDATION_FAILED,
            _ => EXIT_OK,
        }
    }
}

/// Runs the experiment described by `cfg` on the calling thread pool.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let opts = cfg.sim_options();
    if cfg.command == Command::Validate {
        let report = run_meanfield_ou_oracle(
            &OuOracleConfig {
                a: cfg.drift_a,
                c: cfg.params.c,
                s: cfg.params.sigma_param,
                x0: cfg.params.x0,
                horizon: cfg.horizon,
                steps: cfg.steps,
                particles: cfg.particles,
                seed: cfg.seed,
            },
            &opts,
        )?;
        return Ok(Outcome::Validate(report));
    }
    let example = cfg
        .model
        .ok_or_else(|| CliError::Usage("missing required setting 'model' (--model ex1..ex5)".into()))?;
    let model = make_builtin(example, cfg.params)?;
    let scheme = cfg.scheme_spec()?;
    Ok(match cfg.command {
        Command::Simulate => {
            let grid = TimeGrid::new(cfg.horizon, cfg.steps)?;
            Outcome::Simulate(moment_profile(&model, &scheme, grid, cfg.particles, cfg.seed, &opts)?)
        }
        Command::Convergence => Outcome::Convergence(run_convergence_ladder(
            &model,
            &ConvergenceLadderConfig {
                scheme,
                particles: cfg.particles,
                levels: cfg.levels.clone(),
                repetitions: cfg.repetitions,
                base_seed: cfg.seed,
                horizon: cfg.horizon,
            },
            &opts,
        )?),
        Command::LderivDecay => {
            if scheme.kind() != SchemeKind::Milstein {
                return Err(CliError::Usage(
                    "lderiv-decay compares tamed Euler against '--scheme milstein'".into(),
                ));
            }
            Outcome::Sweep(run_lderiv_decay(
                &model,
                &DecayConfig {
                    reference: SchemeSpec::tamed_euler(scheme.taming()),
                    full: scheme,
                    steps: cfg.steps,
                    horizon: cfg.horizon,
                    particle_levels: cfg.particle_levels.clone(),
                    repetitions: cfg.repetitions,
                    base_seed: cfg.seed,
                },
                &opts,
            )?)
        }
        Command::Poc => Outcome::Sweep(run_poc_split(
            &model,
            &PocConfig {
                scheme,
                steps: cfg.steps,
                horizon: cfg.horizon,
                particle_levels: cfg.particle_levels.clone(),
                repetitions: cfg.repetitions,
                base_seed: cfg.seed,
            },
            &opts,
        )?),
        Command::Validate => unreachable!("handled above"),
    })
}

/// Writes rendered output to the configured path or to `stdout`.
pub fn emit(cfg: &ExperimentConfig, outcome: &Outcome, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = render(cfg, outcome);
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(cfg) => cfg,
        Err(config::ParseOutcome::Help(text)) => {
            let _ = write!(stdout, "{text}");
            return EXIT_OK;
        }
        Err(config::ParseOutcome::Error(e)) => {
            let _ = writeln!(stderr, "mvsde: {e}");
            return e.exit_code();
        }
    };
    let outcome = match cfg.workers {
        Some(w) => with_workers(w, || execute(&cfg)),
        None => execute(&cfg),
    };
    let result = outcome.and_then(|o| emit(&cfg, &o, stdout).map(|_| o.exit_code()));
    match result {
        Ok(code) => {
            if code == EXIT_PARTIAL {
                let _ = writeln!(stderr, "mvsde: divergence detected; partial results written");
            } else if code == EXIT_VALIDATION_FAILED {
                let _ = writeln!(stderr, "mvsde: validation check failed");
            }
            code
        }
        Err(e) => {
            let _ = writeln!(stderr, "mvsde: {e}");
            e.exit_code()
        }
    }
}
