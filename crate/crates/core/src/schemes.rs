//! Explicit time steppers for the interacting particle system.
//!
//! One step of particle `i` reads the frozen empirical measure `μ` of the
//! input state and computes
//!
//! ```text
//! Y'ᵢ = Yᵢ + b_δ(Yᵢ, μ) δ + σ(Yᵢ, μ) ΔWⁱ
//!          + ∇σ(Yᵢ, μ) σ(Yᵢ, μ) I(i, i)                      (state-gradient term)
//!          + (1/N) Σ_j D^Lσ(Yᵢ, μ)(Y_j) σ(Y_j, μ) I(j, i)     (Lions term)
//! ```
//!
//! where `b_δ` is the tamed drift and `I(j, i)` are the iterated integrals of
//! the [`NoiseBlock`].

use std::ops::Range;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measure::EmpiricalMeasureView;
use crate::model::{tame, McKeanVlasovModel, TamingVariant};
use crate::noise::{coarsen_iterated, LevyAreaConfig, NoiseBlock, NoiseSource};

/// Positions beyond this magnitude count as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e150;

/// Uniform partition of `[0, T]` into `M` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    delta: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::invalid("time grid needs at least one step"));
        }
        Ok(Self {
            horizon,
            steps,
            delta: horizon / steps as f64,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `t_n = n δ`, with the last node pinned to `T`.
    pub fn node(&self, n: usize) -> f64 {
        if n >= self.steps {
            self.horizon
        } else {
            n as f64 * self.delta
        }
    }

    /// Grid with half as many steps over the same horizon.
    pub fn coarsened(&self) -> Result<Self> {
        if !self.steps.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "coarsening needs an even step count, got {}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    TamedEuler,
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    kind: SchemeKind,
    taming: TamingVariant,
    include_state_gradient_term: bool,
    include_lions_term: bool,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, taming: TamingVariant, gradient: bool, lions: bool) -> Result<Self> {
        if kind == SchemeKind::TamedEuler && (gradient || lions) {
            return Err(Error::invalid(
                "the tamed Euler scheme has no state-gradient or Lions correction",
            ));
        }
        Ok(Self {
            kind,
            taming,
            include_state_gradient_term: gradient,
            include_lions_term: lions,
        })
    }

    pub fn tamed_euler(taming: TamingVariant) -> Self {
        Self {
            kind: SchemeKind::TamedEuler,
            taming,
            include_state_gradient_term: false,
            include_lions_term: false,
        }
    }

    /// Tamed Milstein with the state-gradient term and optional Lions term.
    pub fn milstein(taming: TamingVariant, lions: bool) -> Self {
        Self {
            kind: SchemeKind::Milstein,
            taming,
            include_state_gradient_term: true,
            include_lions_term: lions,
        }
    }

    /// Untamed Milstein for globally Lipschitz drifts.
    pub fn standard_milstein(lions: bool) -> Self {
        Self::milstein(TamingVariant::None, lions)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn taming(&self) -> TamingVariant {
        self.taming
    }

    pub fn include_state_gradient_term(&self) -> bool {
        self.include_state_gradient_term
    }

    pub fn include_lions_term(&self) -> bool {
        self.include_lions_term
    }
}

/// Particle positions at one node of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub positions: Vec<f64>,
    pub step_index: usize,
    pub grid: TimeGrid,
}

impl EnsembleState {
    /// Every particle at the model's initial value.
    pub fn initial(model: &(impl McKeanVlasovModel + ?Sized), grid: TimeGrid, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        Ok(Self {
            positions: vec![model.initial_value(); n],
            step_index: 0,
            grid,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.grid.node(self.step_index)
    }
}

/// Advances every particle by one step.
///
/// Fails with [`Error::Diverged`] (lowest particle index first) when a
/// coefficient or a new position is non-finite or exceeds
/// [`DIVERGENCE_THRESHOLD`]; the reported step is the node being computed.
pub fn step_ensemble(
    state: &EnsembleState,
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    noise: &NoiseBlock,
    exec: Execution,
) -> Result<EnsembleState> {
    let n = state.len();
    let delta = state.grid.delta();
    if noise.len() != n {
        return Err(Error::invalid(format!(
            "noise block has {} particles, ensemble has {n}",
            noise.len()
        )));
    }
    if (noise.delta() - delta).abs() > 1e-12 * delta {
        return Err(Error::invalid(format!(
            "noise step {} does not match grid step {delta}",
            noise.delta()
        )));
    }
    let cross = match (spec.include_lions_term, noise.cross_iterated()) {
        (true, None) => {
            return Err(Error::invalid(
                "the Lions term needs a noise block with cross iterated integrals",
            ))
        }
        (true, Some(c)) => Some(c),
        (false, _) => None,
    };
    if state.step_index >= state.grid.steps() {
        return Err(Error::invalid("ensemble is already at the final node"));
    }

    let pos = &state.positions;
    let mu = EmpiricalMeasureView::with_stats(pos)?;
    let next_step = state.step_index + 1;
    let milstein = spec.kind == SchemeKind::Milstein;
    let gradient = milstein && spec.include_state_gradient_term;

    let sigmas = if cross.is_some() {
        Some(exec.map(n, |j| model.diffusion(pos[j], &mu)))
    } else {
        None
    };
    let inv_n = 1.0 / n as f64;
    let dw = noise.increments();
    let diag = noise.diagonal_iterated();

    let positions = exec.try_map(n, |i| {
        let y = pos[i];
        let b = model.drift(y, &mu);
        if !b.is_finite() {
            return Err(Error::Diverged {
                step: next_step,
                particle: i,
                value: b,
            });
        }
        let s = match &sigmas {
            Some(v) => v[i],
            None => model.diffusion(y, &mu),
        };
        let mut next = y + tame(b, delta, spec.taming) * delta + s * dw[i];
        if gradient {
            next += model.diffusion_state_gradient(y, &mu) * s * diag[i];
        }
        if let (Some(cross), Some(sig)) = (cross, &sigmas) {
            let mut acc = 0.0;
            for j in 0..n {
                acc += model.diffusion_lions_derivative(y, &mu, pos[j]) * sig[j] * cross.get(j, i);
            }
            next += acc * inv_n;
        }
        if !next.is_finite() || next.abs() > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged {
                step: next_step,
                particle: i,
                value: next,
            });
        }
        Ok(next)
    })?;

    Ok(EnsembleState {
        positions,
        step_index: next_step,
        grid: state.grid,
    })
}

/// Execution and Lévy-area settings shared by the simulation drivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub execution: Execution,
    /// Overrides the default truncation `K = ceil(√M)`.
    pub levy_terms: Option<usize>,
    pub levy_tail: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            levy_terms: None,
            levy_tail: true,
        }
    }
}

impl SimOptions {
    pub fn sequential() -> Self {
        Self {
            execution: Execution::Sequential,
            ..Self::default()
        }
    }

    /// Lévy-area settings for a grid of `steps` steps.
    pub fn levy_config(&self, steps: usize) -> Result<LevyAreaConfig> {
        let mut cfg = match self.levy_terms {
            Some(k) => LevyAreaConfig::new(k)?,
            None => LevyAreaConfig::for_steps(steps),
        };
        cfg.tail_correction = self.levy_tail;
        Ok(cfg)
    }
}

/// Runs the particles `particles` (global noise ids) from the initial value
/// to `T`, calling `observe` on every state including the initial one.
pub fn simulate_with(
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    grid: TimeGrid,
    particles: Range<usize>,
    seed: u64,
    opts: &SimOptions,
    mut observe: impl FnMut(&EnsembleState),
) -> Result<EnsembleState> {
    let mut state = EnsembleState::initial(model, grid, particles.len())?;
    observe(&state);
    let source = NoiseSource::new(seed);
    let levy = if spec.include_lions_term {
        Some(opts.levy_config(grid.steps())?)
    } else {
        None
    };
    for n in 0..grid.steps() {
        let noise = source.block(n, particles.clone(), grid.delta(), levy, opts.execution)?;
        state = step_ensemble(&state, model, spec, &noise, opts.execution)?;
        observe(&state);
    }
    Ok(state)
}

/// Terminal state only.
pub fn simulate_terminal(
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    grid: TimeGrid,
    particles: Range<usize>,
    seed: u64,
    opts: &SimOptions,
) -> Result<EnsembleState> {
    simulate_with(model, spec, grid, particles, seed, opts, |_| {})
}

/// States at every node of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<EnsembleState>,
}

impl Trajectory {
    pub fn terminal(&self) -> &EnsembleState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

pub fn simulate_path(
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    grid: TimeGrid,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(grid.steps() + 1);
    simulate_with(model, spec, grid, 0..n, seed, opts, |s| states.push(s.clone()))?;
    Ok(Trajectory { states })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledTerminal {
    pub fine: EnsembleState,
    pub coarse: EnsembleState,
}

/// Fine and coarse (`M/2` steps) runs driven by the same Brownian paths.
/// Coarse noise is built only by coarsening consecutive fine blocks.
pub fn simulate_coupled_pair(
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    grid_fine: TimeGrid,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<CoupledTerminal> {
    let grid_coarse = grid_fine.coarsened()?;
    let mut fine = EnsembleState::initial(model, grid_fine, n)?;
    let mut coarse = EnsembleState::initial(model, grid_coarse, n)?;
    let source = NoiseSource::new(seed);
    let levy = if spec.include_lions_term {
        Some(opts.levy_config(grid_fine.steps())?)
    } else {
        None
    };
    let delta = grid_fine.delta();
    for k in 0..grid_coarse.steps() {
        let first = source.block(2 * k, 0..n, delta, levy, opts.execution)?;
        let second = source.block(2 * k + 1, 0..n, delta, levy, opts.execution)?;
        fine = step_ensemble(&fine, model, spec, &first, opts.execution)?;
        fine = step_ensemble(&fine, model, spec, &second, opts.execution)?;
        let merged = coarsen_iterated(&first, &second)?;
        coarse = step_ensemble(&coarse, model, spec, &merged, opts.execution)?;
    }
    Ok(CoupledTerminal { fine, coarse })
}
