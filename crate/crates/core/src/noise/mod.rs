//! Brownian increments and iterated Itô integrals for the particle system.
//!
//! Everything is addressed by `(seed, particle, step)` so that paths are
//! reproducible whatever the scheduling, and coarse grids are driven by
//! exact aggregation of fine-grid noise.

mod levy;
mod stream;

pub use levy::{
    bridge_tail_sum, sample_levy_areas, truncated_levy_area, BridgeCoefficients, LevyAreaConfig, LevyAreas,
};
pub use stream::{derive_seed, Channel, StreamKey};

use std::ops::Range;

use crate::error::{Error, Result};
use crate::exec::Execution;

/// `∫∫ dWⁱ dWⁱ = (ΔW² − δ) / 2` over one step.
#[inline]
pub fn diagonal_iterated(increment: f64, delta: f64) -> f64 {
    (increment * increment - delta) / 2.0
}

/// Increment over two consecutive fine steps.
#[inline]
pub fn coarsen_increments(fine_a: f64, fine_b: f64) -> f64 {
    fine_a + fine_b
}

/// Dense matrix of iterated integrals `I(j, i) = ∫ (Wʲ_s − Wʲ_{t_n}) dWⁱ_s`
/// for a block of particles. Diagonal entries hold the diagonal integral.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossIterated {
    n: usize,
    values: Vec<f64>,
}

impl CrossIterated {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `I(j, i)`.
    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n + i]
    }

    /// Row `j`: `I(j, ·)`.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    fn from_areas(increments: &[f64], diagonal: &[f64], areas: &LevyAreas) -> Self {
        let n = increments.len();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(if i == j {
                    diagonal[i]
                } else {
                    0.5 * increments[j] * increments[i] + areas.get(j, i)
                });
            }
        }
        Self { n, values }
    }

    fn restrict(&self, range: Range<usize>) -> Self {
        let n = range.len();
        let mut values = Vec::with_capacity(n * n);
        for j in range.clone() {
            values.extend_from_slice(&self.row(j)[range.clone()]);
        }
        Self { n, values }
    }
}

/// Noise driving one step of the particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBlock {
    delta: f64,
    increments: Vec<f64>,
    diagonal: Vec<f64>,
    cross: Option<CrossIterated>,
}

impl NoiseBlock {
    /// Block from given increments; the diagonal integrals follow from them.
    pub fn from_increments(delta: f64, increments: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        let diagonal = increments.iter().map(|&w| diagonal_iterated(w, delta)).collect();
        Ok(Self {
            delta,
            increments,
            diagonal,
            cross: None,
        })
    }

    /// Attaches an explicit cross-integral matrix. Off-diagonal entries are
    /// taken as given; diagonal entries are overwritten with the exact value.
    pub fn with_cross(mut self, cross: Vec<Vec<f64>>) -> Result<Self> {
        let n = self.increments.len();
        if cross.len() != n || cross.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("cross-integral matrix must be {n}x{n}")));
        }
        let mut values: Vec<f64> = cross.into_iter().flatten().collect();
        for i in 0..n {
            values[i * n + i] = self.diagonal[i];
        }
        self.cross = Some(CrossIterated { n, values });
        Ok(self)
    }

    /// All-zero increments; handy for deterministic checks.
    pub fn zeros(delta: f64, n: usize, with_cross: bool) -> Result<Self> {
        let block = Self::from_increments(delta, vec![0.0; n])?;
        if with_cross {
            block.with_cross(vec![vec![0.0; n]; n])
        } else {
            Ok(block)
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn diagonal_iterated(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn cross_iterated(&self) -> Option<&CrossIterated> {
        self.cross.as_ref()
    }

    /// Sub-block for a contiguous range of local particle indices.
    pub fn restrict(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::invalid(format!(
                "cannot restrict a {}-particle block to {range:?}",
                self.len()
            )));
        }
        Ok(Self {
            delta: self.delta,
            increments: self.increments[range.clone()].to_vec(),
            diagonal: self.diagonal[range.clone()].to_vec(),
            cross: self.cross.as_ref().map(|c| c.restrict(range)),
        })
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("step size must be positive, got {delta}")))
    }
}

/// Seed-addressed source of noise blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    pub seed: u64,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    #[inline]
    pub fn increment(&self, particle: usize, step: usize, delta: f64) -> f64 {
        delta.sqrt() * StreamKey::new(self.seed, particle, step, Channel::Increment).standard_normal()
    }

    pub fn increments(&self, step: usize, particles: Range<usize>, delta: f64, exec: Execution) -> Result<Vec<f64>> {
        check_delta(delta)?;
        if particles.is_empty() {
            return Err(Error::invalid("need at least one particle"));
        }
        let first = particles.start;
        Ok(exec.map(particles.len(), |p| self.increment(first + p, step, delta)))
    }

    /// Noise for `particles` (global ids) at `step`; cross integrals are
    /// sampled only when `levy` is given.
    pub fn block(
        &self,
        step: usize,
        particles: Range<usize>,
        delta: f64,
        levy: Option<LevyAreaConfig>,
        exec: Execution,
    ) -> Result<NoiseBlock> {
        let increments = self.increments(step, particles.clone(), delta, exec)?;
        let mut block = NoiseBlock::from_increments(delta, increments)?;
        if let Some(cfg) = levy {
            let areas = sample_levy_areas(self.seed, step, particles, &block.increments, delta, cfg, exec)?;
            block.cross = Some(CrossIterated::from_areas(&block.increments, &block.diagonal, &areas));
        }
        Ok(block)
    }
}

/// `N` increments `~ N(0, δ)` for `step` under `seed`.
pub fn sample_increments(seed: u64, step_index: usize, n: usize, delta: f64) -> Result<Vec<f64>> {
    NoiseSource::new(seed).increments(step_index, 0..n, delta, Execution::default())
}

/// Cross iterated integrals for particles `0..increments.len()`.
pub fn sample_cross_iterated(
    seed: u64,
    step_index: usize,
    increments: &[f64],
    delta: f64,
    config: LevyAreaConfig,
) -> Result<CrossIterated> {
    check_delta(delta)?;
    let diagonal: Vec<f64> = increments.iter().map(|&w| diagonal_iterated(w, delta)).collect();
    let areas = sample_levy_areas(
        seed,
        step_index,
        0..increments.len(),
        increments,
        delta,
        config,
        Execution::default(),
    )?;
    Ok(CrossIterated::from_areas(increments, &diagonal, &areas))
}

/// Chains two consecutive fine blocks into one coarse block of step `2δ`.
///
/// Off-diagonal integrals use `I_c(j,i) = I₁(j,i) + I₂(j,i) + ΔW₁ʲ ΔW₂ⁱ`.
/// The diagonal is recomputed from the coarse increment, which equals the
/// same chaining rule up to rounding.
pub fn coarsen_iterated(first: &NoiseBlock, second: &NoiseBlock) -> Result<NoiseBlock> {
    if first.len() != second.len() {
        return Err(Error::invalid(format!(
            "cannot coarsen blocks of {} and {} particles",
            first.len(),
            second.len()
        )));
    }
    if first.delta != second.delta {
        return Err(Error::invalid(format!(
            "cannot coarsen blocks with step sizes {} and {}",
            first.delta, second.delta
        )));
    }
    let increments: Vec<f64> = first
        .increments
        .iter()
        .zip(&second.increments)
        .map(|(&a, &b)| coarsen_increments(a, b))
        .collect();
    let mut coarse = NoiseBlock::from_increments(first.delta + second.delta, increments)?;
    match (&first.cross, &second.cross) {
        (None, None) => {}
        (Some(c1), Some(c2)) => {
            let n = first.len();
            let mut values = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    values.push(if i == j {
                        coarse.diagonal[i]
                    } else {
                        c1.get(j, i) + c2.get(j, i) + first.increments[j] * second.increments[i]
                    });
                }
            }
            coarse.cross = Some(CrossIterated { n, values });
        }
        _ => {
            return Err(Error::invalid(
                "cannot coarsen a block with cross integrals against one without",
            ))
        }
    }
    Ok(coarse)
}
