//! Lévy areas between the Brownian motions of different particles.
//!
//! Over a step of length δ each particle's path is written as
//! `W(t) = (t/δ) ΔW + B(t)` with the Brownian bridge `B` expanded in the
//! Fourier basis of `[0, δ]`:
//!
//! ```text
//! B(t) = a₀/2 + Σ_r a_r cos(2πrt/δ) + b_r sin(2πrt/δ),   a_r, b_r ~ N(0, δ / (2π²r²))
//! ```
//!
//! Integrating the expansion term by term gives the area of particles `j`, `i`
//!
//! ```text
//! A(j,i) = ΔWʲ Sⁱ − ΔWⁱ Sʲ + π Σ_r r (a_rʲ b_rⁱ − b_rʲ a_rⁱ),   S = Σ_r a_r
//! ```
//!
//! Frequencies beyond the truncation level K are replaced by independent
//! Gaussians with the exact conditional variance of the discarded tail, so
//! the second moment of every area is exact at any K.

use std::f64::consts::PI;
use std::ops::Range;

use super::stream::{Channel, StreamKey};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevyAreaConfig {
    /// Number of bridge frequencies K kept per particle.
    pub truncation_terms: usize,
    /// Add the Gaussian stand-in for frequencies above K.
    pub tail_correction: bool,
}

impl LevyAreaConfig {
    pub fn new(truncation_terms: usize) -> Result<Self> {
        if truncation_terms == 0 {
            return Err(Error::invalid("Lévy-area truncation needs K >= 1"));
        }
        Ok(Self {
            truncation_terms,
            tail_correction: true,
        })
    }

    /// `K = ceil(√M)` for a grid of `steps` steps.
    pub fn for_steps(steps: usize) -> Self {
        let k = (steps.max(1) as f64).sqrt().ceil() as usize;
        Self {
            truncation_terms: k.max(1),
            tail_correction: true,
        }
    }

    pub fn without_tail(mut self) -> Self {
        self.tail_correction = false;
        self
    }
}

/// `Σ_{r > K} 1/r²`.
pub fn bridge_tail_sum(k: usize) -> f64 {
    let head: f64 = (1..=k).rev().map(|r| 1.0 / (r as f64 * r as f64)).sum();
    (PI * PI / 6.0 - head).max(0.0)
}

/// Fourier coefficients of one particle's Brownian bridge over one step.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeCoefficients {
    pub delta: f64,
    /// `a_r`, r = 1..=K
    pub cos: Vec<f64>,
    /// `b_r`, r = 1..=K
    pub sin: Vec<f64>,
}

impl BridgeCoefficients {
    /// The first `k` coefficients for `(seed, particle, step)`. Coefficient r
    /// does not depend on `k`, so expansions of different lengths nest.
    pub fn sample(seed: u64, particle: usize, step: usize, delta: f64, k: usize) -> Self {
        let base = (delta / 2.0).sqrt() / PI;
        let mut cos = Vec::with_capacity(k);
        let mut sin = Vec::with_capacity(k);
        for r in 1..=k {
            let scale = base / r as f64;
            let idx = 2 * (r as u32 - 1);
            cos.push(scale * StreamKey::new(seed, particle, step, Channel::BridgeCoefficient(idx)).standard_normal());
            sin.push(scale * StreamKey::new(seed, particle, step, Channel::BridgeCoefficient(idx + 1)).standard_normal());
        }
        Self { delta, cos, sin }
    }

    pub fn terms(&self) -> usize {
        self.cos.len()
    }

    /// Bridge value `B(t)` for `t ∈ [0, δ]`; zero at both ends.
    pub fn bridge_at(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t / self.delta;
        let mut acc = 0.0;
        for (r, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (s, c) = ((r + 1) as f64 * w).sin_cos();
            acc += a * (c - 1.0) + b * s;
        }
        acc
    }

    fn cos_sum(&self) -> f64 {
        self.cos.iter().sum()
    }
}

/// Truncated-series area `A(j, i)` from the first `k` coefficients of each
/// particle, without any tail term.
pub fn truncated_levy_area(
    coeffs_j: &BridgeCoefficients,
    coeffs_i: &BridgeCoefficients,
    dw_j: f64,
    dw_i: f64,
    k: usize,
) -> f64 {
    let k = k.min(coeffs_j.terms()).min(coeffs_i.terms());
    let s_j: f64 = coeffs_j.cos[..k].iter().sum();
    let s_i: f64 = coeffs_i.cos[..k].iter().sum();
    let mut rot = 0.0;
    for r in 0..k {
        rot += (r + 1) as f64 * (coeffs_j.cos[r] * coeffs_i.sin[r] - coeffs_j.sin[r] * coeffs_i.cos[r]);
    }
    dw_j * s_i - dw_i * s_j + PI * rot
}

struct ParticleSeries {
    coeffs: BridgeCoefficients,
    /// Σ a_r plus the tail stand-in.
    cos_sum: f64,
}

/// Dense antisymmetric matrix of Lévy areas `A(j, i)` for a block of
/// particles, indexed locally from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyAreas {
    n: usize,
    values: Vec<f64>,
}

impl LevyAreas {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.values[j * self.n + i]
    }
}

/// Samples the areas for the particles `particles` (global ids) at `step`.
pub fn sample_levy_areas(
    seed: u64,
    step: usize,
    particles: Range<usize>,
    increments: &[f64],
    delta: f64,
    config: LevyAreaConfig,
    exec: Execution,
) -> Result<LevyAreas> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if config.truncation_terms == 0 {
        return Err(Error::invalid("Lévy-area truncation needs K >= 1"));
    }
    let n = particles.len();
    if increments.len() != n {
        return Err(Error::invalid(format!(
            "expected {n} increments for the particle block, got {}",
            increments.len()
        )));
    }
    let k = config.truncation_terms;
    let tail = bridge_tail_sum(k);
    // Var of Σ_{r>K} a_r, and of the pairwise rotation tail
    let sum_var = delta * tail / (2.0 * PI * PI);
    let pair_sd = (delta * sum_var).sqrt();
    let sum_sd = sum_var.sqrt();
    let first = particles.start;

    let series: Vec<ParticleSeries> = exec.map(n, |p| {
        let id = first + p;
        let coeffs = BridgeCoefficients::sample(seed, id, step, delta, k);
        let mut cos_sum = coeffs.cos_sum();
        if config.tail_correction {
            cos_sum += sum_sd * StreamKey::new(seed, id, step, Channel::BridgeTail).standard_normal();
        }
        ParticleSeries { coeffs, cos_sum }
    });

    // canonical orientation lo < hi; the other is the exact negation
    let area = |lo: usize, hi: usize| -> f64 {
        let (sj, si) = (&series[lo], &series[hi]);
        let (dw_j, dw_i) = (increments[lo], increments[hi]);
        let mut rot = 0.0;
        for r in 0..k {
            rot += (r + 1) as f64
                * (sj.coeffs.cos[r] * si.coeffs.sin[r] - sj.coeffs.sin[r] * si.coeffs.cos[r]);
        }
        let mut a = dw_j * si.cos_sum - dw_i * sj.cos_sum + PI * rot;
        if config.tail_correction {
            let key = StreamKey::new(seed, first + lo, step, Channel::PairTail((first + hi) as u64));
            a += pair_sd * key.standard_normal();
        }
        a
    };

    let rows: Vec<Vec<f64>> = exec.map(n, |j| {
        (0..n)
            .map(|i| match j.cmp(&i) {
                std::cmp::Ordering::Less => area(j, i),
                std::cmp::Ordering::Greater => -area(i, j),
                std::cmp::Ordering::Equal => 0.0,
            })
            .collect()
    });
    Ok(LevyAreas {
        n,
        values: rows.into_iter().flatten().collect(),
    })
}
