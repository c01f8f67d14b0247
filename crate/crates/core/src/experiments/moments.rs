use crate::error::{Error, Result};
use crate::model::McKeanVlasovModel;
use crate::schemes::{simulate_with, SchemeSpec, SimOptions, TimeGrid};

/// Ensemble moments along one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub fourth_moment: Vec<f64>,
    /// `(step, particle)` of the first divergence; the vectors then stop at
    /// the last finite node.
    pub diverged_at: Option<(usize, usize)>,
}

impl MomentProfile {
    pub fn max_fourth_moment(&self) -> f64 {
        self.fourth_moment.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Simulates `n` particles and records `(1/N) Σ Yᵢᵖ` for `p = 1, 2, 4` at
/// every node. Divergence ends the profile early and is recorded rather
/// than returned as an error.
pub fn moment_profile(
    model: &(impl McKeanVlasovModel + ?Sized),
    spec: &SchemeSpec,
    grid: TimeGrid,
    n: usize,
    seed: u64,
    opts: &SimOptions,
) -> Result<MomentProfile> {
    let cap = grid.steps() + 1;
    let mut p = MomentProfile {
        times: Vec::with_capacity(cap),
        mean: Vec::with_capacity(cap),
        second_moment: Vec::with_capacity(cap),
        fourth_moment: Vec::with_capacity(cap),
        diverged_at: None,
    };
    let run = simulate_with(model, spec, grid, 0..n, seed, opts, |s| {
        let inv = 1.0 / s.len() as f64;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for &x in &s.positions {
            let x2 = x * x;
            m1 += x;
            m2 += x2;
            m4 += x2 * x2;
        }
        p.times.push(s.time());
        p.mean.push(m1 * inv);
        p.second_moment.push(m2 * inv);
        p.fourth_moment.push(m4 * inv);
    });
    match run {
        Ok(_) => {}
        Err(Error::Diverged { step, particle, .. }) => p.diverged_at = Some((step, particle)),
        Err(e) => return Err(e),
    }
    Ok(p)
}
