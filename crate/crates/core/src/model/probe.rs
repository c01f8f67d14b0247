use super::McKeanVlasovModel;
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasureView;

/// Ratios measured on one sampled pair `(x, y)` under one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDiagnostic {
    pub x: f64,
    pub y: f64,
    pub measure_index: usize,
    /// `⟨x − y, b(x, μ) − b(y, μ)⟩ / |x − y|²`
    pub one_sided_ratio: f64,
    /// `|σ(x, μ) − σ(y, μ)| / |x − y|`
    pub lipschitz_ratio: f64,
}

impl PairDiagnostic {
    fn violates(&self, bound: f64) -> bool {
        !(self.one_sided_ratio.is_finite() && self.lipschitz_ratio.is_finite())
            || self.one_sided_ratio > bound
            || self.lipschitz_ratio > bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub pairs: Vec<PairDiagnostic>,
    /// Pairs with `x == y`, which carry no information.
    pub skipped: usize,
    pub max_one_sided_ratio: f64,
    pub max_lipschitz_ratio: f64,
    /// Indices into `pairs` whose ratios are non-finite or exceed the bound.
    pub violations: Vec<usize>,
}

impl AssumptionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Spot-checks the one-sided Lipschitz condition on the drift and the
/// Lipschitz condition on the diffusion over every distinct pair of
/// `states`, under each of `measures`. Ratios above `tolerance` are flagged.
pub fn probe_assumptions(
    model: &dyn McKeanVlasovModel,
    states: &[f64],
    measures: &[EmpiricalMeasureView],
    tolerance: f64,
) -> Result<AssumptionReport> {
    if states.len() < 2 || measures.is_empty() {
        return Err(Error::invalid(
            "probe_assumptions needs at least two states and one measure",
        ));
    }
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (m, mu) in measures.iter().enumerate() {
        for (i, &x) in states.iter().enumerate() {
            for &y in &states[i + 1..] {
                if x == y {
                    skipped += 1;
                    continue;
                }
                let d = x - y;
                let db = model.drift(x, mu) - model.drift(y, mu);
                let ds = model.diffusion(x, mu) - model.diffusion(y, mu);
                pairs.push(PairDiagnostic {
                    x,
                    y,
                    measure_index: m,
                    one_sided_ratio: d * db / (d * d),
                    lipschitz_ratio: ds.abs() / d.abs(),
                });
            }
        }
    }
    let max_one_sided_ratio = pairs.iter().map(|p| p.one_sided_ratio).fold(f64::NEG_INFINITY, f64::max);
    let max_lipschitz_ratio = pairs.iter().map(|p| p.lipschitz_ratio).fold(f64::NEG_INFINITY, f64::max);
    let violations = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.violates(tolerance))
        .map(|(i, _)| i)
        .collect();
    Ok(AssumptionReport {
        pairs,
        skipped,
        max_one_sided_ratio,
        max_lipschitz_ratio,
        violations,
    })
}
