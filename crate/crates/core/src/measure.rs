//! Empirical measures over one time slice of the particle system.
//!
//! All reductions run left to right over particle index so that a statistic
//! computed twice from the same slice is bit-identical.

use crate::error::{Error, Result};

/// `u / (1 + u²)`, the bounded transform whose variance drives the Example 5
/// diffusion.
#[inline]
pub fn bounded_ratio(u: f64) -> f64 {
    u / (1.0 + u * u)
}

/// Derivative of [`bounded_ratio`]: `(1 - u²) / (1 + u²)²`.
#[inline]
pub fn bounded_ratio_derivative(u: f64) -> f64 {
    let d = 1.0 + u * u;
    (1.0 - u * u) / (d * d)
}

/// Sufficient statistics shared by the built-in models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureStats {
    pub mean: f64,
    pub second_moment: f64,
    pub sum_sin: f64,
    pub sum_cos: f64,
    pub sum_g: f64,
    pub sum_g2: f64,
}

impl MeasureStats {
    fn compute(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let (mut s1, mut s2, mut ss, mut sc, mut sg, mut sg2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for &x in samples {
            s1 += x;
            s2 += x * x;
            let (sin, cos) = x.sin_cos();
            ss += sin;
            sc += cos;
            let g = bounded_ratio(x);
            sg += g;
            sg2 += g * g;
        }
        MeasureStats {
            mean: s1 / n,
            second_moment: s2 / n,
            sum_sin: ss,
            sum_cos: sc,
            sum_g: sg,
            sum_g2: sg2,
        }
    }
}

/// Read-only view of the uniform empirical measure `(1/N) Σ δ_{x_j}`.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalMeasureView<'a> {
    samples: &'a [f64],
    cached: Option<MeasureStats>,
}

impl<'a> EmpiricalMeasureView<'a> {
    /// View without cached statistics; model evaluations rescan the samples.
    pub fn new(samples: &'a [f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("empirical measure needs at least one sample"));
        }
        Ok(Self {
            samples,
            cached: None,
        })
    }

    /// View with statistics computed once up front.
    pub fn with_stats(samples: &'a [f64]) -> Result<Self> {
        let mut view = Self::new(samples)?;
        view.cached = Some(MeasureStats::compute(samples));
        Ok(view)
    }

    pub fn samples(&self) -> &'a [f64] {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn cached_stats(&self) -> Option<&MeasureStats> {
        self.cached.as_ref()
    }

    /// Cached statistics, or a fresh O(N) computation when none are cached.
    pub fn stats(&self) -> MeasureStats {
        match self.cached {
            Some(s) => s,
            None => MeasureStats::compute(self.samples),
        }
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.samples.len() as f64
    }
}

pub fn mean(view: &EmpiricalMeasureView) -> f64 {
    match view.cached_stats() {
        Some(s) => s.mean,
        None => view.samples().iter().sum::<f64>() / view.len() as f64,
    }
}

/// `(1/N) Σ f(x_j)`.
pub fn integrate(view: &EmpiricalMeasureView, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for &x in view.samples() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: format!("integrand at sample {x}"),
            });
        }
        acc += v;
    }
    Ok(acc / view.len() as f64)
}

/// `(1/N²) Σ_i Σ_j g(x_i, x_j)`, evaluated directly in O(N²).
pub fn double_integrate(view: &EmpiricalMeasureView, g: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let n = view.len() as f64;
    let mut acc = 0.0;
    for &u in view.samples() {
        let mut row = 0.0;
        for &v in view.samples() {
            let val = g(u, v);
            if !val.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("double integrand at ({u}, {v})"),
                });
            }
            row += val;
        }
        acc += row;
    }
    Ok(acc / (n * n))
}

/// One product term `f(u)·h(v)` of a separable kernel.
pub type SeparableTerm<'f> = (&'f dyn Fn(f64) -> f64, &'f dyn Fn(f64) -> f64);

/// Factored O(N) form of [`double_integrate`] for kernels
/// `g(u, v) = Σ_k f_k(u) h_k(v)`.
pub fn double_integrate_separable(view: &EmpiricalMeasureView, terms: &[SeparableTerm]) -> Result<f64> {
    let mut acc = 0.0;
    for (f, h) in terms {
        acc += integrate(view, f)? * integrate(view, h)?;
    }
    Ok(acc)
}

/// Biased empirical variance of `g` under the view, clamped at zero.
pub fn variance_of(view: &EmpiricalMeasureView, g: impl Fn(f64) -> f64) -> Result<f64> {
    let first = integrate(view, &g)?;
    let second = integrate(view, |x| {
        let v = g(x);
        v * v
    })?;
    Ok((second - first * first).max(0.0))
}

/// Exact W₂ between two equal-size one-dimensional empirical measures,
/// realised by matching sorted samples.
pub fn wasserstein2_1d(a: &EmpiricalMeasureView, b: &EmpiricalMeasureView) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "wasserstein2_1d needs equal sample counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let xs = sorted(a.samples())?;
    let ys = sorted(b.samples())?;
    let sq: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sq / xs.len() as f64).sqrt())
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "wasserstein2_1d sample".into(),
        });
    }
    let mut v = samples.to_vec();
    // stable: equal values keep their original index order
    v.sort_by(f64::total_cmp);
    Ok(v)
}
