use std::fmt;
use std::str::FromStr;

use super::McKeanVlasovModel;
use crate::error::{Error, Result};
use crate::measure::{bounded_ratio, bounded_ratio_derivative, EmpiricalMeasureView};

/// The five benchmark equations. All share the drift core `(σ²/2)x − x³`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    /// Mean-coupled drift, diffusion `E[X]`.
    Ex1,
    /// Mean-coupled drift, diffusion `x`.
    Ex2,
    /// Drift and diffusion with the interaction `∫ sin(x − y) μ(dy)`.
    Ex3,
    /// Diffusion `∬ sin(u + v) μ(du) μ(dv)`.
    Ex4,
    /// Diffusion `exp(−Var_μ[u / (1 + u²)])`.
    Ex5,
}

impl Example {
    pub const ALL: [Example; 5] = [Example::Ex1, Example::Ex2, Example::Ex3, Example::Ex4, Example::Ex5];

    pub fn id(self) -> &'static str {
        match self {
            Example::Ex1 => "ex1",
            Example::Ex2 => "ex2",
            Example::Ex3 => "ex3",
            Example::Ex4 => "ex4",
            Example::Ex5 => "ex5",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Example::ALL
            .into_iter()
            .find(|e| e.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown model '{s}' (expected ex1..ex5)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinModelParams {
    /// The σ constant of the drift core `(σ²/2)x`.
    pub sigma_param: f64,
    /// Weight of the mean in the Example 1/2 drift.
    pub c: f64,
    pub x0: f64,
}

impl Default for BuiltinModelParams {
    fn default() -> Self {
        Self {
            sigma_param: 1.5,
            c: 0.5,
            x0: 1.0,
        }
    }
}

impl BuiltinModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_param.is_finite() && self.sigma_param > 0.0) {
            return Err(Error::invalid(format!(
                "sigma must be positive and finite, got {}",
                self.sigma_param
            )));
        }
        if !self.c.is_finite() || !self.x0.is_finite() {
            return Err(Error::invalid("c and x0 must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinModel {
    example: Example,
    params: BuiltinModelParams,
    half_sigma_sq: f64,
}

pub fn make_builtin(which: Example, params: BuiltinModelParams) -> Result<BuiltinModel> {
    params.validate()?;
    Ok(BuiltinModel {
        example: which,
        params,
        half_sigma_sq: 0.5 * params.sigma_param * params.sigma_param,
    })
}

impl BuiltinModel {
    pub fn example(&self) -> Example {
        self.example
    }

    pub fn params(&self) -> &BuiltinModelParams {
        &self.params
    }

    #[inline]
    fn drift_core(&self, x: f64) -> f64 {
        self.half_sigma_sq * x - x * x * x
    }
}

/// `∫ sin(x − y) μ(dy)` from the cached trigonometric sums.
#[inline]
fn sin_interaction(x: f64, mean_sin: f64, mean_cos: f64) -> f64 {
    let (s, c) = x.sin_cos();
    s * mean_cos - c * mean_sin
}

/// `∫ cos(x − y) μ(dy)` from the cached trigonometric sums.
#[inline]
fn cos_interaction(x: f64, mean_sin: f64, mean_cos: f64) -> f64 {
    let (s, c) = x.sin_cos();
    c * mean_cos + s * mean_sin
}

fn trig_means(mu: &EmpiricalMeasureView) -> (f64, f64) {
    let st = mu.stats();
    let n = mu.len() as f64;
    (st.sum_sin / n, st.sum_cos / n)
}

fn ratio_variance(mu: &EmpiricalMeasureView) -> (f64, f64) {
    let st = mu.stats();
    let n = mu.len() as f64;
    let m1 = st.sum_g / n;
    let var = (st.sum_g2 / n - m1 * m1).max(0.0);
    (var, m1)
}

impl McKeanVlasovModel for BuiltinModel {
    fn name(&self) -> &str {
        self.example.id()
    }

    fn initial_value(&self) -> f64 {
        self.params.x0
    }

    fn drift(&self, x: f64, mu: &EmpiricalMeasureView) -> f64 {
        match self.example {
            Example::Ex1 | Example::Ex2 => self.drift_core(x) + self.params.c * mu.stats().mean,
            Example::Ex3 => {
                let (ms, mc) = trig_means(mu);
                self.drift_core(x) + sin_interaction(x, ms, mc)
            }
            Example::Ex4 | Example::Ex5 => self.drift_core(x) + mu.stats().mean,
        }
    }

    fn diffusion(&self, x: f64, mu: &EmpiricalMeasureView) -> f64 {
        match self.example {
            Example::Ex1 => mu.stats().mean,
            Example::Ex2 => x,
            Example::Ex3 => {
                let (ms, mc) = trig_means(mu);
                x + sin_interaction(x, ms, mc)
            }
            Example::Ex4 => {
                // ∬ sin(u + v) = 2 (∫ sin)(∫ cos)
                let (ms, mc) = trig_means(mu);
                2.0 * ms * mc
            }
            Example::Ex5 => (-ratio_variance(mu).0).exp(),
        }
    }

    fn diffusion_state_gradient(&self, x: f64, mu: &EmpiricalMeasureView) -> f64 {
        match self.example {
            Example::Ex2 => 1.0,
            Example::Ex3 => {
                let (ms, mc) = trig_means(mu);
                1.0 + cos_interaction(x, ms, mc)
            }
            Example::Ex1 | Example::Ex4 | Example::Ex5 => 0.0,
        }
    }

    fn diffusion_lions_derivative(&self, x: f64, mu: &EmpiricalMeasureView, y: f64) -> f64 {
        match self.example {
            Example::Ex1 => 1.0,
            Example::Ex2 => 0.0,
            Example::Ex3 => -(x - y).cos(),
            Example::Ex4 => {
                let (ms, mc) = trig_means(mu);
                let (sy, cy) = y.sin_cos();
                2.0 * (cy * mc - sy * ms)
            }
            Example::Ex5 => {
                let (var, mean_g) = ratio_variance(mu);
                let gp = bounded_ratio_derivative(y);
                (-var).exp() * (-2.0 * bounded_ratio(y) * gp + 2.0 * gp * mean_g)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{double_integrate, integrate, variance_of};

    fn model(e: Example) -> BuiltinModel {
        make_builtin(e, BuiltinModelParams::default()).unwrap()
    }

    fn sample_cloud() -> Vec<f64> {
        (0..23).map(|i| 1.3 * ((i * 7 % 23) as f64 / 23.0 - 0.4) + 0.2 * (i as f64).cos()).collect()
    }

    #[test]
    fn ex1_drift_at_unit_mean() {
        let xs = [1.0, 1.0, 1.0];
        let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
        assert_eq!(model(Example::Ex1).drift(1.0, &mu), 0.625);
    }

    #[test]
    fn ex3_lions_derivative_on_diagonal() {
        let xs = [0.4];
        let mu = EmpiricalMeasureView::new(&xs).unwrap();
        for y in [-2.0, 0.0, 0.37, 5.0] {
            assert_eq!(model(Example::Ex3).diffusion_lions_derivative(y, &mu, y), -1.0);
        }
    }

    #[test]
    fn ex5_diffusion_under_dirac_is_one() {
        let xs = [0.8; 6];
        let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
        assert_eq!(model(Example::Ex5).diffusion(0.3, &mu), 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            BuiltinModelParams { sigma_param: 0.0, ..Default::default() },
            BuiltinModelParams { sigma_param: -1.0, ..Default::default() },
            BuiltinModelParams { c: f64::NAN, ..Default::default() },
        ] {
            assert!(make_builtin(Example::Ex1, p).is_err());
        }
    }

    #[test]
    fn parse_ids() {
        assert_eq!("ex4".parse::<Example>().unwrap(), Example::Ex4);
        assert_eq!("EX2".parse::<Example>().unwrap(), Example::Ex2);
        assert!("ex6".parse::<Example>().is_err());
    }

    // Cached trig/ratio forms against direct integrals over the samples.
    #[test]
    fn closed_forms_match_direct_integrals() {
        let xs = sample_cloud();
        let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
        let plain = EmpiricalMeasureView::new(&xs).unwrap();
        let x = 0.77;
        let tol = 1e-13;

        let ex3 = model(Example::Ex3);
        let sin_int = integrate(&plain, |y| (x - y).sin()).unwrap();
        let cos_int = integrate(&plain, |y| (x - y).cos()).unwrap();
        assert!((ex3.diffusion(x, &mu) - (x + sin_int)).abs() < tol);
        assert!((ex3.drift(x, &mu) - (1.125 * x - x * x * x + sin_int)).abs() < tol);
        assert!((ex3.diffusion_state_gradient(x, &mu) - (1.0 + cos_int)).abs() < tol);

        let ex4 = model(Example::Ex4);
        let dbl = double_integrate(&plain, |u, v| (u + v).sin()).unwrap();
        assert!((ex4.diffusion(x, &mu) - dbl).abs() < tol);
        let y = -0.3;
        let dl = 2.0 * integrate(&plain, |u| (u + y).cos()).unwrap();
        assert!((ex4.diffusion_lions_derivative(x, &mu, y) - dl).abs() < tol);

        let ex5 = model(Example::Ex5);
        let var = variance_of(&plain, bounded_ratio).unwrap();
        assert!((ex5.diffusion(x, &mu) - (-var).exp()).abs() < tol);
    }

    // Lions derivatives against a finite-difference probe: moving one atom
    // y_k by h changes σ(x, μ) by (h/N) D^L σ(x, μ)(y_k) to first order.
    #[test]
    fn lions_derivatives_match_atom_perturbation() {
        let xs = sample_cloud();
        let n = xs.len() as f64;
        let x = 0.41;
        let h = 1e-6;
        for e in Example::ALL {
            let m = model(e);
            for k in [0, 5, 17] {
                let mut up = xs.clone();
                up[k] += h;
                let mut dn = xs.clone();
                dn[k] -= h;
                let vu = EmpiricalMeasureView::with_stats(&up).unwrap();
                let vd = EmpiricalMeasureView::with_stats(&dn).unwrap();
                let fd = (m.diffusion(x, &vu) - m.diffusion(x, &vd)) / (2.0 * h) * n;
                let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
                let exact = m.diffusion_lions_derivative(x, &mu, xs[k]);
                assert!((fd - exact).abs() < 1e-6, "{e}: fd {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn state_gradients_match_finite_difference() {
        let xs = sample_cloud();
        let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
        let h = 1e-6;
        for e in Example::ALL {
            let m = model(e);
            for x in [-1.1, 0.2, 1.9] {
                let fd = (m.diffusion(x + h, &mu) - m.diffusion(x - h, &mu)) / (2.0 * h);
                assert!((fd - m.diffusion_state_gradient(x, &mu)).abs() < 1e-7, "{e}");
            }
        }
    }

    #[test]
    fn measure_only_diffusions_ignore_state() {
        let xs = sample_cloud();
        let mu = EmpiricalMeasureView::with_stats(&xs).unwrap();
        for e in [Example::Ex1, Example::Ex4, Example::Ex5] {
            let m = model(e);
            assert_eq!(m.diffusion(-3.0, &mu), m.diffusion(2.5, &mu));
        }
    }

    #[test]
    fn coefficients_are_permutation_invariant() {
        let xs = sample_cloud();
        let mut ys = xs.clone();
        ys.reverse();
        ys.swap(2, 9);
        let a = EmpiricalMeasureView::with_stats(&xs).unwrap();
        let b = EmpiricalMeasureView::with_stats(&ys).unwrap();
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-12 * p.abs().max(q.abs()).max(1e-300);
        for e in Example::ALL {
            let m = model(e);
            for x in [-0.9, 0.1, 1.4] {
                assert!(close(m.drift(x, &a), m.drift(x, &b)));
                assert!(close(m.diffusion(x, &a), m.diffusion(x, &b)));
                assert!(close(m.diffusion_state_gradient(x, &a), m.diffusion_state_gradient(x, &b)));
                assert!(close(
                    m.diffusion_lions_derivative(x, &a, 0.3),
                    m.diffusion_lions_derivative(x, &b, 0.3)
                ));
            }
        }
    }

    #[test]
    fn evaluations_are_deterministic() {
        let xs = sample_cloud();
        let mu = EmpiricalMeasureView::new(&xs).unwrap();
        for e in Example::ALL {
            let m = model(e);
            assert_eq!(m.drift(0.3, &mu).to_bits(), m.drift(0.3, &mu).to_bits());
            assert_eq!(
                m.diffusion_lions_derivative(0.3, &mu, 1.1).to_bits(),
                m.diffusion_lions_derivative(0.3, &mu, 1.1).to_bits()
            );
        }
    }
}
