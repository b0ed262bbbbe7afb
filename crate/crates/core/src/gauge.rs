//! Gauge (dimension) functions and their regularizations.
//!
//! A gauge is evaluated through its logarithm so that it can be applied to
//! arguments far below the smallest `f64`. Regularizations replace sup/max
//! over a continuum with maxima over a caller-supplied sampling grid.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::logspace::LogValue;

/// A real function of one real variable, shareable across threads.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Domain bound used when a caller does not choose one.
pub const DEFAULT_ETA: f64 = 1.0;

#[derive(Clone)]
pub enum GaugeForm {
    /// `h(t) = t^s`.
    Power(f64),
    /// `h(t) = t·g(t)`; the stored map sends `ln t` to `ln g(t)`.
    Product(ScalarFn),
    /// `h(t) = t^{1+ε(t)}`; the stored map is `ε`.
    Exponent(ScalarFn),
}

impl fmt::Debug for GaugeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeForm::Power(s) => write!(f, "Power({s})"),
            GaugeForm::Product(_) => write!(f, "Product(..)"),
            GaugeForm::Exponent(_) => write!(f, "Exponent(..)"),
        }
    }
}

/// A gauge function `h: [0, eta) -> [0, inf)` with `h(0) = 0`.
#[derive(Clone, Debug)]
pub struct GaugeFn {
    pub eta: f64,
    pub form: GaugeForm,
}

impl GaugeFn {
    pub fn power(s: f64) -> Self {
        GaugeFn { eta: DEFAULT_ETA, form: GaugeForm::Power(s) }
    }

    /// `h(t) = t·g(t)` from a plain factor `g`.
    pub fn product<G>(g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        GaugeFn {
            eta: DEFAULT_ETA,
            form: GaugeForm::Product(Arc::new(move |lt: f64| g(lt.exp()).ln())),
        }
    }

    /// `h(t) = t·g(t)` with `g` supplied on the log scale (`ln t ↦ ln g(t)`),
    /// for factors that must be evaluated below the `f64` range.
    pub fn product_log<G>(ln_g: G) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        GaugeFn { eta: DEFAULT_ETA, form: GaugeForm::Product(Arc::new(ln_g)) }
    }

    pub fn exponent<E>(eps: E) -> Self
    where
        E: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        GaugeFn { eta: DEFAULT_ETA, form: GaugeForm::Exponent(Arc::new(eps)) }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// `ln h(t)` given `ln t`.
    pub fn ln_eval(&self, ln_t: f64) -> f64 {
        if ln_t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match &self.form {
            GaugeForm::Power(s) => s * ln_t,
            GaugeForm::Product(ln_g) => ln_t + ln_g(ln_t),
            GaugeForm::Exponent(eps) => (1.0 + eps(ln_t.exp())) * ln_t,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.ln_eval(t.ln()).exp()
    }

    pub fn eval_log(&self, t: LogValue) -> LogValue {
        LogValue::exp_of(self.ln_eval(t.ln()))
    }

    /// The factor `g(t) = h(t)/t` on the log scale.
    pub fn ln_factor(&self, ln_t: f64) -> f64 {
        self.ln_eval(ln_t) - ln_t
    }

    /// Checks that `g(t) = h(t)/t` is nondecreasing on `grid` and that its
    /// smallest sample is at most `tol`, i.e. that `g` visibly tends to 0.
    pub fn vanishing_g(&self, grid: &[f64], tol: f64) -> bool {
        if grid.is_empty() {
            return false;
        }
        let g: Vec<f64> = grid.iter().map(|&t| self.ln_factor(t.ln()).exp()).collect();
        g.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)) && g[0] <= tol
    }
}

fn check_grid(grid: &[f64], eta: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::pre("regularization grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::pre("regularization grid must be strictly increasing"));
    }
    if grid[0] <= 0.0 || *grid.last().unwrap() >= eta {
        return Err(Error::pre("regularization grid must lie in (0, eta)"));
    }
    Ok(())
}

/// Running maximum lookup: value at the largest grid point `<= t`, constant
/// below the first grid point.
fn step_lookup(grid: &[f64], vals: &[f64], t: f64) -> f64 {
    // `t` usually arrives as exp(ln t); absorb the round trip.
    let t = t * (1.0 + 4.0 * f64::EPSILON);
    let idx = grid.partition_point(|&g| g <= t);
    vals[idx.saturating_sub(1)]
}

/// Replaces `ε` by its running maximum over the grid, so `ε*` is
/// nondecreasing; since `t < 1`, `h* <= h` at every grid point.
pub fn regularize_exponent(h: &GaugeFn, grid: &[f64]) -> Result<GaugeFn> {
    let GaugeForm::Exponent(eps) = &h.form else {
        return Err(Error::pre("regularize_exponent needs an exponent-form gauge"));
    };
    check_grid(grid, h.eta)?;
    let mut run = Vec::with_capacity(grid.len());
    let mut acc = f64::NEG_INFINITY;
    for &t in grid {
        let e = eps(t);
        if !(e >= 0.0) {
            return Err(Error::pre(format!("negative exponent ε({t}) = {e}")));
        }
        acc = acc.max(e);
        run.push(acc);
    }
    let grid = grid.to_vec();
    Ok(GaugeFn {
        eta: h.eta,
        form: GaugeForm::Exponent(Arc::new(move |t| step_lookup(&grid, &run, t))),
    })
}

/// Replaces `g` by `t + sup_{s<=t} g(s)` over the grid.
///
/// Below the first grid point the running supremum is scaled linearly to 0,
/// which keeps `g*` increasing, continuous at 0 and `>= t`.
pub fn regularize_product(h: &GaugeFn, grid: &[f64]) -> Result<GaugeFn> {
    let GaugeForm::Product(ln_g) = &h.form else {
        return Err(Error::pre("regularize_product needs a product-form gauge"));
    };
    check_grid(grid, h.eta)?;
    let mut run = Vec::with_capacity(grid.len());
    let mut acc = 0.0f64;
    for &t in grid {
        let g = ln_g(t.ln()).exp();
        if !(g >= 0.0) {
            return Err(Error::pre(format!("negative factor g({t}) = {g}")));
        }
        acc = acc.max(g);
        run.push(acc);
    }
    let grid = grid.to_vec();
    let t0 = grid[0];
    let ln_gstar = move |lt: f64| {
        let t = lt.exp();
        let sup = if t < t0 { run[0] * t / t0 } else { step_lookup(&grid, &run, t) };
        if t < t0 {
            // t + run[0]·t/t0 = t·(1 + run[0]/t0), exact on the log scale.
            lt + (run[0] / t0).ln_1p()
        } else {
            (t + sup).ln()
        }
    };
    Ok(GaugeFn { eta: h.eta, form: GaugeForm::Product(Arc::new(ln_gstar)) })
}

/// Smallest `K` with `h(2t) <= K·h(t)` over a geometric grid of 512 points in
/// `[t_max·1e-8, t_max]`.
pub fn doubling_constant(h: &GaugeFn, t_max: f64) -> Result<f64> {
    let n = 512;
    let lo = (t_max * 1e-8).ln();
    let hi = t_max.ln();
    let grid: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    doubling_constant_on(h, &grid)
}

/// As [`doubling_constant`], over an explicit grid.
pub fn doubling_constant_on(h: &GaugeFn, grid: &[f64]) -> Result<f64> {
    let t_max = grid.iter().cloned().fold(0.0, f64::max);
    if !(2.0 * t_max < h.eta) {
        return Err(Error::pre("doubling grid must satisfy 2·t_max < eta"));
    }
    let mut k = 0.0f64;
    for &t in grid {
        if t <= 0.0 {
            return Err(Error::pre("doubling grid must be positive"));
        }
        let lt = h.ln_eval(t.ln());
        if lt == f64::NEG_INFINITY || lt.is_nan() {
            return Err(Error::pre(format!("h({t}) = 0, doubling ratio undefined")));
        }
        k = k.max((h.ln_eval((2.0 * t).ln()) - lt).exp());
    }
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exponent_regularization_is_running_max() {
        let eps = |t: f64| 0.1 * (1.0 + (1.0 / t).cos());
        let h = GaugeFn::exponent(eps);
        let g = grid(2000, 0.01, 0.5);
        let r = regularize_exponent(&h, &g).unwrap();
        let GaugeForm::Exponent(e) = &r.form else { unreachable!() };
        // Oracle: brute-force max over the samples at or below t.
        for (i, &t) in g.iter().enumerate().step_by(37) {
            let oracle = g[..=i].iter().map(|&s| eps(s)).fold(f64::MIN, f64::max);
            assert_eq!(e(t), oracle);
            assert!(r.eval(t) <= h.eval(t) * (1.0 + 1e-12));
        }
        assert!(g.windows(2).all(|w| e(w[1]) >= e(w[0])));
    }

    #[test]
    fn already_monotone_exponents_are_unchanged() {
        let g = grid(100, 0.01, 0.9);
        for eps in [|_t: f64| 0.2, |t: f64| t] {
            let r = regularize_exponent(&GaugeFn::exponent(eps), &g).unwrap();
            for &t in &g {
                assert!((r.eval(t) - GaugeFn::exponent(eps).eval(t)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn negative_exponent_and_empty_grid_rejected() {
        let h = GaugeFn::exponent(|_| -0.1);
        assert!(regularize_exponent(&h, &[0.1, 0.2]).is_err());
        assert!(regularize_exponent(&GaugeFn::exponent(|_| 0.1), &[]).is_err());
    }

    #[test]
    fn product_regularization_examples() {
        let g = grid(200, 0.001, 0.9);
        let sq = regularize_product(&GaugeFn::product(|t| t * t), &g).unwrap();
        let id = regularize_product(&GaugeFn::product(|t| t), &g).unwrap();
        for &t in &g {
            let gs = sq.ln_factor(t.ln()).exp();
            assert!((gs - (t + t * t)).abs() < 1e-12);
            assert!((id.ln_factor(t.ln()).exp() - 2.0 * t).abs() < 1e-12);
        }
        // Piecewise decreasing factor: compare with a running-sup oracle.
        let wavy = |t: f64| if t < 0.3 { t } else if t < 0.6 { 0.6 - t } else { t - 0.3 };
        let r = regularize_product(&GaugeFn::product(wavy), &g).unwrap();
        let mut sup: f64 = 0.0;
        for &t in &g {
            sup = sup.max(wavy(t));
            assert!((r.ln_factor(t.ln()).exp() - (t + sup)).abs() < 1e-12);
        }
        assert!(regularize_product(&GaugeFn::product(|t| -t), &g).is_err());
    }

    #[test]
    fn doubling_examples() {
        assert!((doubling_constant(&GaugeFn::power(2.0), 0.1).unwrap() - 4.0).abs() < 1e-12);
        assert!((doubling_constant(&GaugeFn::power(1.0), 0.1).unwrap() - 2.0).abs() < 1e-12);
        let s = 1.37;
        let k = doubling_constant(&GaugeFn::power(s), 0.2).unwrap();
        assert!((k - 2f64.powf(s)).abs() < 1e-12);
        // Nondecreasing ε: the 3h(t) bound for small t.
        let h = GaugeFn::exponent(|t: f64| 0.05 / (1.0 - t.ln()));
        assert!(doubling_constant(&h, 1e-3).unwrap() <= 3.0);
        assert!(doubling_constant(&GaugeFn::power(1.0), 0.6).is_err());
    }

    #[test]
    fn vanishing_factor_predicate() {
        let g: Vec<f64> = (1..50).map(|i| (-(i as f64)).exp()).rev().collect();
        let h = GaugeFn::exponent(|t: f64| 1.0 / (1.0 - t.ln()).sqrt());
        assert!(h.vanishing_g(&g, 0.01));
        assert!(!GaugeFn::power(1.0).vanishing_g(&g, 0.01));
    }
}
