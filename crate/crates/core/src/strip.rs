//! Strip profiles `Ω = {|y| < φ(x)}`: Ahlfors bounds for their conformal
//! maps, the profile construction of the strip lemma, the functions `τ`
//! and `φ` used for the upper bound on `Unb(f, p)`, and an entire function
//! built by a contour integral over the strip boundary.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::logspace::LogValue;
use crate::quad::integrate_pieces;
use crate::tower::{Huge, Tiny};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type TinyFn = Arc<dyn Fn(Tiny) -> Tiny + Send + Sync>;

const QUAD_TOL: f64 = 1e-10;

/// A decreasing positive profile on `[x0, ∞)`, extended by `φ(x0)` to the left.
#[derive(Clone)]
pub struct StripProfile {
    x0: f64,
    kind: Kind,
}

#[derive(Clone)]
enum Kind {
    Closure(ScalarFn),
    Linear { xs: Vec<f64>, ys: Vec<f64> },
    Orbit(Arc<OrbitProfile>),
}

impl std::fmt::Debug for StripProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match &self.kind {
            Kind::Closure(_) => "closure".to_string(),
            Kind::Linear { xs, .. } => format!("piecewise linear, {} breakpoints", xs.len()),
            Kind::Orbit(o) => format!("orbit, {} orbit points", o.orbit.len()),
        };
        write!(f, "StripProfile(x0={}, {k})", self.x0)
    }
}

impl StripProfile {
    /// Profile from a closure; the caller promises it is decreasing and positive.
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(x0: f64, phi: F) -> Result<Self> {
        let v = phi(x0);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::pre(format!("φ(x0) = {v} must be positive and finite")));
        }
        Ok(StripProfile { x0, kind: Kind::Closure(Arc::new(phi)) })
    }

    /// Piecewise-linear profile through `(x, φ)` points with increasing `x`
    /// and nonincreasing positive `φ`; constant after the last point.
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::pre("need at least one breakpoint"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                return Err(Error::pre("breakpoints must have increasing x and nonincreasing φ"));
            }
        }
        if !(points.iter().all(|p| p.1 > 0.0)) {
            return Err(Error::pre("φ must be positive"));
        }
        let (xs, ys) = points.iter().copied().unzip();
        Ok(StripProfile { x0: points[0].0, kind: Kind::Linear { xs, ys } })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `L = sup φ = φ(x0)`.
    pub fn sup(&self) -> f64 {
        self.phi(self.x0)
    }

    pub fn phi(&self, x: f64) -> f64 {
        let x = x.max(self.x0);
        match &self.kind {
            Kind::Closure(f) => f(x),
            Kind::Linear { xs, ys } => lerp_table(xs, ys, x),
            Kind::Orbit(o) => o.eval_f64(x).unwrap_or_else(|| o.eval(x).to_f64()),
        }
    }

    /// `φ(x)` in tower form, exact where `φ` underflows.
    pub fn phi_tiny(&self, x: f64) -> Tiny {
        match &self.kind {
            Kind::Orbit(o) => o.eval(x.max(self.x0)),
            _ => Tiny::from_f64(self.phi(x)).unwrap_or(Tiny::from_neg_ln(Huge::from_f64(f64::INFINITY))),
        }
    }

    /// Upper bound `φ(x) ≤ φ(o)` at the last stored orbit point `o ≤ x`
    /// (exact value for other profile kinds).
    pub fn phi_upper_tiny(&self, x: f64) -> Tiny {
        match &self.kind {
            Kind::Orbit(o) => {
                let k = o.orbit.partition_point(|&p| p <= x).max(1) - 1;
                o.values[k]
            }
            _ => self.phi_tiny(x),
        }
    }

    /// `φ'(x)`: segment slope or central difference.
    pub fn dphi(&self, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Linear { xs, ys } => {
                let i = xs.partition_point(|&p| p <= x);
                if i == 0 || i >= xs.len() {
                    0.0
                } else {
                    (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])
                }
            }
            _ => {
                let h = 1e-6 * x.abs().max(1.0);
                let lo = (x - h).max(self.x0);
                (self.phi(x + h) - self.phi(lo)) / (x + h - lo)
            }
        }
    }

    /// Points where `φ` may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Closure(_) => vec![self.x0],
            Kind::Linear { xs, .. } => xs.clone(),
            Kind::Orbit(o) => o.orbit.clone(),
        }
    }

    /// Orbit points `σ^k(x0)` and `φ` there, for orbit profiles.
    pub fn orbit(&self) -> Option<(&[f64], &[Tiny])> {
        match &self.kind {
            Kind::Orbit(o) => Some((&o.orbit, &o.values)),
            _ => None,
        }
    }

    /// `∫_a^b dx/φ` with breakpoints honoured.
    pub fn inverse_integral(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut pts = vec![lo];
        pts.extend(self.breakpoints().into_iter().filter(|&p| p > lo && p < hi));
        pts.push(hi);
        let v = integrate_pieces(|x| 1.0 / self.phi(x), &pts, QUAD_TOL)?;
        if !v.is_finite() {
            return Err(Error::num("∫ dx/φ overflows"));
        }
        Ok(sign * v)
    }

    /// CSV of `x, φ(x), -ln φ(x)` at the breakpoints inside `[x0, x_max]`
    /// plus `n` evenly spaced abscissae.
    pub fn to_csv(&self, x_max: f64, n: usize) -> String {
        let mut xs: Vec<f64> = self.breakpoints().into_iter().filter(|&x| x <= x_max).collect();
        let n = n.max(2);
        xs.extend((0..n).map(|i| self.x0 + (x_max - self.x0) * i as f64 / (n - 1) as f64));
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut out = String::from("x,phi,neg_ln_phi\n");
        for x in xs {
            let t = self.phi_tiny(x);
            out.push_str(&format!("{},{},{}\n", crate::fmt::sig17(x), crate::fmt::sig17(t.to_f64()), crate::fmt::huge17(t.neg_ln())));
        }
        out
    }
}

fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&p| p <= x);
    if i == 0 {
        ys[0]
    } else if i >= xs.len() {
        ys[ys.len() - 1]
    } else {
        let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        ys[i - 1] + t * (ys[i] - ys[i - 1])
    }
}

// ---------------------------------------------------------------------------
// Ahlfors bounds

/// A bound on a difference of real parts of the strip map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AhlforsBound {
    pub value: f64,
    /// `∫ dx/φ` over the interval used.
    pub integral: f64,
    /// False when the lower bound's hypothesis `∫ dx/φ > 4` fails.
    pub applicable: bool,
}

/// Lower bound `π∫_{x1}^{x2} dx/φ − 8π` for `H̲(x2) − H̄(x1)`.
pub fn ahlfors_lower(profile: &StripProfile, x1: f64, x2: f64) -> Result<AhlforsBound> {
    if !(x2 > x1) {
        return Err(Error::pre(format!("need x2 > x1, got {x1}, {x2}")));
    }
    let integral = profile.inverse_integral(x1, x2)?;
    Ok(AhlforsBound { value: PI * integral - 8.0 * PI, integral, applicable: integral > 4.0 })
}

/// Upper bound `π∫ dx/φ + 8πL⁴/φ(x̄2)⁴` for `H̄(x2) − H̲(x1)`, taking
/// `x̲1` and `x̄2` as given.
pub fn ahlfors_upper(profile: &StripProfile, x1_lower: f64, x2_upper: f64) -> Result<AhlforsBound> {
    if !(x2_upper > x1_lower) {
        return Err(Error::pre(format!("need x̄2 > x̲1, got {x1_lower}, {x2_upper}")));
    }
    let integral = profile.inverse_integral(x1_lower, x2_upper)?;
    let l = profile.sup();
    let value = PI * integral + 8.0 * PI * (l / profile.phi(x2_upper)).powi(4);
    Ok(AhlforsBound { value, integral, applicable: true })
}

/// `x̄2 ≤ x2 + 8φ(x2)`.
pub fn upper_abscissa(profile: &StripProfile, x2: f64) -> f64 {
    x2 + 8.0 * profile.phi(x2)
}

/// `C/φ(x + 8φ(x))⁴`, the bound on `sup Re w` over the cross section at `x`.
pub fn tract_growth_bound(profile: &StripProfile, x: f64, c: f64) -> Result<f64> {
    let p = profile.phi(x);
    if !(p <= 1.0 / x) || x <= 0.0 {
        return Err(Error::pre(format!("φ({x}) = {p} exceeds 1/x: bound not applicable")));
    }
    Ok(c / profile.phi(upper_abscissa(profile, x)).powi(4))
}

// ---------------------------------------------------------------------------
// τ

/// `τ(t) = ((t/4)·exp(−exp(t⁻⁵)))^{1/t}` on `(0, 1]`, as a log-value.
pub fn tau(t: f64) -> Result<LogValue> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::pre(format!("τ needs t ∈ (0, 1], got {t}")));
    }
    let ln = ((t / 4.0).ln() - t.powi(-5).exp()) / t;
    LogValue::from_ln(ln).filter(|v| v.ln().is_finite()).ok_or_else(|| Error::num(format!("ln τ({t}) leaves f64 range; use tau_tiny")))
}

/// `τ` on tower-form arguments: with `H = −ln t`,
/// `−ln τ = e^H·(exp(e^{5H}) + H + ln 4)`.
pub fn tau_tiny(t: Tiny) -> Tiny {
    let h = t.neg_ln();
    let inner = h.scale(5.0).exp().exp().add(h).add_f64(4f64.ln());
    Tiny::from_neg_ln(h.exp().mul(inner))
}

// ---------------------------------------------------------------------------
// Profile construction

/// Slope floor of `α*`, which keeps `σ = x + α*` increasing.
const ALPHA_SLOPE: f64 = 0.5;
/// Grid cells for `α*`.
pub const ALPHA_GRID: usize = 4096;

/// The profile of the strip lemma: `φ(σ^k(x)) = β^k(φ(x))` with `φ` linear
/// on `[x0, σ(x0)]`.
pub struct OrbitProfile {
    grid0: f64,
    step: f64,
    /// `α*` at the grid nodes.
    a: Vec<f64>,
    /// `σ` at the grid nodes.
    sigma: Vec<f64>,
    orbit: Vec<f64>,
    values: Vec<Tiny>,
    /// `β*` as f64 at 1, the value closing the first linear piece.
    first: f64,
    beta: TinyFn,
    /// `β*` on f64, used while values stay normal so dyadic orbits are exact.
    beta_f64: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl OrbitProfile {
    fn alpha_star(&self, x: f64) -> f64 {
        let u = ((x - self.grid0) / self.step).clamp(0.0, (self.a.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.a.len() - 2);
        let t = u - i as f64;
        self.a[i] + t * (self.a[i + 1] - self.a[i])
    }

    /// `σ⁻¹(y)`, exact on the piecewise-linear `σ`.
    fn sigma_inv(&self, y: f64) -> f64 {
        let i = self.sigma.partition_point(|&s| s <= y).clamp(1, self.sigma.len() - 1);
        let (s0, s1) = (self.sigma[i - 1], self.sigma[i]);
        let x0 = self.grid0 + (i - 1) as f64 * self.step;
        x0 + self.step * (y - s0) / (s1 - s0)
    }

    /// Orbit index `k` and the seed in the first linear piece.
    fn seed(&self, x: f64) -> (usize, f64) {
        let k = self.orbit.partition_point(|&p| p <= x).max(1) - 1;
        if x == self.orbit[k] {
            return (k, 1.0);
        }
        let mut u = x;
        for _ in 0..k {
            u = self.sigma_inv(u);
        }
        let t = ((u - self.orbit[0]) / (self.orbit[1] - self.orbit[0])).clamp(0.0, 1.0);
        (k, 1.0 + t * (self.first - 1.0))
    }

    /// f64 evaluation, `None` once the value leaves the normal range.
    fn eval_f64(&self, x: f64) -> Option<f64> {
        let b = self.beta_f64.as_ref()?;
        let (k, mut v) = self.seed(x);
        for _ in 0..k {
            v = b(v);
            if !(v >= f64::MIN_POSITIVE) {
                return None;
            }
        }
        Some(v)
    }

    fn eval(&self, x: f64) -> Tiny {
        let k = self.orbit.partition_point(|&p| p <= x).max(1) - 1;
        if x == self.orbit[k] {
            return self.values[k];
        }
        let (k, seed) = self.seed(x);
        let mut v = Tiny::from_f64(seed).expect("positive");
        for _ in 0..k {
            v = (self.beta)(v);
        }
        v
    }
}

/// `α*`: decreasing, `≤ α`, slope `≥ −1/2`, on a uniform grid over
/// `[x0, x_max]`, built by a backward minimum and a one-cell shift.
fn alpha_star_grid(alpha: &dyn Fn(f64) -> f64, x0: f64, x_max: f64, n: usize) -> Result<(f64, Vec<f64>)> {
    let step = (x_max - x0) / n as f64;
    let raw: Vec<f64> = (0..n + 3).map(|i| alpha(x0 + i as f64 * step)).collect();
    if raw.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::pre("α must be positive and finite"));
    }
    let mut a = raw.clone();
    for i in (0..a.len() - 1).rev() {
        a[i] = raw[i].min(a[i + 1] + ALPHA_SLOPE * step);
    }
    Ok((step, a[1..].to_vec()))
}

fn orbit_profile(
    alpha: &dyn Fn(f64) -> f64,
    beta: TinyFn,
    beta_f64: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    x0: f64,
    x_max: f64,
) -> Result<StripProfile> {
    if !(x_max > x0) {
        return Err(Error::pre(format!("x_max = {x_max} must exceed x0 = {x0}")));
    }
    let (step, a) = alpha_star_grid(alpha, x0, x_max, ALPHA_GRID)?;
    let sigma: Vec<f64> = a.iter().enumerate().map(|(i, ai)| x0 + i as f64 * step + ai).collect();
    let first = beta(Tiny::ONE).to_f64();
    if !(first > 0.0 && first < 1.0) {
        return Err(Error::pre(format!("β(1) = {first} must lie in (0, 1)")));
    }
    let mut prof = OrbitProfile { grid0: x0, step, a, sigma, orbit: vec![x0], values: vec![Tiny::ONE], first, beta, beta_f64 };
    while *prof.orbit.last().expect("nonempty") <= x_max {
        let o = *prof.orbit.last().expect("nonempty");
        let next = o + prof.alpha_star(o);
        let v = (prof.beta)(*prof.values.last().expect("nonempty"));
        prof.orbit.push(next);
        prof.values.push(v);
    }
    Ok(StripProfile { x0, kind: Kind::Orbit(Arc::new(prof)) })
}

/// The strip lemma: a decreasing `φ` with `φ(x + α*(x)) = β*(φ(x))`, where
/// `α* ≤ α` keeps `σ` increasing and `β*(t) = min(β(t), t/2)`.
pub fn build_phi<A, B>(alpha: A, beta: B, x0: f64, x_max: f64) -> Result<StripProfile>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let beta = Arc::new(beta);
    let b = beta.clone();
    let beta_star: TinyFn = Arc::new(move |t: Tiny| {
        let half = t.scale(0.5);
        match Tiny::from_f64(b(t.to_f64())) {
            Some(b) if b < half => b,
            _ => half,
        }
    });
    let beta_f64 = Arc::new(move |t: f64| beta(t).min(t / 2.0));
    let prof = orbit_profile(&alpha, beta_star, Some(beta_f64), x0, x_max)?;
    // β is only known on normal floats; every orbit input must be one.
    let (orbit, values) = prof.orbit().expect("orbit profile");
    if let Some(k) = values[..values.len() - 1].iter().position(|v| !(v.to_f64() >= f64::MIN_POSITIVE)) {
        return Err(Error::pre(format!(
            "φ underflows f64 at x = {} before x_max = {x_max}; use build_phi_ln",
            orbit[k]
        )));
    }
    Ok(prof)
}

/// [`build_phi`] with `β` given on logarithms, `ln β(t)` as a function of
/// `ln t`, for profiles that fall below the f64 range.
pub fn build_phi_ln<A, B>(alpha: A, ln_beta: B, x0: f64, x_max: f64) -> Result<StripProfile>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64 + Send + Sync + 'static,
{
    let ln_beta = Arc::new(ln_beta);
    let lb = ln_beta.clone();
    let beta_star: TinyFn = Arc::new(move |t: Tiny| {
        let half = t.scale(0.5);
        let l = lb(t.ln());
        if l.is_finite() {
            let b = Tiny::from_neg_ln(Huge::from_f64(-l));
            if b < half {
                return b;
            }
        }
        half
    });
    let beta_f64 = Arc::new(move |t: f64| ln_beta(t.ln()).exp().min(t / 2.0));
    orbit_profile(&alpha, beta_star, Some(beta_f64), x0, x_max)
}

/// `α*` of a profile built by [`build_phi`] or [`build_phi_thm2`].
pub fn alpha_star(profile: &StripProfile, x: f64) -> Option<f64> {
    match &profile.kind {
        Kind::Orbit(o) => Some(o.alpha_star(x)),
        _ => None,
    }
}

/// An increasing factor `g` with `g(t) ≥ t`, where the gauge is `h(t) = t·g(t)`.
pub trait TinyFactor: Send + Sync {
    fn apply(&self, t: Tiny) -> Tiny;

    /// `g⁻¹`, by bisection on the level index of `−ln t` unless overridden.
    fn inverse(&self, s: Tiny) -> Tiny {
        let at = |psi: f64| self.apply(Tiny::from_neg_ln(Huge::from_index(psi)));
        let (mut lo, mut hi) = (0.0, 1.0);
        while at(hi) > s {
            lo = hi;
            hi *= 2.0;
            if hi > 1e6 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Tiny::from_neg_ln(Huge::from_index(hi))
    }
}

/// `g(t) = t`.
pub struct IdentityFactor;

impl TinyFactor for IdentityFactor {
    fn apply(&self, t: Tiny) -> Tiny {
        t
    }

    fn inverse(&self, s: Tiny) -> Tiny {
        s
    }
}

/// `g(t) = t^p` with `0 < p ≤ 1`.
pub struct PowerFactor(pub f64);

impl TinyFactor for PowerFactor {
    fn apply(&self, t: Tiny) -> Tiny {
        t.powf(self.0)
    }

    fn inverse(&self, s: Tiny) -> Tiny {
        s.powf(1.0 / self.0)
    }
}

/// `g(t) = 1/(1 + ln(1/t))`.
pub struct InverseLogFactor;

impl TinyFactor for InverseLogFactor {
    fn apply(&self, t: Tiny) -> Tiny {
        Tiny::from_neg_ln(t.neg_ln().add_f64(1.0).ln())
    }

    fn inverse(&self, s: Tiny) -> Tiny {
        Tiny::from_neg_ln(s.recip_huge().add_f64(-1.0))
    }
}

/// `α(p_{n−1}) = 1/n²` for `n ≥ 2`, linear in between and constant past the
/// last point; `p[0] = p_1`.
pub fn thm2_alpha(p: &[f64], x: f64) -> f64 {
    let n_of = |i: usize| (i + 2) as f64;
    if x <= p[0] {
        return 1.0 / (n_of(0) * n_of(0));
    }
    let i = p.partition_point(|&q| q <= x);
    if i >= p.len() {
        let n = n_of(p.len() - 1);
        return 1.0 / (n * n);
    }
    let (a, b) = (1.0 / (n_of(i - 1) * n_of(i - 1)), 1.0 / (n_of(i) * n_of(i)));
    a + (x - p[i - 1]) / (p[i] - p[i - 1]) * (b - a)
}

/// Grid size of the monotonicity check on `g⁻¹∘τ`.
pub const TAU_MONOTONE_GRID: usize = 1000;

/// The profile for the upper bound: the strip lemma with `β = g⁻¹∘τ` and
/// `α` from [`thm2_alpha`], on `[p_1, x_max]`. Fails if `g⁻¹∘τ` is not
/// increasing on a grid of `(0, 1]`.
pub fn build_phi_thm2(g: Arc<dyn TinyFactor>, p: &[f64], x_max: f64) -> Result<StripProfile> {
    if p.len() < 2 || p.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::pre("rate sequence must be strictly increasing with at least two terms"));
    }
    let beta = {
        let g = g.clone();
        move |t: Tiny| g.inverse(tau_tiny(t))
    };
    let vals: Vec<Tiny> = (1..=TAU_MONOTONE_GRID)
        .map(|i| beta(Tiny::from_f64(i as f64 / TAU_MONOTONE_GRID as f64).expect("positive")))
        .collect();
    if let Some(i) = vals.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::pre(format!("g⁻¹∘τ decreases near t = {}", (i + 1) as f64 / TAU_MONOTONE_GRID as f64)));
    }
    let beta_star: TinyFn = Arc::new(move |t: Tiny| {
        let b = beta(t);
        let half = t.scale(0.5);
        if b < half { b } else { half }
    });
    let pv = p.to_vec();
    orbit_profile(&move |x| thm2_alpha(&pv, x), beta_star, None, p[0], x_max)
}

/// Grid verification of the profile properties used for the upper bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Thm2ProfileReport {
    /// Points `x` where `g(φ(x + 1/n²)) ≤ τ(φ(x))` failed.
    pub d_violations: Vec<f64>,
    /// `(n, φ(p_n) ≤ 4⁻ⁿ)`.
    pub decay: Vec<(usize, bool)>,
    /// Points where `φ(x) ≤ 1/x²` failed.
    pub square_violations: Vec<f64>,
    pub samples: usize,
}

impl Thm2ProfileReport {
    pub fn ok(&self) -> bool {
        self.d_violations.is_empty() && self.decay.iter().all(|d| d.1) && self.square_violations.is_empty()
    }
}

/// Relative tolerance on `−ln` used by the grid checks.
pub const TOWER_TOL: f64 = 1e-9;

/// Checks the three profile inequalities: the one-step decay for
/// `x ∈ [p_{n−1}, p_n]` and `2 ≤ n ≤ n_max`, `φ(p_n) ≤ 4⁻ⁿ` for
/// `2 ≤ n ≤ n_max`, and `φ(x) ≤ 1/x²` on `[p_1, x_end]`.
pub fn check_thm2_profile(
    profile: &StripProfile,
    g: &dyn TinyFactor,
    p: &[f64],
    n_max: usize,
    x_end: f64,
    per_interval: usize,
) -> Thm2ProfileReport {
    let mut rep = Thm2ProfileReport { d_violations: Vec::new(), decay: Vec::new(), square_violations: Vec::new(), samples: 0 };
    for n in 2..=n_max.min(p.len()) {
        let (a, b) = (p[n - 2], p[n - 1]);
        let inv = 1.0 / (n * n) as f64;
        for i in 0..=per_interval {
            let x = a + (b - a) * i as f64 / per_interval as f64;
            let lhs = g.apply(profile.phi_tiny(x + inv));
            let rhs = tau_tiny(profile.phi_tiny(x));
            rep.samples += 1;
            if !lhs.le_tol(rhs, TOWER_TOL) {
                rep.d_violations.push(x);
            }
        }
        let bound = Tiny::from_f64(4f64.powi(-(n as i32))).expect("positive");
        rep.decay.push((n, profile.phi_tiny(b).le_tol(bound, TOWER_TOL)));
    }
    let m = per_interval * 16;
    for i in 0..=m {
        let x = p[0] + (x_end - p[0]) * i as f64 / m as f64;
        let bound = Tiny::from_f64(1.0 / (x * x)).expect("positive");
        rep.samples += 1;
        let ok = profile.phi_upper_tiny(x).le_tol(bound, TOWER_TOL) || profile.phi_tiny(x).le_tol(bound, TOWER_TOL);
        if !ok {
            rep.square_violations.push(x);
        }
    }
    rep
}

// ---------------------------------------------------------------------------
// Strip map and contour-integral function

/// `ŵ(ζ) = π∫_{x0}^{Re ζ} dt/φ(t) + iπ·Im ζ/φ(Re ζ)`, a stand-in for the
/// conformal map of the strip onto `{|Im w| < π}`.
pub fn approx_strip_map(profile: &StripProfile, zeta: Complex64) -> Result<Complex64> {
    let p = profile.phi(zeta.re);
    if !(zeta.im.abs() <= p * (1.0 + 1e-12)) {
        return Err(Error::pre(format!("{zeta} lies outside the closed strip")));
    }
    let re = PI * profile.inverse_integral(profile.x0(), zeta.re)?;
    Ok(Complex64::new(re, PI * zeta.im / p))
}

const GL_X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL_W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

/// Gauss–Legendre 8-point nodes and weights on `[a, b]`.
fn gl8(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    (0..8).map(move |j| {
        let (x, w) = (GL_X[j % 4], GL_W[j % 4]);
        let x = if j < 4 { -x } else { x };
        (c + r * x, r * w)
    })
}

/// Value of `e^{Re ŵ}` past which the contour is cut.
pub const TRUNCATION_LEVEL: f64 = 40.0;
/// Default quadrature panel width on the contour.
pub const DEFAULT_NODE_SPACING: f64 = 0.01;
/// Largest tolerated contour tail.
pub const TAIL_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
struct Node {
    z: Complex64,
    /// Weight times `dζ/dt`.
    dz: Complex64,
    /// `exp(e^{ŵ(ζ)})`.
    val: Complex64,
}

/// `f(z) = ε·[(1/2πi)∫_{∂S} exp(e^{ŵ(ζ)})/(ζ − z) dζ (+ exp(e^{ŵ(z)}) in S)]`
/// with `S = {x > 0, |y| < φ(x)}`, `∂S` oriented with `S` on the right and
/// cut where `e^{Re ŵ}` reaches [`TRUNCATION_LEVEL`].
#[derive(Clone, Debug)]
pub struct ApproxEntireFunction {
    pub profile: StripProfile,
    pub x_trunc: f64,
    pub spacing: f64,
    /// Normalization factor `ε`.
    pub scale: f64,
    /// Bound on the discarded contour mass `∫ |exp(e^ŵ)| |dζ|`.
    pub tail_bound: f64,
    nodes: Vec<Node>,
    cap: Vec<Node>,
}

/// Builds the contour function and normalizes it so that `|f| ≤ 0.4` on
/// `|z| = 1` and on probes just outside `S`.
pub fn contour_function_build(profile: &StripProfile, x_trunc: Option<f64>, spacing: f64) -> Result<ApproxEntireFunction> {
    if !(spacing > 0.0) {
        return Err(Error::pre("node spacing must be positive"));
    }
    let phi0 = profile.phi(0.0);
    let re_w = |x: f64| -> Result<f64> { Ok(PI * profile.inverse_integral(profile.x0(), x)?) };
    let cut = TRUNCATION_LEVEL.ln();
    // Panel edges on [0, X]: uniform plus profile breakpoints.
    let mut edges = vec![0.0];
    let mut acc = re_w(0.0)?;
    loop {
        let a = *edges.last().expect("nonempty");
        let reached = match x_trunc {
            Some(x) => a >= x,
            None => acc > cut,
        };
        if reached {
            break;
        }
        let mut b = a + spacing;
        if let Some(x) = x_trunc {
            b = b.min(x);
        }
        if let Some(&bp) = profile.breakpoints().iter().find(|&&p| p > a + 1e-12 && p < b) {
            b = bp;
        }
        acc += PI * profile.inverse_integral(a, b)?;
        edges.push(b);
        if edges.len() > 10_000_000 {
            return Err(Error::num("contour did not reach the truncation level"));
        }
    }
    let x_end = *edges.last().expect("nonempty");
    let u0 = acc.exp();
    let dphi_max = edges.iter().map(|&x| profile.dphi(x).abs()).fold(0.0, f64::max);
    let tail_bound = 2.0 * (1.0 + dphi_max) * profile.sup() / (PI * u0) * (-u0).exp();
    if !(tail_bound < TAIL_TOL) {
        return Err(Error::num(format!("contour tail {tail_bound:e} above tolerance at X = {x_end}")));
    }

    let big_f = |w: Complex64| w.exp().exp();
    let mut nodes = Vec::new();
    // Left edge, upward.
    let w_left = re_w(0.0)?;
    let m = ((2.0 * phi0 / spacing).ceil() as usize).max(1);
    for i in 0..m {
        let (a, b) = (-phi0 + 2.0 * phi0 * i as f64 / m as f64, -phi0 + 2.0 * phi0 * (i + 1) as f64 / m as f64);
        for (y, w) in gl8(a, b) {
            let z = Complex64::new(0.0, y);
            nodes.push(Node { z, dz: Complex64::new(0.0, w), val: big_f(Complex64::new(w_left, PI * y / phi0)) });
        }
    }
    // Upper curve eastward, then lower curve westward.
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut base = w_left;
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        for (x, w) in gl8(a, b) {
            let rw = base + PI * profile.inverse_integral(a, x)?;
            let (p, dp) = (profile.phi(x), profile.dphi(x));
            let val = big_f(Complex64::new(rw, PI));
            upper.push(Node { z: Complex64::new(x, p), dz: Complex64::new(w, w * dp), val });
            lower.push(Node { z: Complex64::new(x, -p), dz: -Complex64::new(w, -w * dp), val });
        }
        base += PI * profile.inverse_integral(a, b)?;
    }
    nodes.extend(upper);
    nodes.extend(lower.into_iter().rev());
    // The cap closes the polygon for winding checks only.
    let px = profile.phi(x_end);
    let mc = ((2.0 * px / spacing).ceil() as usize).max(1);
    let mut cap = Vec::new();
    for i in 0..mc {
        let (a, b) = (px - 2.0 * px * i as f64 / mc as f64, px - 2.0 * px * (i + 1) as f64 / mc as f64);
        for (y, w) in gl8(b, a) {
            cap.push(Node { z: Complex64::new(x_end, y), dz: Complex64::new(0.0, -w), val: Complex64::new(0.0, 0.0) });
        }
    }
    let mut f = ApproxEntireFunction { profile: profile.clone(), x_trunc: x_end, spacing, scale: 1.0, tail_bound, nodes, cap };
    let probes = f.normalization_probes();
    let max = probes
        .par_iter()
        .filter_map(|&z| f.eval_raw(z).ok())
        .map(|v| v.norm())
        .reduce(|| 0.0, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::num("normalization probes give no finite nonzero value"));
    }
    f.scale = 0.4 / max;
    Ok(f)
}

impl ApproxEntireFunction {
    /// `z ∈ S`.
    pub fn in_strip(&self, z: Complex64) -> bool {
        z.re > 0.0 && z.im.abs() < self.profile.phi(z.re)
    }

    fn too_close(&self, z: Complex64) -> bool {
        self.nodes.iter().any(|n| (n.z - z).norm() < self.spacing)
    }

    /// Unnormalized value.
    pub fn eval_raw(&self, z: Complex64) -> Result<Complex64> {
        if self.too_close(z) {
            return Err(Error::pre(format!("{z} is too close to the contour")));
        }
        let mut s = Complex64::new(0.0, 0.0);
        for n in &self.nodes {
            s += n.dz * n.val / (n.z - z);
        }
        let mut v = s / Complex64::new(0.0, 2.0 * PI);
        if self.in_strip(z) {
            let w = approx_strip_map(&self.profile, z)?;
            let g = w.exp().exp();
            if !g.is_finite() {
                return Err(Error::num(format!("exp(e^ŵ) overflows at {z}")));
            }
            v += g;
        }
        Ok(v)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.eval_raw(z)? * self.scale)
    }

    /// The residue term `exp(e^{ŵ(z)})·ε` for `z ∈ S`.
    pub fn residue_term(&self, z: Complex64) -> Result<Complex64> {
        Ok(approx_strip_map(&self.profile, z)?.exp().exp() * self.scale)
    }

    /// `(1/2πi)∮ dζ/(ζ − z)` over the truncated contour closed by the cap;
    /// `−1` inside (clockwise), `0` outside.
    pub fn winding(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for n in self.nodes.iter().chain(&self.cap) {
            s += n.dz / (n.z - z);
        }
        s / Complex64::new(0.0, 2.0 * PI)
    }

    /// Points on `|z| = 1` and just outside `∂S` used for normalization.
    pub fn normalization_probes(&self) -> Vec<Complex64> {
        let d = 3.0 * self.spacing;
        let mut out: Vec<Complex64> = (0..256).map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 256.0)).collect();
        let n = ((self.x_trunc / self.spacing).ceil() as usize).max(1);
        for i in 0..=n {
            let x = self.x_trunc * i as f64 / n as f64;
            let p = self.profile.phi(x);
            out.push(Complex64::new(x, p + d));
            out.push(Complex64::new(x, -p - d));
        }
        let p0 = self.profile.phi(0.0);
        let m = ((2.0 * p0 / self.spacing).ceil() as usize).max(1);
        for i in 0..=m {
            out.push(Complex64::new(-d, -p0 + 2.0 * p0 * i as f64 / m as f64));
        }
        out.into_iter().filter(|&z| !self.too_close(z)).collect()
    }

    /// `(max |f| on |z| = 1, max |f| on the off-strip probes)` after scaling.
    pub fn normalization_report(&self) -> (f64, f64) {
        let probes = self.normalization_probes();
        let (mut disk, mut off) = (0.0f64, 0.0f64);
        for z in probes {
            let v = match self.eval(z) {
                Ok(v) => v.norm(),
                Err(_) => continue,
            };
            if (z.norm() - 1.0).abs() < 1e-12 {
                disk = disk.max(v);
            }
            if !self.in_strip(z) {
                off = off.max(v);
            }
        }
        (disk, off)
    }

    /// Smallest `C` with `|f(z)| ≤ exp(exp(C/φ(|z| + 8φ(|z|))⁴))` on circles
    /// of the given radii (64 points each; points near the contour skipped).
    pub fn fit_growth_constant(&self, radii: &[f64]) -> f64 {
        let mut c = 0.0f64;
        for &r in radii {
            for i in 0..64 {
                let z = Complex64::from_polar(r, 2.0 * PI * i as f64 / 64.0);
                if let Ok(v) = self.eval(z) {
                    let m = v.norm();
                    if m > std::f64::consts::E {
                        let ph = self.profile.phi(upper_abscissa(&self.profile, r));
                        c = c.max(m.ln().ln() * ph.powi(4));
                    }
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ahlfors_lower_for_reciprocal_profile() {
        let p = StripProfile::from_fn(1.0, |x| 1.0 / x).unwrap();
        let b = ahlfors_lower(&p, 2.0, 10.0).unwrap();
        assert!((b.value - 40.0 * PI).abs() < 1e-8 && b.applicable);
        assert!(!ahlfors_lower(&p, 2.0, 2.5).unwrap().applicable);
        assert!(ahlfors_lower(&p, 3.0, 2.0).is_err());
    }

    #[test]
    fn ahlfors_sandwich_for_constant_width() {
        let c = 0.7;
        let p = StripProfile::from_fn(0.0, move |_| c).unwrap();
        let (x1, x2) = (1.0, 9.0);
        let exact = PI * (x2 - x1) / c;
        let lo = ahlfors_lower(&p, x1, x2).unwrap().value;
        let hi = ahlfors_upper(&p, x1, x2).unwrap().value;
        assert!((exact - lo - 8.0 * PI).abs() < 1e-9 && (hi - exact - 8.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn growth_bound_example() {
        let p = StripProfile::from_fn(0.0, |x: f64| (1.0f64).min(1.0 / x)).unwrap();
        let b = tract_growth_bound(&p, 10.0, 1.0).unwrap();
        assert!((b - 10.8f64.powi(4)).abs() < 1e-8);
        let wide = StripProfile::from_fn(0.0, |_| 1.0).unwrap();
        assert!(tract_growth_bound(&wide, 10.0, 1.0).is_err());
    }

    #[test]
    fn underflowing_profile_needs_log_beta() {
        // β(t) = t²/2 squares the exponent each step and leaves f64 quickly.
        assert!(build_phi(|_| 1.0, |t| t * t / 2.0, 0.0, 20.0).is_err());
        let p = build_phi_ln(|_| 1.0, |l| 2.0 * l - 2f64.ln(), 0.0, 20.0).unwrap();
        for k in 0..15 {
            let (a, b) = (p.phi_tiny(k as f64 + 1.0).ln(), 2.0 * p.phi_tiny(k as f64).ln() - 2f64.ln());
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn tau_values() {
        let direct = 0.25 * (-(1f64.exp())).exp();
        assert!((tau(1.0).unwrap().value() - direct).abs() < 1e-15);
        assert!((tau_tiny(Tiny::ONE).to_f64() - direct).abs() < 1e-15);
        let ln = tau(0.5).unwrap().ln();
        assert!((ln - 2.0 * (0.125f64.ln() - 32f64.exp())).abs() <= 1e-12 * ln.abs());
        let t = Tiny::from_f64(0.5).unwrap();
        assert!((tau_tiny(t).ln() - ln).abs() <= 1e-12 * ln.abs());
        assert!(tau(0.0).is_err() && tau(1.5).is_err());
    }

    #[test]
    fn phi_with_unit_steps() {
        let p = build_phi(|_| 1.0, |t| t / 2.0, 0.0, 10.0).unwrap();
        for k in 0..10 {
            assert!((p.phi(k as f64) - 0.5f64.powi(k)).abs() < 1e-12);
        }
        assert!((p.phi(0.5) - 0.75).abs() < 1e-12);
        assert!((p.phi(3.5) - 0.75 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn phi_on_reciprocal_steps() {
        let alpha = |x: f64| 1.0 / x;
        let p = build_phi(alpha, |t| t / 2.0, 1.0, 6.0).unwrap();
        let (orbit, vals) = p.orbit().unwrap();
        let mut o = 1.0;
        for (k, (&ok, v)) in orbit.iter().zip(vals).enumerate() {
            assert_eq!(ok, o);
            assert!((v.to_f64() - 0.5f64.powi(k as i32)).abs() <= 1e-15 * v.to_f64());
            assert!((p.phi(ok) - v.to_f64()).abs() <= 1e-12 * v.to_f64());
            if o > 6.0 {
                break;
            }
            let a = alpha_star(&p, o).unwrap();
            assert!(a > 0.0 && a <= alpha(o));
            o += a;
        }
        for i in 0..10_000 {
            let x = 1.0 + 4.5 * i as f64 / 10_000.0;
            let lhs = p.phi(x + alpha(x));
            assert!(lhs <= 0.5 * p.phi(x) * (1.0 + 1e-9), "x = {x}");
        }
    }

    #[test]
    fn thm2_profile_with_identity_factor() {
        let seq: Vec<f64> = (1..=40).map(|n| n as f64).collect();
        let p = build_phi_thm2(Arc::new(IdentityFactor), &seq, 12.0).unwrap();
        let rep = check_thm2_profile(&p, &IdentityFactor, &seq, 8, 12.0, 40);
        assert!(rep.ok(), "{rep:?}");
    }

    #[test]
    fn factor_inverses() {
        let t = Tiny::from_f64(1e-5).unwrap();
        for g in [&PowerFactor(0.5) as &dyn TinyFactor, &InverseLogFactor, &IdentityFactor] {
            let back = g.apply(g.inverse(t));
            assert!((back.ln() - t.ln()).abs() < 1e-9 * t.ln().abs());
            assert!(g.apply(t) >= t);
        }
        struct Generic;
        impl TinyFactor for Generic {
            fn apply(&self, t: Tiny) -> Tiny {
                t.powf(0.25)
            }
        }
        let back = Generic.apply(Generic.inverse(t));
        assert!((back.ln() - t.ln()).abs() < 1e-9 * t.ln().abs());
    }

    #[test]
    fn strip_map_oracles() {
        let c = 0.5;
        let p = StripProfile::from_fn(0.0, move |_| c).unwrap();
        let z = Complex64::new(2.0, 0.3);
        assert!((approx_strip_map(&p, z).unwrap() - z * (PI / c)).norm() < 1e-9);
        let r = StripProfile::from_fn(1.0, |x| 1.0 / x).unwrap();
        let w = approx_strip_map(&r, Complex64::new(3.0, 1.0 / 3.0)).unwrap();
        assert!((w.re - PI * (9.0 - 1.0) / 2.0).abs() < 1e-8 && (w.im - PI).abs() < 1e-12);
        assert!(approx_strip_map(&r, Complex64::new(3.0, 0.5)).is_err());
    }

    #[test]
    fn contour_function_properties() {
        let sp = StripProfile::from_fn(0.0, |x| 1.0 / (1.0 + x)).unwrap();
        let f = contour_function_build(&sp, None, DEFAULT_NODE_SPACING).unwrap();
        assert!(f.tail_bound < TAIL_TOL);
        for z in [Complex64::new(0.3, 0.1), Complex64::new(0.6, -0.2)] {
            assert!((f.winding(z) + 1.0).norm() < 1e-10);
        }
        assert!(f.winding(Complex64::new(2.0, 0.0)).norm() < 1e-10);
        let (disk, off) = f.normalization_report();
        assert!(disk <= 0.5 && off <= 1.0);
        let z = Complex64::new(0.7, 0.05);
        let ratio = (f.eval(z).unwrap() / f.residue_term(z).unwrap()).norm();
        assert!((0.5..=2.0).contains(&ratio));
        assert!(f.eval(Complex64::new(0.5, 1.0 / 1.5 + 1e-3)).is_err());
    }
}
