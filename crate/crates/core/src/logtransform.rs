//! Class-B models, their logarithmic transform `F` (with `exp∘F = f∘exp`),
//! the branch-square families of the two-step inverse `F⁻²`, the growth
//! lemma and the scheme data for the Hausdorff-measure lower bound.
//!
//! Near `x = 5` the translate indices `k` of the branch family already
//! exceed `e^100`, so the family is never listed. Each translate is handled
//! through `ln k`, geometric quantities through their logarithms, and points
//! of a branch domain through a local chart around its center.

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauge::GaugeFn;
use crate::ifs::{interleave_power_ln, schedule_indices, Square, StageStats, DEFAULT_SCHEDULE_CAP};
use crate::logspace::LogValue;

pub type PlaneFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone)]
enum ModelKind {
    Exponential { lambda: Complex64 },
    General { f: PlaneFn, df: PlaneFn, xi: f64 },
}

/// An entire function of class B together with a threshold `R` such that
/// the singular values of `f⁻¹` lie in `D(0, R)`.
#[derive(Clone)]
pub struct ClassBModel {
    kind: ModelKind,
    pub r: f64,
}

impl std::fmt::Debug for ClassBModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.kind {
            ModelKind::Exponential { lambda } => write!(f, "ClassBModel(λe^z, λ={lambda}, R={})", self.r),
            ModelKind::General { xi, .. } => write!(f, "ClassBModel(general, ξ={xi}, R={})", self.r),
        }
    }
}

impl ClassBModel {
    /// `f(z) = λe^z`. Its only singular value is 0, so `R ≥ |λ|` keeps it
    /// inside the threshold disk; see [`ClassBModel::satisfies_threshold`]
    /// for the strict form `R > |f(0)|`.
    pub fn exponential(lambda: Complex64, r: f64) -> Result<Self> {
        if lambda == Complex64::new(0.0, 0.0) || !lambda.is_finite() {
            return Err(Error::pre("λ must be finite and nonzero"));
        }
        if !(r > 0.0) || r < lambda.norm() {
            return Err(Error::pre(format!("threshold R={r} must satisfy R ≥ |λ| = {}", lambda.norm())));
        }
        Ok(ClassBModel { kind: ModelKind::Exponential { lambda }, r })
    }

    /// A general model; `xi` bounds `Re z` on the lift domain from below.
    pub fn general(f: PlaneFn, df: PlaneFn, r: f64, xi: f64) -> Self {
        ClassBModel { kind: ModelKind::General { f, df, xi }, r }
    }

    pub fn lambda(&self) -> Option<Complex64> {
        match self.kind {
            ModelKind::Exponential { lambda } => Some(lambda),
            ModelKind::General { .. } => None,
        }
    }

    /// True when `F` has the closed form `e^z + Log λ`.
    pub fn exact_transform(&self) -> bool {
        matches!(self.kind, ModelKind::Exponential { .. })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            ModelKind::Exponential { lambda } => lambda * z.exp(),
            ModelKind::General { f, .. } => f(z),
        }
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        match &self.kind {
            ModelKind::Exponential { lambda } => lambda * z.exp(),
            ModelKind::General { df, .. } => df(z),
        }
    }

    pub fn ln_r(&self) -> f64 {
        self.r.ln()
    }

    /// `R > |f(0)|`.
    pub fn satisfies_threshold(&self) -> bool {
        self.r > self.eval(Complex64::new(0.0, 0.0)).norm()
    }

    /// `ξ = ln inf{|ζ| : |f(ζ)| = R}`.
    pub fn xi(&self) -> f64 {
        match &self.kind {
            ModelKind::Exponential { lambda } => (self.r / lambda.norm()).ln().abs().ln(),
            ModelKind::General { xi, .. } => *xi,
        }
    }

    fn exp_parts(&self) -> Result<(Complex64, Complex64)> {
        match self.kind {
            ModelKind::Exponential { lambda } => Ok((lambda, lambda.ln())),
            ModelKind::General { .. } => Err(Error::pre("operation needs the exponential family")),
        }
    }
}

/// `F(z)` with `exp(F(z)) = f(exp z)`.
pub fn log_transform_eval(model: &ClassBModel, z: Complex64) -> Result<Complex64> {
    let ez = z.exp();
    if !ez.is_finite() {
        return Err(Error::num(format!("exp({z}) overflows")));
    }
    let w = match &model.kind {
        ModelKind::Exponential { lambda } => ez + lambda.ln(),
        ModelKind::General { f, .. } => {
            let v = f(ez);
            if !(v.norm() > 0.0) || !v.is_finite() {
                return Err(Error::num(format!("f(exp {z}) is not a finite nonzero value")));
            }
            v.ln()
        }
    };
    if !(w.re > model.ln_r()) {
        return Err(Error::pre(format!("z = {z} lies outside the lift domain U")));
    }
    Ok(w)
}

/// One component `V` of the lift domain: the inverse branch of `F` with
/// imaginary parts near `2πk`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogTract {
    pub k: i64,
}

impl LogTract {
    /// The inverse branch `φ(w) = Log(w − Log λ) + 2πik` on `Re w > ln R`.
    pub fn inverse(&self, model: &ClassBModel, w: Complex64) -> Result<Complex64> {
        let (_, c) = model.exp_parts()?;
        Ok((w - c).ln() + I * (TAU * self.k as f64))
    }

    pub fn inverse_deriv(&self, model: &ClassBModel, w: Complex64) -> Result<Complex64> {
        let (_, c) = model.exp_parts()?;
        Ok(1.0 / (w - c))
    }
}

/// Outcome of checking the two inverse-branch estimates at samples.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchReport {
    pub samples: usize,
    /// Smallest `4π/(Re w − ln R) − |φ'(w)|`.
    pub min_slack_inverse: f64,
    /// Smallest `|F'(z)| − (Re F(z) − ln R)/(4π)` at `z = φ(w)`.
    pub min_slack_forward: f64,
    pub violations: Vec<Complex64>,
}

impl BranchReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|φ'(w)| ≤ 4π/(Re w − ln R)` and `|F'(φ(w))| ≥ (Re w − ln R)/(4π)`.
pub fn check_branch_bounds(model: &ClassBModel, tract: &LogTract, w_samples: &[Complex64]) -> Result<BranchReport> {
    let ln_r = model.ln_r();
    let mut rep = BranchReport {
        samples: w_samples.len(),
        min_slack_inverse: f64::INFINITY,
        min_slack_forward: f64::INFINITY,
        violations: Vec::new(),
    };
    for &w in w_samples {
        if !(w.re > ln_r) {
            return Err(Error::pre(format!("sample {w} not in the half-plane Re w > ln R")));
        }
        let dphi = tract.inverse_deriv(model, w)?.norm();
        let slack_a = 4.0 * PI / (w.re - ln_r) - dphi;
        let z = tract.inverse(model, w)?;
        let fprime = model.deriv(z.exp()).norm() * z.exp().norm() / model.eval(z.exp()).norm();
        let slack_b = fprime - (w.re - ln_r) / (4.0 * PI);
        if slack_a < 0.0 || slack_b < 0.0 {
            rep.violations.push(w);
        }
        rep.min_slack_inverse = rep.min_slack_inverse.min(slack_a);
        rep.min_slack_forward = rep.min_slack_forward.min(slack_b);
    }
    Ok(rep)
}

/// `h(x) = max_{Re z = x} Re F(z)` with its maximizer and derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TractGrowth {
    pub x: f64,
    pub h: f64,
    pub z_x: Complex64,
    pub h_prime: f64,
    /// Point past which `h(x) ≥ 2x` holds.
    pub x_star: f64,
}

impl TractGrowth {
    /// `F(z_x)`.
    pub fn center(&self, model: &ClassBModel) -> Complex64 {
        match model.lambda() {
            Some(l) => Complex64::new(self.h, l.arg()),
            None => Complex64::new(self.h, 0.0),
        }
    }
}

pub fn tract_growth(model: &ClassBModel, x: f64) -> Result<TractGrowth> {
    if !(x > model.xi()) {
        return Err(Error::pre(format!("x = {x} must exceed ξ = {}", model.xi())));
    }
    match &model.kind {
        ModelKind::Exponential { lambda } => {
            let ln_l = lambda.norm().ln();
            let ex = x.exp();
            if !ex.is_finite() {
                return Err(Error::num(format!("e^{x} overflows")));
            }
            Ok(TractGrowth { x, h: ex + ln_l, z_x: Complex64::new(x, 0.0), h_prime: ex, x_star: doubling_point(ln_l) })
        }
        ModelKind::General { .. } => {
            let (h, z_x) = general_h(model, x)?;
            let step = 1e-5 * x.abs().max(1.0);
            let hp = (general_h(model, x + step)?.0 - general_h(model, x - step)?.0) / (2.0 * step);
            let mut xs = x;
            while general_h(model, xs).map(|(v, _)| v < 2.0 * xs).unwrap_or(true) && xs < x + 200.0 {
                xs += 0.25;
            }
            Ok(TractGrowth { x, h, z_x, h_prime: hp, x_star: xs })
        }
    }
}

/// Largest root of `e^x + c − 2x` (or `-inf` when it has none).
fn doubling_point(c: f64) -> f64 {
    let g = |x: f64| x.exp() + c - 2.0 * x;
    if g(LN_2) >= 0.0 {
        return f64::NEG_INFINITY;
    }
    let (mut lo, mut hi) = (LN_2, LN_2 + 1.0);
    while g(hi) < 0.0 {
        hi += 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Coarse scan then golden-section search of `Re F` over `Im z ∈ [−π, π]`.
fn general_h(model: &ClassBModel, x: f64) -> Result<(f64, Complex64)> {
    let re_f = |y: f64| log_transform_eval(model, Complex64::new(x, y)).map(|w| w.re).unwrap_or(f64::NEG_INFINITY);
    let n = 256;
    let (mut best, mut by) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=n {
        let y = -PI + TAU * i as f64 / n as f64;
        let v = re_f(y);
        if v > best {
            best = v;
            by = y;
        }
    }
    if !best.is_finite() {
        return Err(Error::pre(format!("the line Re z = {x} misses the lift domain")));
    }
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (by - TAU / n as f64, by + TAU / n as f64);
    for _ in 0..80 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if re_f(c) > re_f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let y = 0.5 * (a + b);
    Ok((re_f(y).max(best), Complex64::new(x, y)))
}

// ---------------------------------------------------------------------------
// Branch families

/// Range `k_lo ..= k_hi` of translate indices, kept through `ln k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KRange {
    pub ln_lo: f64,
    pub ln_hi: f64,
    /// Exact endpoints when they fit comfortably in an `f64` mantissa.
    pub exact: Option<(f64, f64)>,
}

impl KRange {
    /// `ln(k_hi − k_lo + 1)`.
    pub fn ln_count(&self) -> f64 {
        match self.exact {
            Some((lo, hi)) => (hi - lo + 1.0).ln(),
            None => self.ln_hi + (-(self.ln_lo - self.ln_hi).exp_m1()).ln(),
        }
    }

    /// `n` values of `ln k` spread over the range, endpoints included.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                let lk = self.ln_lo + t * (self.ln_hi - self.ln_lo);
                match self.exact {
                    Some(_) => lk.exp().round().ln(),
                    None => lk,
                }
            })
            .collect()
    }
}

const EXACT_K_LIMIT: f64 = 4.0e15;

/// `ln(e^a + e^b)`.
fn lae(a: f64, b: f64) -> f64 {
    LogValue::exp_of(a).add(LogValue::exp_of(b)).ln()
}

/// `log1p(u)` for complex `u`, accurate for small `|u|`.
pub fn clog1p(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        u * clog1p_ratio(u)
    } else {
        (1.0 + u).ln()
    }
}

/// `log1p(u)/u`.
fn clog1p_ratio(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        1.0 - u * (0.5 - u * (1.0 / 3.0 - u * (0.25 - u * 0.2)))
    } else {
        (1.0 + u).ln() / u
    }
}

/// `expm1(δ)/δ`.
fn cexpm1_ratio(d: Complex64) -> Complex64 {
    if d.norm() < 1e-4 {
        1.0 + d * (0.5 + d * (1.0 / 6.0 + d * (1.0 / 24.0 + d / 120.0)))
    } else {
        (d.exp() - 1.0) / d
    }
}

/// One translate `V_k = φ(P_x + 2πik)` of the branch family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Translate {
    pub ln_k: f64,
    /// `ln|a_k|` where `a_k = z_x − Log λ + 2πik`; equals `Re v_k`.
    pub ln_abs_a: f64,
    /// `arg a_k`; equals `Im v_k`.
    pub theta: f64,
    /// `ln d_k`, `d_k = |φ'(z_x + 2πik)| = 1/|a_k|`.
    pub ln_d: f64,
    /// `ln t_k`, radius of the disk inside `V_k`.
    pub ln_t: f64,
    /// `ln T_k`, radius of the disk containing `V_k`.
    pub ln_big_t: f64,
}

/// A point of a branch domain in the chart of its translate: the point is
/// `v_k + 2πil + d_k·omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub omega: Complex64,
}

/// Result of the structural disjointness certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisjointnessReport {
    /// Smallest `ln(Re v_{k+1} − Re v_k) − ln(2T_k)` over sampled `k`; positive
    /// means neighbouring translates are separated horizontally.
    pub min_ln_gap_margin: f64,
    /// Height of the horizontal band holding every `V_k`; below `2π` means
    /// distinct vertical translates are disjoint.
    pub band_height: f64,
    /// Spare room for the vertical translates inside the quarter square.
    pub containment_slack: f64,
}

impl DisjointnessReport {
    pub fn ok(&self) -> bool {
        self.min_ln_gap_margin > 0.0 && self.band_height < TAU && self.containment_slack > 0.0
    }
}

/// The branch domains `W_{k,l} = V_k + 2πil` of one `x`, for
/// `k_1 < k < k_2` and `l_k ≤ l < l_k + N_x`.
#[derive(Clone, Debug)]
pub struct BranchFamily {
    pub x: f64,
    pub growth: TractGrowth,
    lambda: Complex64,
    /// `Log λ`.
    c: Complex64,
    /// The quarter square `S(F(z_x), h/4)`.
    pub quarter: Square,
    pub r_small: f64,
    pub r_big: f64,
    /// Vertical translates per `k`.
    pub n_x: f64,
    pub k_range: KRange,
    /// Certified bounds on `ln Σ_k d_k`.
    pub ln_sum_d: (f64, f64),
    /// Certified lower bound on `ln Σ_j diam W_j`.
    pub ln_sum_diam_lower: f64,
    pub disjointness: DisjointnessReport,
}

impl BranchFamily {
    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    fn a_re(&self) -> f64 {
        self.x - self.c.re
    }

    /// `ln Y_k` with `Y_k = 2πk − arg λ = Im a_k`.
    fn ln_y(&self, ln_k: f64) -> f64 {
        let b = -self.c.im;
        TAU.ln() + ln_k + (b * (-(TAU.ln() + ln_k)).exp()).ln_1p()
    }

    pub fn translate(&self, ln_k: f64) -> Translate {
        let a = self.a_re();
        let ly = self.ln_y(ln_k);
        let la = a.abs().ln();
        let ln_abs_a = ly + 0.5 * (2.0 * (la - ly)).exp().ln_1p();
        let theta = if ly - la > 30.0 || a == 0.0 {
            FRAC_PI_2 - a * (-ly).exp()
        } else {
            ly.exp().atan2(a)
        };
        let ln_d = -ln_abs_a;
        Translate {
            ln_k,
            ln_abs_a,
            theta,
            ln_d,
            ln_t: ln_d + self.r_small.ln() - 4f64.ln(),
            ln_big_t: ln_d + (2.0 * self.r_big).ln(),
        }
    }

    /// `ln(Re v_{k+1} − Re v_k)`.
    pub fn ln_re_gap(&self, t: &Translate) -> f64 {
        // |a_{k+1}|² − |a_k|² = 2π(2Y_k + 2π)
        let ly = self.ln_y(t.ln_k);
        let ln_num = TAU.ln() + LN_2 + ly + (PI * (-ly).exp()).ln_1p();
        let ln_u = ln_num - 2.0 * t.ln_abs_a;
        let u = ln_u.exp();
        let ratio = if u < 1e-8 { 1.0 - 0.5 * u } else { u.ln_1p() / u };
        -LN_2 + ln_u + ratio.ln()
    }

    /// `ln(Re v_{k+1} − Re v_k) − ln(2T_k)`, formed without the large
    /// logarithms so it stays accurate when `ln k` is huge.
    pub fn gap_margin(&self, t: &Translate) -> f64 {
        let ly = self.ln_y(t.ln_k);
        let la = self.a_re().abs().ln();
        // ln num − ln|a_k| with num = |a_{k+1}|² − |a_k|²
        let diff = (4.0 * PI).ln() + (PI * (-ly).exp()).ln_1p() - 0.5 * (2.0 * (la - ly)).exp().ln_1p();
        let ln_u = diff - t.ln_abs_a;
        let u = ln_u.exp();
        let ratio = if u < 1e-8 { 1.0 - 0.5 * u } else { u.ln_1p() / u };
        -LN_2 + diff + ratio.ln() - LN_2 - (2.0 * self.r_big).ln()
    }

    /// `ln|v_{k+1} − v_k|` upper bound via `|Log(1 + 2πi/a_k)| ≤ 2πd/(1 − 2πd)`.
    pub fn ln_step_upper(&self, t: &Translate) -> f64 {
        let q = TAU.ln() + t.ln_d;
        q - (-q.exp()).ln_1p()
    }

    /// Chart coordinates of `φ(φ(w) + 2πik)` for `w` in the quarter square.
    pub fn chart(&self, t: &Translate, w: Complex64) -> ChartPoint {
        let u0 = (w - self.c).ln() - self.growth.z_x;
        let rot = Complex64::from_polar(1.0, -t.theta);
        let ln_u = t.ln_d + u0.norm().ln();
        let u = if u0.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { rot * u0 / u0.norm() * ln_u.exp() };
        ChartPoint { omega: rot * u0 * clog1p_ratio(u) }
    }

    /// `F²` of a chart point, with the `2πik` and `2πil` translates dropped
    /// by periodicity.
    pub fn f2_of_chart(&self, t: &Translate, p: ChartPoint) -> Complex64 {
        let ln_delta = t.ln_d + p.omega.norm().ln();
        let delta = if p.omega.norm() == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            p.omega / p.omega.norm() * ln_delta.exp()
        };
        let q = self.growth.z_x + Complex64::from_polar(1.0, t.theta) * p.omega * cexpm1_ratio(delta);
        q.exp() + self.c
    }

    /// The branch point in absolute coordinates; exact only when `d_k` is
    /// resolvable next to `v_k`.
    pub fn absolute(&self, t: &Translate, l: f64, p: ChartPoint) -> Complex64 {
        let v = Complex64::new(t.ln_abs_a, t.theta + TAU * l);
        v + p.omega * t.ln_d.exp()
    }

    /// First vertical translate index `l_k`.
    pub fn l_start(&self, t: &Translate) -> f64 {
        let lower = self.quarter.center.im - (self.quarter.half - 1.0);
        ((lower - t.theta) / TAU).floor() + 1.0
    }

    /// `ln` of the number of branch domains.
    pub fn ln_count(&self) -> f64 {
        self.k_range.ln_count() + self.n_x.ln()
    }

    /// `ln` of the required lower bound `10⁻⁵h³/h'`.
    pub fn ln_diam_target(&self) -> f64 {
        (1e-5f64).ln() + 3.0 * self.growth.h.ln() - self.growth.h_prime.ln()
    }

    /// Certified bounds on `ln Σ_{k} g(k)` for `g(k) = d_k^s (1+P d_k)^{-s}`.
    pub fn ln_sum_pow(&self, s: f64, p_rad: f64) -> (f64, f64) {
        let kr = &self.k_range;
        if let Some((lo, hi)) = kr.exact {
            if hi - lo < 2.0e6 {
                let mut terms = Vec::new();
                let mut k = lo;
                while k <= hi {
                    let t = self.translate(k.ln());
                    terms.push(LogValue::exp_of(s * (t.ln_d - (p_rad * t.ln_d.exp()).ln_1p())));
                    k += 1.0;
                }
                let v = LogValue::sum(terms).ln();
                return (v, v);
            }
        }
        let a = self.a_re();
        let ly_lo = self.ln_y(kr.ln_lo);
        let ly_hi = self.ln_y(kr.ln_hi);
        let ln_hi1 = kr.ln_hi + (-kr.ln_hi).exp().ln_1p();
        let ly_hi1 = self.ln_y(ln_hi1);
        let integral = |la: f64, lb: f64| -> f64 {
            let delta = lb - la;
            if delta <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let u = (s - 1.0) * delta;
            let ratio = if u.abs() < 1e-12 { 1.0 - 0.5 * u } else { -(-u).exp_m1() / u };
            (1.0 - s) * la + delta.ln() + ratio.ln() - TAU.ln()
        };
        let d_max = self.translate(kr.ln_lo).ln_d.exp();
        let corr_a = -0.5 * s * (2.0 * (a.abs().ln() - ly_lo)).exp().ln_1p();
        let corr_p = -s * (p_rad * d_max).ln_1p();
        let lower = integral(ly_lo, ly_hi1) + corr_a + corr_p;
        let first = -s * ly_lo;
        let upper = lae(first, integral(ly_lo, ly_hi));
        (lower, upper)
    }
}

/// Builds the branch family at `x` and certifies disjointness, containment
/// and the diameter-sum bound; below the range where these hold, returns a
/// precondition error.
pub fn branch_squares(model: &ClassBModel, x: f64) -> Result<BranchFamily> {
    let (lambda, c) = model.exp_parts()?;
    let g = tract_growth(model, x)?;
    let h = g.h;
    if !(h > 16.0) {
        return Err(Error::pre(format!("below threshold: h({x}) = {h} too small for any branch domain")));
    }
    let r_big = h / g.h_prime;
    let r_small = r_big / 16.0;
    let n_x = ((0.5 * h - 3.0) / TAU).floor();
    let center = g.center(model);
    let quarter = Square::new(center, 0.25 * h);
    let mut fam = BranchFamily {
        x,
        growth: g,
        lambda,
        c,
        quarter,
        r_small,
        r_big,
        n_x,
        k_range: KRange { ln_lo: 0.0, ln_hi: 0.0, exact: None },
        ln_sum_d: (0.0, 0.0),
        ln_sum_diam_lower: f64::NEG_INFINITY,
        disjointness: DisjointnessReport { min_ln_gap_margin: 0.0, band_height: 0.0, containment_slack: 0.0 },
    };
    if n_x < 1.0 {
        return Err(Error::pre(format!("below threshold: N_x = {n_x} at x = {x}")));
    }
    // The half square must map into the right half-plane Re > ln R.
    let min_mod = g.h_prime - 0.5 * h * std::f64::consts::SQRT_2;
    if !(min_mod > 0.0 && min_mod.ln() > model.ln_r()) {
        return Err(Error::pre(format!("below threshold: half square leaves the lift domain at x = {x}")));
    }
    fam.k_range = k_bounds(&fam, 0.75 * h + 1.0, 1.25 * h - 1.0)?;

    let samples: Vec<Translate> = fam.k_range.samples(257).into_iter().map(|lk| fam.translate(lk)).collect();
    // Sample checks of the "large x" estimates.
    for t in &samples {
        let d = t.ln_d.exp();
        let bound = 4.0 * PI / (x - model.ln_r());
        if !(t.ln_d <= bound.ln() && t.ln_d <= -(4.0 * PI).ln()) {
            return Err(Error::pre(format!("below threshold: d_k = {d} too large at x = {x}")));
        }
        if !(t.ln_big_t < 0.0) {
            return Err(Error::pre(format!("below threshold: T_k ≥ 1 at x = {x}")));
        }
        let step = fam.ln_step_upper(t);
        if !(step <= (4.0 * PI).ln() + t.ln_d && step <= 0.0) {
            return Err(Error::pre(format!("below threshold: translate steps too large at x = {x}")));
        }
    }
    let margin = samples
        .iter()
        .map(|t| fam.gap_margin(t))
        .fold(f64::INFINITY, f64::min);
    let t_max = samples[0].ln_big_t.exp();
    let (th_lo, th_hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t.theta), b.max(t.theta)));
    let band = th_hi - th_lo + 2.0 * t_max;
    // 2π·N_x ≤ h/2 − 3 by the floor; each column needs room for the band
    // spread and one radius T on either side inside S(F(z_x), h/4 − 1) + T.
    let containment_slack = (0.5 * h - 2.0 - TAU * n_x).max(1.0) - (th_hi - th_lo) - 2.0 * t_max;
    fam.disjointness = DisjointnessReport { min_ln_gap_margin: margin, band_height: band, containment_slack };
    if !fam.disjointness.ok() {
        return Err(Error::pre(format!("below threshold: disjointness certificate fails at x = {x}: {:?}", fam.disjointness)));
    }
    fam.ln_sum_d = fam.ln_sum_pow(1.0, 0.0);
    fam.ln_sum_diam_lower = n_x.ln() + r_small.ln() - LN_2 + fam.ln_sum_d.0;
    if !(fam.ln_sum_diam_lower >= fam.ln_diam_target()) {
        return Err(Error::pre(format!("below threshold: diameter sum too small at x = {x}")));
    }
    Ok(fam)
}

/// `k_1 = max{k : ln|a_k| ≤ c1}`, `k_2 = min{k ≥ k_1 : ln|a_k| > c2}`;
/// returns the range `k_1 < k < k_2`.
fn k_bounds(fam: &BranchFamily, c1: f64, c2: f64) -> Result<KRange> {
    let a = fam.a_re();
    let b = -fam.c.im;
    // ln of (sqrt(e^{2c} − a²) − b)/(2π)
    let ln_kmax = |c: f64| -> f64 {
        let ln_s = c + 0.5 * (-(a * a) * (-2.0 * c).exp()).ln_1p();
        ln_s + (-b * (-ln_s).exp()).ln_1p() - TAU.ln()
    };
    let (l1, l2) = (ln_kmax(c1), ln_kmax(c2));
    if !(l2 > l1) || !(l1 > 0.0) {
        return Err(Error::pre("below threshold: empty translate range"));
    }
    if l2 < EXACT_K_LIMIT.ln() {
        let k1 = l1.exp().floor();
        let k2 = l2.exp().floor() + 1.0;
        if k2 - k1 < 2.0 {
            return Err(Error::pre("below threshold: empty translate range"));
        }
        Ok(KRange { ln_lo: (k1 + 1.0).ln(), ln_hi: (k2 - 1.0).ln(), exact: Some((k1 + 1.0, k2 - 1.0)) })
    } else {
        // Endpoint rounding changes ln k by less than e^{-l1}.
        Ok(KRange { ln_lo: l1, ln_hi: l2, exact: None })
    }
}

// ---------------------------------------------------------------------------
// Growth lemma

/// Grid approximation of `E = {x : g'(x) > g(x)^{1+δ}}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExceptionalSet {
    /// Grid cells whose midpoint lies in `E`.
    pub cells: Vec<(f64, f64)>,
    pub measure: f64,
    pub delta: f64,
    /// `g ≥ 1` at every exceptional midpoint, so the bound `meas E ≤ 1/δ` applies.
    pub bound_applies: bool,
}

impl ExceptionalSet {
    pub fn within_bound(&self) -> bool {
        !self.bound_applies || self.measure <= 1.0 / self.delta
    }

    pub fn contains(&self, x: f64) -> bool {
        self.cells.iter().any(|&(a, b)| a <= x && x <= b)
    }
}

/// [`growth_exceptional_set_ln`] for `g` and `g'` given directly.
pub fn growth_exceptional_set(
    g: &(dyn Fn(f64) -> f64 + Sync),
    dg: &(dyn Fn(f64) -> f64 + Sync),
    delta: f64,
    interval: (f64, f64),
    grid: usize,
) -> Result<ExceptionalSet> {
    growth_exceptional_set_ln(&|x| g(x).ln(), &|x| dg(x).ln(), delta, interval, grid)
}

/// Exceptional set of the growth lemma from `ln g` and `ln g'`, which keeps
/// doubly exponential `g` in range.
pub fn growth_exceptional_set_ln(
    ln_g: &(dyn Fn(f64) -> f64 + Sync),
    ln_dg: &(dyn Fn(f64) -> f64 + Sync),
    delta: f64,
    interval: (f64, f64),
    grid: usize,
) -> Result<ExceptionalSet> {
    let (a, b) = interval;
    if !(delta > 0.0) || !(b > a) || grid == 0 {
        return Err(Error::pre("growth lemma needs δ > 0, a nonempty interval and a grid"));
    }
    let w = (b - a) / grid as f64;
    let flags: Vec<Option<bool>> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let x = a + (i as f64 + 0.5) * w;
            let lg = ln_g(x);
            (ln_dg(x) > (1.0 + delta) * lg).then_some(lg >= 0.0)
        })
        .collect();
    let mut cells = Vec::new();
    let mut bound_applies = true;
    for (i, f) in flags.iter().enumerate() {
        if let Some(g_ge_1) = f {
            cells.push((a + i as f64 * w, a + (i + 1) as f64 * w));
            bound_applies &= *g_ge_1;
        }
    }
    Ok(ExceptionalSet { measure: cells.len() as f64 * w, cells, delta, bound_applies })
}

/// `ln h` and `ln h'` of the exponential family, valid far past `e^709`.
fn ln_h_exp(x: f64, ln_abs_lambda: f64) -> (f64, f64) {
    (x + (ln_abs_lambda * (-x).exp()).ln_1p(), x)
}

// ---------------------------------------------------------------------------
// Theorem 1 construction

/// The exponent used for the growth-lemma margin between the diameter
/// bound `h³/h'` and `h^{3/2}`.
pub const GROWTH_DELTA: f64 = 0.5;
/// Grid cells used when avoiding `E` in `[h(x_{k−1}), h(x_{k−1}) + 1]`.
pub const SELECTION_GRID: usize = 64;

/// Scheme `P_k`: the branches `(F²|W)⁻¹` of one branch family, conjugated
/// to the unit square by `L_k`.
#[derive(Clone, Debug)]
pub struct PStage {
    pub family: BranchFamily,
    /// `max_{w ∈ S(1, ρ/4)} |Log w|`, `ρ = h e^{−x}`.
    pub p_rad: f64,
    /// `ln max_{S_k} |w − Log λ| − x`.
    pub ln_m1: f64,
    /// Certified bounds on `ln Σ b̃`.
    pub ln_sum_b: (f64, f64),
    pub stats: StageStats,
    /// `Σ diam W ≥ h^{3/2}`.
    pub meets_three_halves: bool,
}

impl PStage {
    /// `ln b̃` for one translate: chord bounds for both logarithms.
    pub fn ln_b(&self, t: &Translate) -> f64 {
        t.ln_d - (self.p_rad * t.ln_d.exp()).ln_1p() - self.family.x - self.ln_m1
    }

    /// Bounds on `ln Σ b̃^s`.
    pub fn ln_sum_pow(&self, s: f64) -> (f64, f64) {
        let (lo, hi) = self.family.ln_sum_pow(s, self.p_rad);
        let shift = self.family.n_x.ln() - s * (self.family.x + self.ln_m1);
        (lo + shift, hi + shift)
    }

    /// `P̃'(w)/d_k` with `P̃ = φ(φ(w) + 2πik)`, in unit-square coordinates.
    pub fn scaled_deriv(&self, t: &Translate, zeta: Complex64) -> Complex64 {
        let fam = &self.family;
        let w = l_inverse(fam, zeta);
        let u0 = (w - fam.c).ln() - fam.growth.z_x;
        let rot = Complex64::from_polar(1.0, -t.theta);
        let u = rot * u0 * t.ln_d.exp();
        rot / ((w - fam.c) * (1.0 + u))
    }
}

/// Scheme `Q_k`: branches `Log(w − Log λ) + 2πij` from `S_{k+1}` into `S_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QStage {
    pub ln_count: f64,
    pub ln_b: f64,
    pub ln_sep: f64,
}

/// Output of [`thm1_scheme_builder`].
#[derive(Clone, Debug)]
pub struct Thm1Construction {
    pub xs: Vec<f64>,
    pub p: Vec<PStage>,
    pub q: Vec<QStage>,
    /// Powers `p_k` in `R_{2k} = P_k^{p_k} ∘ Q_k`.
    pub interleave: Vec<u64>,
    /// Statistics of `P_1, P_1^{p_1}∘Q_1, P_2, …`.
    pub pool: Vec<StageStats>,
    /// Schedule for the first `scheduled` pool entries; later entries have
    /// `s − 1` below `f64` resolution and their indices exceed any integer
    /// type.
    pub schedule: Vec<usize>,
    pub scheduled: usize,
    pub exceptional: Vec<ExceptionalSet>,
}

impl Thm1Construction {
    /// `L_k(z) = (2/h(x_k))(z − F(z_{x_k})) + (1+i)/2`.
    pub fn l_map(&self, k: usize, z: Complex64) -> Complex64 {
        l_forward(&self.p[k].family, z)
    }

    pub fn l_inverse(&self, k: usize, zeta: Complex64) -> Complex64 {
        l_inverse(&self.p[k].family, zeta)
    }
}

fn l_forward(fam: &BranchFamily, z: Complex64) -> Complex64 {
    (z - fam.quarter.center) * (2.0 / fam.growth.h) + Complex64::new(0.5, 0.5)
}

fn l_inverse(fam: &BranchFamily, zeta: Complex64) -> Complex64 {
    (zeta - Complex64::new(0.5, 0.5)) * (0.5 * fam.growth.h) + fam.quarter.center
}

/// Smallest root of a decreasing function on `[0, 64]`.
fn solve_decreasing(f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 64.0);
    if f(lo) < 0.0 || f(hi) > 0.0 {
        return Err(Error::num("dimension equation has no root in [0, 64]"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(ln(1 − ρ/4), ln|1 + (ρ/4)(1+i)|, atan((ρ/4)/(1 − ρ/4)))`: modulus and
/// argument ranges of `w/e^x` over `S(e^x, h/4)`.
fn square_log_ranges(rho: f64) -> Result<(f64, f64, f64)> {
    let q = 0.25 * rho;
    if !(q < 1.0) {
        return Err(Error::pre("quarter square reaches the origin"));
    }
    Ok(((-q).ln_1p(), Complex64::new(1.0 + q, q).norm().ln(), (q / (1.0 - q)).atan()))
}

fn build_p_stage(model: &ClassBModel, x: f64) -> Result<PStage> {
    let family = branch_squares(model, x)?;
    let g = family.growth;
    let rho = g.h / g.h_prime;
    let (ln_min, ln_m1, arg) = square_log_ranges(rho)?;
    let p_rad = (-ln_min).max(ln_m1).hypot(arg);
    let mut st = PStage {
        family,
        p_rad,
        ln_m1,
        ln_sum_b: (0.0, 0.0),
        stats: StageStats { ln_alpha: 0.0, ln_beta: 0.0, gamma: 0.0, delta: 0.0, ln_d: 0.0 },
        meets_three_halves: false,
    };
    st.ln_sum_b = st.ln_sum_pow(1.0);
    if !(st.ln_sum_b.0 > 0.0) {
        return Err(Error::pre(format!(
            "below threshold: certified Σ b̃ = {} ≤ 1 at x = {x}",
            st.ln_sum_b.0.exp()
        )));
    }
    let fam = &st.family;
    let samples: Vec<Translate> = fam.k_range.samples(257).into_iter().map(|lk| fam.translate(lk)).collect();
    let gamma = solve_decreasing(&|s| st.ln_sum_pow(s).0)?;
    let delta = solve_decreasing(&|s| st.ln_sum_pow(s).1)?;
    let ln_gap_h = samples
        .iter()
        .map(|t| LN_2 + t.ln_big_t + fam.gap_margin(t).exp_m1().ln())
        .fold(f64::INFINITY, f64::min);
    let ln_gap_v = (TAU - fam.disjointness.band_height - 2.0 * samples[0].ln_big_t.exp()).ln();
    st.stats = StageStats {
        ln_alpha: st.ln_b(samples.last().expect("samples")),
        ln_beta: st.ln_b(&samples[0]),
        gamma,
        delta,
        ln_d: (2.0 / g.h).ln() + ln_gap_h.min(ln_gap_v),
    };
    st.meets_three_halves = fam.ln_sum_diam_lower >= 1.5 * g.h.ln();
    Ok(st)
}

/// `Q_k` from the stage at `x_k` (family `cur`) to the stage at `x_next`.
fn build_q_stage(model: &ClassBModel, cur: &BranchFamily, x_next: f64) -> Result<QStage> {
    let ln_l = model.lambda().expect("exponential family").norm().ln();
    let (ln_h1, _) = ln_h_exp(x_next, ln_l);
    let rho = (ln_h1 - x_next).exp();
    let (ln_min, ln_m1, arg) = square_log_ranges(rho)?;
    let hk = cur.growth.h;
    let c = cur.quarter.center;
    if !(x_next + ln_min > 0.75 * hk && x_next + ln_m1 < 1.25 * hk) {
        return Err(Error::pre(format!("Q images leave S_k horizontally at x = {}", cur.x)));
    }
    // Columns j with 2πj + [−arg, arg] inside (Im c − h/4, Im c + h/4).
    let j_lo = ((c.im - 0.25 * hk + arg) / TAU).floor() + 1.0;
    let j_hi = ((c.im + 0.25 * hk - arg) / TAU).ceil() - 1.0;
    let count = j_hi - j_lo + 1.0;
    if !(count >= 1.0) {
        return Err(Error::pre(format!("no Q branch fits in S_k at x = {}", cur.x)));
    }
    Ok(QStage {
        ln_count: count.ln(),
        ln_b: ln_h1 - hk.ln() - x_next - ln_m1,
        ln_sep: (2.0 / hk).ln() + (TAU - 2.0 * arg).ln(),
    })
}

/// Pool statistics of `R = P^p ∘ Q`.
fn composite_stats(p_stage: &PStage, q: &QStage, p: u64) -> Result<StageStats> {
    let pf = p as f64;
    let f_lo = |s: f64| q.ln_count + s * q.ln_b + pf * p_stage.ln_sum_pow(s).0;
    let f_hi = |s: f64| q.ln_count + s * q.ln_b + pf * p_stage.ln_sum_pow(s).1;
    let ps = &p_stage.stats;
    Ok(StageStats {
        ln_alpha: q.ln_b + pf * ps.ln_alpha,
        ln_beta: q.ln_b + pf * ps.ln_beta,
        gamma: solve_decreasing(&f_lo)?,
        delta: solve_decreasing(&f_hi)?,
        ln_d: pf * ps.ln_alpha + ps.ln_d.min(q.ln_sep),
    })
}

/// Builds the stages `P_k, Q_k` for `λe^z` starting at `x_1`, the pool
/// `P_1, P_1^{p_1}∘Q_1, P_2, …` and its schedule.
///
/// `stages` is capped by representability: `x_{k+1} ≈ h(x_k)` and the
/// branch family at `x` needs `e^x` in range, so at most two stages exist.
/// When `ln_rate` is given, schedule indices are raised until
/// `ln p_n ≥ 5h/4` of the deepest stage in use, which keeps `Re F^n ≤ ln p_n`.
pub fn thm1_scheme_builder(
    model: &ClassBModel,
    gauge: &GaugeFn,
    ln_rate: Option<&dyn Fn(usize) -> f64>,
    x1: f64,
    stages: usize,
) -> Result<Thm1Construction> {
    let lambda = model.exp_parts()?.0;
    if stages == 0 {
        return Err(Error::pre("need at least one stage"));
    }
    let ln_l = lambda.norm().ln();
    let ln_g = move |x: f64| ln_h_exp(x, ln_l).0;
    let ln_dg = move |x: f64| ln_h_exp(x, ln_l).1;
    let e1 = growth_exceptional_set_ln(&ln_g, &ln_dg, GROWTH_DELTA, (x1 - 0.5, x1 + 0.5), SELECTION_GRID)?;
    if ln_dg(x1) > (1.0 + GROWTH_DELTA) * ln_g(x1) {
        return Err(Error::pre(format!("x_1 = {x1} lies in the exceptional set")));
    }
    let mut xs = vec![x1];
    let mut exceptional = vec![e1];
    while xs.len() < stages {
        let h = tract_growth(model, *xs.last().expect("nonempty"))?.h;
        if !(h < crate::tower::LN_MAX) {
            break;
        }
        let e = growth_exceptional_set_ln(&ln_g, &ln_dg, GROWTH_DELTA, (h, h + 1.0), SELECTION_GRID)?;
        let w = 1.0 / SELECTION_GRID as f64;
        let x = (0..SELECTION_GRID)
            .map(|i| h + (i as f64 + 0.5) * w)
            .find(|&x| !e.contains(x))
            .ok_or_else(|| Error::pre(format!("every grid cell of [{h}, {h}+1] lies in E")))?;
        xs.push(x);
        exceptional.push(e);
    }
    let p: Vec<PStage> = xs.iter().map(|&x| build_p_stage(model, x)).collect::<Result<_>>()?;
    let mut q = Vec::new();
    let mut interleave = Vec::new();
    let mut pool = vec![p[0].stats];
    for k in 0..p.len() - 1 {
        let qs = build_q_stage(model, &p[k].family, xs[k + 1])?;
        let pk = interleave_power_ln(qs.ln_count, LogValue::exp_of(qs.ln_b), LogValue::exp_of(p[k].ln_sum_b.0))?;
        pool.push(composite_stats(&p[k], &qs, pk)?);
        pool.push(p[k + 1].stats);
        q.push(qs);
        interleave.push(pk);
    }
    let eps = |t: f64| {
        // ε is nondecreasing, so the value at the least positive double
        // bounds it for anything that underflows.
        let ln_t = if t > 0.0 { t.ln() } else { f64::MIN_POSITIVE.ln() - 52.0 * LN_2 };
        (gauge.ln_eval(ln_t) / ln_t - 1.0).max(0.0)
    };
    let scheduled = pool.iter().take_while(|st| st.gamma > 1.0).count();
    if scheduled == 0 {
        return Err(Error::pre("first pool entry has s = 1 to working precision"));
    }
    let mut schedule = schedule_indices(&pool[..scheduled], &eps, DEFAULT_SCHEDULE_CAP)?;
    if let Some(rate) = ln_rate {
        let mut prev = 0usize;
        for (i, n) in schedule.iter_mut().enumerate() {
            // Pool entry i+1 draws on P-stage (i+1)/2 + 1 at most.
            let stage = (i.div_ceil(2) + 1).min(p.len() - 1);
            let need = 1.25 * p[stage].family.growth.h;
            let mut m = (*n).max(prev + 1);
            while rate(m) < need {
                m += 1;
                if m > DEFAULT_SCHEDULE_CAP {
                    return Err(Error::num("rate sequence too slow for the schedule cap"));
                }
            }
            *n = m;
            prev = m;
        }
    }
    Ok(Thm1Construction { xs, p, q, interleave, pool, schedule, scheduled, exceptional })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_exp() -> ClassBModel {
        ClassBModel::exponential(Complex64::new(1.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn transform_conjugates_and_is_periodic() {
        let m = ClassBModel::exponential(Complex64::new(0.5, 0.2), 1.0).unwrap();
        for &z in &[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.7), Complex64::new(3.0, -0.5)] {
            let w = log_transform_eval(&m, z).unwrap();
            let lhs = w.exp();
            let rhs = m.eval(z.exp());
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm());
            let w2 = log_transform_eval(&m, z + I * TAU).unwrap();
            assert!((w2 - w).norm() <= 1e-12 * w.norm());
        }
    }

    #[test]
    fn outside_lift_domain_is_precondition() {
        let m = unit_exp();
        assert!(matches!(log_transform_eval(&m, Complex64::new(0.0, PI)), Err(Error::Precondition(_))));
    }

    #[test]
    fn growth_of_exponential() {
        let g = tract_growth(&unit_exp(), 5.0).unwrap();
        assert!((g.h - 5f64.exp()).abs() < 1e-12 && g.z_x == Complex64::new(5.0, 0.0));
    }

    #[test]
    fn general_model_matches_closed_form() {
        let f: PlaneFn = Arc::new(|z: Complex64| z.exp());
        let m = ClassBModel::general(f.clone(), f, 1.0, -10.0);
        let g = tract_growth(&m, 3.0).unwrap();
        assert!((g.h - 3f64.exp()).abs() < 1e-8, "{}", g.h);
        assert!((g.h_prime - 3f64.exp()).abs() < 1e-4);
    }

    #[test]
    fn branch_count_at_five() {
        let fam = branch_squares(&unit_exp(), 5.0).unwrap();
        assert_eq!(fam.n_x, 11.0);
        assert!(fam.disjointness.ok());
    }

    #[test]
    fn exceptional_sets() {
        let e = growth_exceptional_set(&|x| x, &|_| 1.0, 0.1, (1.0, 100.0), 1000).unwrap();
        assert!(e.cells.is_empty());
        let e = growth_exceptional_set_ln(&|x| x * x, &|x| (2.0 * x).ln() + x * x, 0.1, (0.0, 20.0), 20_000).unwrap();
        // E is the interval between the two roots of ln(2x) = 0.1x².
        let root = |mut a: f64, mut b: f64| {
            let f = |x: f64| (2.0 * x).ln() - 0.1 * x * x;
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if (f(m) > 0.0) == (f(a) > 0.0) { a = m } else { b = m }
            }
            a
        };
        let exact = root(1.0, 10.0) - root(0.1, 1.0);
        assert!((e.measure - exact).abs() < 2e-3, "{} vs {exact}", e.measure);
        assert!(e.within_bound());
    }

    #[test]
    fn chord_bound_is_below_derivative() {
        let c = thm1_scheme_builder(&unit_exp(), &GaugeFn::power(1.0), None, 6.0, 1).unwrap();
        let st = &c.p[0];
        for lk in st.family.k_range.samples(5) {
            let t = st.family.translate(lk);
            let min = Square::unit()
                .grid(16)
                .into_iter()
                .map(|z| st.scaled_deriv(&t, z).norm().ln())
                .fold(f64::INFINITY, f64::min);
            assert!(st.ln_b(&t) - t.ln_d <= min);
        }
    }

    #[test]
    fn l_map_sends_corners_to_unit_square() {
        let c = thm1_scheme_builder(&unit_exp(), &GaugeFn::power(1.0), None, 6.0, 1).unwrap();
        let q = c.p[0].family.quarter;
        let h = q.half;
        let corners = [(-1.0, -1.0, 0.0, 0.0), (1.0, -1.0, 1.0, 0.0), (1.0, 1.0, 1.0, 1.0), (-1.0, 1.0, 0.0, 1.0)];
        for (a, b, u, v) in corners {
            let z = q.center + Complex64::new(a * h, b * h);
            assert!((c.l_map(0, z) - Complex64::new(u, v)).norm() < 1e-12);
            assert!((c.l_inverse(0, Complex64::new(u, v)) - z).norm() < 1e-9);
        }
    }
}
