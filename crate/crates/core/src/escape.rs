//! Orbits, escape-rate classification and rendering.
//!
//! Verdicts about "all large n" or "infinitely many n" only speak about the
//! iterates up to the horizon, which is stored with each verdict. Raw rate
//! violation indices are always reported, whatever the class.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::{huge17, sig17};
use crate::logtransform::ClassBModel;
use crate::tower::Huge;

/// A rate sequence `p_1, p_2, …` tabulated up to some length.
#[derive(Clone, Debug, PartialEq)]
pub struct RateSequence {
    values: Vec<f64>,
    pub normalized: bool,
}

impl RateSequence {
    pub fn from_fn(p: impl Fn(usize) -> f64, len: usize) -> Self {
        RateSequence { values: (1..=len).map(p).collect(), normalized: false }
    }

    pub fn tabulated(values: Vec<f64>) -> Self {
        RateSequence { values, normalized: false }
    }

    /// `p_n` for `1 ≤ n ≤ len`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Replaces `p` by `q_n = min{n, inf_{k≥n} p_k} + 6Σ_{k≤n} k⁻² − π²` for
/// `n ≤ big_n`, so that `q_n ≤ p_n`, `q_n ≤ n` and `q_n − q_{n−1} ≥ 6/n²`.
///
/// The infimum runs over the whole tabulated tail, which must reach `2N`.
/// Divergence is sample-checked: the least value on the upper half of the
/// table must exceed the least value on the lower half.
pub fn normalize_rate_sequence(p: &RateSequence, big_n: usize) -> Result<RateSequence> {
    if big_n == 0 {
        return Err(Error::pre("N must be positive"));
    }
    let len = p.len();
    if len < 2 * big_n {
        return Err(Error::pre(format!("rate sequence tabulated to {len}, need at least 2N = {}", 2 * big_n)));
    }
    if p.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::pre("rate sequence must be finite"));
    }
    let half = len / 2;
    let lower = p.values[..half].iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = p.values[half..].iter().cloned().fold(f64::INFINITY, f64::min);
    if !(upper > lower) {
        return Err(Error::num(format!("rate sequence does not diverge on the sample: tail infimum {upper} ≤ {lower}")));
    }
    // Suffix minima.
    let mut inf = vec![0.0; len];
    let mut run = f64::INFINITY;
    for i in (0..len).rev() {
        run = run.min(p.values[i]);
        inf[i] = run;
    }
    let mut s = 0.0;
    let q = (1..=big_n)
        .map(|n| {
            s += 6.0 / (n * n) as f64;
            (n as f64).min(inf[n - 1]) + (s - PI * PI)
        })
        .collect();
    Ok(RateSequence { values: q, normalized: true })
}

/// An iterate: a plain complex number, a positive real beyond `f64`, or a
/// point whose modulus is known but whose argument is lost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitValue {
    Plain(Complex64),
    PositiveReal(Huge),
    ModulusOnly,
}

/// A real number that may exceed `f64` on the positive side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LnAmount {
    Finite(f64),
    Large(Huge),
}

impl LnAmount {
    fn add(self, x: Huge) -> LnAmount {
        match self {
            LnAmount::Finite(a) => {
                if x.level() == 0 && (a + x.top()).is_finite() {
                    LnAmount::Finite(a + x.top())
                } else {
                    LnAmount::Large(x.add_f64(a))
                }
            }
            LnAmount::Large(h) => LnAmount::Large(h.add(x)),
        }
    }

    fn add_f64(self, x: f64) -> LnAmount {
        self.add(Huge::from_f64(x))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            LnAmount::Finite(a) => a,
            LnAmount::Large(_) => f64::INFINITY,
        }
    }

    pub fn text(self) -> String {
        match self {
            LnAmount::Finite(a) => sig17(a),
            LnAmount::Large(h) => huge17(h),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub value: OrbitValue,
    pub modulus: Huge,
    /// `Σ_{k<n} ln|f'(z_k)|`, that is `ln ρ_n⁻¹`.
    pub ln_deriv_sum: LnAmount,
}

/// `z_0, …, z_N` with moduli and derivative sums. When the argument of an
/// iterate is lost the record stops there and `lost_at` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub z0: Complex64,
    pub points: Vec<OrbitPoint>,
    pub horizon: usize,
    pub lost_at: Option<usize>,
}

/// `ln|f'(z)|` of one iterate, as a possibly huge amount.
fn ln_deriv(model: &ClassBModel, v: OrbitValue) -> Option<LnAmount> {
    match (v, model.lambda()) {
        (OrbitValue::Plain(z), Some(l)) => Some(LnAmount::Finite(l.norm().ln() + z.re)),
        (OrbitValue::Plain(z), None) => Some(LnAmount::Finite(model.deriv(z).norm().ln())),
        (OrbitValue::PositiveReal(x), Some(l)) => Some(LnAmount::Large(x).add_f64(l.norm().ln())),
        _ => None,
    }
}

impl OrbitRecord {
    /// Recomputes `Σ ln|f'(z_k)|` from the stored iterates.
    pub fn recompute_ln_deriv(&self, model: &ClassBModel) -> Vec<LnAmount> {
        let mut acc = LnAmount::Finite(0.0);
        let mut out = vec![acc];
        for p in &self.points[..self.points.len().saturating_sub(1)] {
            match ln_deriv(model, p.value) {
                Some(LnAmount::Finite(d)) => acc = acc.add_f64(d),
                Some(LnAmount::Large(h)) => acc = acc.add(h),
                None => break,
            }
            out.push(acc);
        }
        out
    }

    /// Orbit CSV: `n, re, im, ln_modulus, ln_deriv_sum`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,re,im,ln_modulus,ln_deriv_sum\n");
        for (n, p) in self.points.iter().enumerate() {
            let (re, im) = match p.value {
                OrbitValue::Plain(z) => (sig17(z.re), sig17(z.im)),
                OrbitValue::PositiveReal(x) => (huge17(x), sig17(0.0)),
                OrbitValue::ModulusOnly => ("nan".into(), "nan".into()),
            };
            let lnm = match p.modulus.level() {
                0 => sig17(p.modulus.top().ln()),
                _ => huge17(p.modulus.ln()),
            };
            s.push_str(&format!("{n},{re},{im},{lnm},{}\n", p.ln_deriv_sum.text()));
        }
        s
    }
}

fn huge_exp_of_re(x: f64) -> Huge {
    Huge::from_f64(x).exp()
}

/// Iterates `f` up to `horizon`. The exponential family switches to tower
/// arithmetic for positive real orbits once `e^x` overflows; any other
/// overflow loses the argument and ends the record.
pub fn orbit(model: &ClassBModel, z0: Complex64, horizon: usize) -> Result<OrbitRecord> {
    if !z0.is_finite() {
        return Err(Error::pre("z₀ must be finite"));
    }
    let mut points = vec![OrbitPoint { value: OrbitValue::Plain(z0), modulus: Huge::from_f64(z0.norm()), ln_deriv_sum: LnAmount::Finite(0.0) }];
    let lambda = model.lambda();
    let positive_lambda = lambda.filter(|l| l.im == 0.0 && l.re > 0.0).map(|l| l.re);
    let mut lost_at = None;
    for n in 1..=horizon {
        let prev = *points.last().expect("nonempty");
        let d = ln_deriv(model, prev.value).ok_or_else(|| Error::num("derivative of a lost iterate"))?;
        let sum = match d {
            LnAmount::Finite(v) => prev.ln_deriv_sum.add_f64(v),
            LnAmount::Large(h) => prev.ln_deriv_sum.add(h),
        };
        let next = match prev.value {
            OrbitValue::Plain(z) => {
                let w = model.eval(z);
                if w.is_finite() {
                    if w.re.is_nan() || w.im.is_nan() {
                        return Err(Error::num(format!("NaN iterate at n = {n}")));
                    }
                    OrbitPoint { value: OrbitValue::Plain(w), modulus: Huge::from_f64(w.norm()), ln_deriv_sum: sum }
                } else if let Some(l) = lambda {
                    // |λe^z| = |λ|e^{Re z}, computed in tower arithmetic.
                    let m = huge_exp_of_re(z.re).scale(l.norm());
                    let value = match (positive_lambda, z.im == 0.0) {
                        (Some(_), true) => OrbitValue::PositiveReal(m),
                        _ => OrbitValue::ModulusOnly,
                    };
                    OrbitPoint { value, modulus: m, ln_deriv_sum: sum }
                } else {
                    lost_at = Some(n);
                    break;
                }
            }
            OrbitValue::PositiveReal(x) => {
                let l = positive_lambda.expect("positive real orbits need λ > 0");
                let m = x.exp().scale(l);
                OrbitPoint { value: OrbitValue::PositiveReal(m), modulus: m, ln_deriv_sum: sum }
            }
            OrbitValue::ModulusOnly => unreachable!("the loop stops at a lost argument"),
        };
        let lost = matches!(next.value, OrbitValue::ModulusOnly);
        points.push(next);
        if lost {
            lost_at = Some(n);
            break;
        }
    }
    Ok(OrbitRecord { z0, points, horizon, lost_at })
}

/// `Mⁿ(R)` with `M(r) = max_{|z|=r}|f(z)|`: `|λ|e^r` for the exponential
/// family, a 4096-point sampled maximum otherwise.
pub fn iterated_max_modulus(model: &ClassBModel, r: f64, n: usize) -> Result<Huge> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::pre("R must be positive"));
    }
    let mut m = Huge::from_f64(r);
    for _ in 0..n {
        m = match model.lambda() {
            Some(l) => m.exp().scale(l.norm()),
            None => {
                let rr = m.to_f64();
                if !rr.is_finite() {
                    return Err(Error::num("sampled maximum modulus beyond f64"));
                }
                Huge::from_f64(sampled_max(&|z| model.eval(z), rr, MAX_MODULUS_SAMPLES))
            }
        };
    }
    Ok(m)
}

pub const MAX_MODULUS_SAMPLES: usize = 4096;

fn sampled_max(f: &dyn Fn(Complex64) -> Complex64, r: f64, n: usize) -> f64 {
    (0..n).map(|k| f(Complex64::from_polar(r, TAU * k as f64 / n as f64)).norm()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CauchyCheck {
    pub max_deriv: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `max_{|z|=r}|f'| ≤ max_{|z|=R}|f| / (R − r)` on `samples` points.
pub fn derivative_cauchy_check(
    f: &dyn Fn(Complex64) -> Complex64,
    df: &dyn Fn(Complex64) -> Complex64,
    r: f64,
    r_big: f64,
    samples: usize,
) -> Result<CauchyCheck> {
    if !(r_big > r && r >= 0.0) {
        return Err(Error::pre("need 0 ≤ r < R"));
    }
    let max_deriv = sampled_max(df, r, samples);
    let bound = sampled_max(f, r_big, samples) / (r_big - r);
    Ok(CauchyCheck { max_deriv, bound, holds: max_deriv <= bound })
}

/// Parameters of the fast-escape test `|f^{n+L}(z)| ≥ Mⁿ(R)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FastCriterion {
    pub base: f64,
    /// Largest shift `L` tried; at most half the horizon is used.
    pub max_shift: usize,
}

impl FastCriterion {
    pub fn new(base: f64) -> Self {
        FastCriterion { base, max_shift: 8 }
    }
}

/// Iterates after which a found trapping disk is confirmed.
pub const TRAP_ITERATIONS: usize = 200;
/// Boundary samples for the derivative maximum on a candidate disk.
pub const TRAP_SAMPLES: usize = 64;
/// Relative tolerance of the comparisons `|f^{n+L}| ≥ Mⁿ(R)`.
pub const FAST_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum EscapeClass {
    /// The orbit entered a disk on which sampled `|f'| < 1` and which `f`
    /// maps into itself; it stayed there for [`TRAP_ITERATIONS`] iterates.
    Bounded { center: Complex64, radius: f64 },
    EscapingWithinRate,
    UnbViolation { count: usize, indices: Vec<usize> },
    FastEscaping { shift: usize },
    Undetermined,
}

impl EscapeClass {
    /// Raster code.
    pub fn code(&self) -> u8 {
        match self {
            EscapeClass::Bounded { .. } => 0,
            EscapeClass::EscapingWithinRate => 1,
            EscapeClass::UnbViolation { .. } => 2,
            EscapeClass::FastEscaping { .. } => 3,
            EscapeClass::Undetermined => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        CLASS_NAMES[self.code() as usize]
    }
}

pub const CLASS_NAMES: [&str; 5] = ["bounded", "escaping-within-rate", "unb-violation", "fast-escaping", "undetermined"];

/// RGB per class code.
pub const PALETTE: [[u8; 3]; 5] = [[20, 40, 140], [60, 180, 75], [230, 160, 20], [200, 30, 30], [128, 128, 128]];

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub class: EscapeClass,
    pub horizon: usize,
    /// Every `n ≤ N` with `|fⁿ(z₀)| > p_n`.
    pub violations: Vec<usize>,
    pub record: OrbitRecord,
}

/// Searches a disk around `c` mapped into itself by a contraction,
/// halving the radius from 1.
fn trapping_disk(model: &ClassBModel, c: Complex64) -> Option<f64> {
    let fc = model.eval(c);
    if !fc.is_finite() {
        return None;
    }
    let mut rho = 1.0;
    for _ in 0..40 {
        let k = (0..TRAP_SAMPLES)
            .map(|j| model.deriv(c + Complex64::from_polar(rho, TAU * j as f64 / TRAP_SAMPLES as f64)).norm())
            .fold(model.deriv(c).norm(), f64::max);
        if k < 1.0 && (fc - c).norm() <= (1.0 - k) * rho {
            return Some(rho);
        }
        rho *= 0.5;
    }
    None
}

fn ge_tol(a: Huge, b: Huge) -> bool {
    a >= b || a.approx_eq(b, FAST_TOL)
}

/// Classifies the orbit of `z0` at horizon `N`. Priority: bounded, fast
/// escaping, rate violation, escaping within the rate, undetermined.
pub fn classify_orbit(
    model: &ClassBModel,
    z0: Complex64,
    rate: Option<&RateSequence>,
    horizon: usize,
    fast: Option<FastCriterion>,
) -> Result<Verdict> {
    if horizon == 0 {
        return Err(Error::pre("horizon must be at least 1"));
    }
    if let Some(p) = rate {
        if p.len() < horizon {
            return Err(Error::pre(format!("rate sequence tabulated to {}, horizon {horizon}", p.len())));
        }
    }
    let record = orbit(model, z0, horizon)?;
    let known = record.points.len() - 1;
    let violations: Vec<usize> = match rate {
        Some(p) => (1..=known).filter(|&n| record.points[n].modulus > Huge::from_f64(p.get(n).expect("checked"))).collect(),
        None => Vec::new(),
    };
    let done = |class| Ok(Verdict { class, horizon, violations: violations.clone(), record: record.clone() });

    if let (None, Some(OrbitValue::Plain(zn))) = (record.lost_at, record.points.last().map(|p| p.value)) {
        if let Some(rho) = trapping_disk(model, zn) {
            let mut z = zn;
            let mut inside = true;
            for _ in 0..TRAP_ITERATIONS {
                z = model.eval(z);
                if !((z - zn).norm() <= rho) {
                    inside = false;
                    break;
                }
            }
            if inside {
                return done(EscapeClass::Bounded { center: z, radius: rho });
            }
        }
    }

    if let Some(fc) = fast {
        if record.lost_at.is_none() {
            let max_shift = fc.max_shift.min(horizon / 2);
            let mut m = Vec::with_capacity(horizon + 1);
            let mut cur = Huge::from_f64(fc.base);
            for n in 0..=horizon {
                if n > 0 {
                    cur = match model.lambda() {
                        Some(l) => cur.exp().scale(l.norm()),
                        None => match cur.to_f64() {
                            r if r.is_finite() => Huge::from_f64(sampled_max(&|z| model.eval(z), r, MAX_MODULUS_SAMPLES)),
                            _ => break,
                        },
                    };
                }
                m.push(cur);
            }
            for shift in 0..=max_shift {
                let ok = (0..=horizon - shift)
                    .all(|n| n < m.len() && ge_tol(record.points[n + shift].modulus, m[n]));
                if ok {
                    return done(EscapeClass::FastEscaping { shift });
                }
            }
        }
    }

    if !violations.is_empty() {
        return done(EscapeClass::UnbViolation { count: violations.len(), indices: violations.clone() });
    }

    if rate.is_some() && record.lost_at.is_none() {
        // Tail window: the second half of the horizon.
        let tail = &record.points[horizon / 2..];
        let increasing = tail.windows(2).all(|w| w[1].modulus > w[0].modulus);
        let above = record.points[horizon].modulus > Huge::from_f64(model.r);
        if tail.len() >= 2 && increasing && above {
            return done(EscapeClass::EscapingWithinRate);
        }
    }
    done(EscapeClass::Undetermined)
}

/// A rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::pre("window must be a nonempty finite rectangle"));
        }
        Ok(Window { x0, x1, y0, y1 })
    }

    /// Center of pixel `(i, j)`, row 0 at the top.
    pub fn pixel(&self, i: usize, j: usize, w: usize, h: usize) -> Complex64 {
        Complex64::new(
            self.x0 + (i as f64 + 0.5) * (self.x1 - self.x0) / w as f64,
            self.y1 - (j as f64 + 0.5) * (self.y1 - self.y0) / h as f64,
        )
    }
}

/// Rasters above this many pixels are refused.
pub const MAX_PIXELS: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Class codes, row-major from the top row.
    pub codes: Vec<u8>,
}

impl Raster {
    /// Binary PPM with the fixed [`PALETTE`].
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.codes.len());
        for &c in &self.codes {
            out.extend_from_slice(&PALETTE[c as usize]);
        }
        out
    }

    /// Pixel count per class code.
    pub fn histogram(&self) -> [usize; 5] {
        let mut h = [0; 5];
        for &c in &self.codes {
            h[c as usize] += 1;
        }
        h
    }
}

/// Classifies every pixel center of `window` on a `w × h` grid. Orbits are
/// independent; the output does not depend on the thread count.
pub fn render_partition(
    model: &ClassBModel,
    window: &Window,
    w: usize,
    h: usize,
    rate: Option<&RateSequence>,
    horizon: usize,
    fast: Option<FastCriterion>,
) -> Result<Raster> {
    if w == 0 || h == 0 {
        return Err(Error::pre("grid must be nonempty"));
    }
    if w.checked_mul(h).is_none_or(|n| n > MAX_PIXELS) {
        return Err(Error::Capacity(format!("{w}×{h} exceeds {MAX_PIXELS} pixels")));
    }
    let codes = (0..w * h)
        .into_par_iter()
        .map(|k| classify_orbit(model, window.pixel(k % w, k / w, w, h), rate, horizon, fast).map(|v| v.class.code()))
        .collect::<Result<Vec<u8>>>()?;
    Ok(Raster { width: w, height: h, codes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_model(l: f64) -> ClassBModel {
        ClassBModel::exponential(Complex64::new(l, 0.0), l.max(1.0)).unwrap()
    }

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn normalize_identity_rate() {
        let p = RateSequence::from_fn(|n| n as f64, 80);
        let q = normalize_rate_sequence(&p, 40).unwrap();
        assert!(q.normalized);
        for n in 2..=40 {
            let inc = q.get(n).unwrap() - q.get(n - 1).unwrap();
            assert!((inc - (1.0 + 6.0 / (n * n) as f64)).abs() < 1e-12);
            assert!(q.get(n).unwrap() <= n as f64);
        }
        let p2 = RateSequence::from_fn(|n| 2f64.powi(n as i32), 80);
        assert_eq!(normalize_rate_sequence(&p2, 40).unwrap().values(), q.values());
    }

    #[test]
    fn normalize_flattens_dip() {
        let mut v: Vec<f64> = (1..=60).map(|n| 1.5 * n as f64).collect();
        v[4] = 0.5;
        let p = RateSequence::tabulated(v.clone());
        let q = normalize_rate_sequence(&p, 30).unwrap();
        let mut s = 0.0;
        for n in 1..=30 {
            s += 6.0 / (n * n) as f64;
            let inf = v[n - 1..].iter().cloned().fold(f64::INFINITY, f64::min);
            let want = (n as f64).min(inf) + s - PI * PI;
            assert!((q.get(n).unwrap() - want).abs() < 1e-12);
            assert!(q.get(n).unwrap() <= v[n - 1]);
            if n > 1 {
                assert!(q.get(n).unwrap() - q.get(n - 1).unwrap() >= 6.0 / (n * n) as f64 - 1e-12);
            }
        }
        let flat = RateSequence::from_fn(|_| 3.0, 60);
        assert!(matches!(normalize_rate_sequence(&flat, 30), Err(Error::Numeric(_))));
    }

    #[test]
    fn attracting_fixed_point_is_bounded() {
        // Oracle: Newton on q − e^q/4.
        let mut q: f64 = 0.3;
        for _ in 0..50 {
            q -= (q - q.exp() / 4.0) / (1.0 - q.exp() / 4.0);
        }
        let v = classify_orbit(&exp_model(0.25), c(0.0, 0.0), None, 100, None).unwrap();
        match v.class {
            EscapeClass::Bounded { center, .. } => assert!((center - c(q, 0.0)).norm() < 1e-6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn orbit_of_one_escapes_fast() {
        let m = exp_model(1.0);
        let v = classify_orbit(&m, c(1.0, 0.0), None, 8, Some(FastCriterion::new(1.0))).unwrap();
        assert_eq!(v.class, EscapeClass::FastEscaping { shift: 0 });
        let m2 = iterated_max_modulus(&m, 1.0, 2).unwrap();
        assert!((m2.to_f64() - 1f64.exp().exp()).abs() < 1e-12);
        let p = RateSequence::from_fn(|n| n as f64, 8);
        let v = classify_orbit(&m, c(1.0, 0.0), Some(&p), 8, None).unwrap();
        assert_eq!(v.class, EscapeClass::UnbViolation { count: 8, indices: (1..=8).collect() });
        // Fast escaping at horizon 8 stays fast at every smaller horizon.
        for n in 1..8 {
            let v = classify_orbit(&m, c(1.0, 0.0), None, n, Some(FastCriterion::new(1.0))).unwrap();
            assert!(matches!(v.class, EscapeClass::FastEscaping { .. }));
        }
    }

    #[test]
    fn max_modulus_examples() {
        assert_eq!(iterated_max_modulus(&exp_model(1.0), 1.7, 0).unwrap().to_f64(), 1.7);
        let v = iterated_max_modulus(&exp_model(0.5), 2.0, 1).unwrap().to_f64();
        assert!((v - 2f64.exp() / 2.0).abs() < 1e-12);
        // Far past f64: a tower of height about n.
        let t = iterated_max_modulus(&exp_model(1.0), 1.0, 30).unwrap();
        assert!(t.level() >= 25);
    }

    #[test]
    fn chain_rule_and_log_space_switch() {
        let m = exp_model(1.0);
        let rec = orbit(&m, c(700.0, 0.0), 4).unwrap();
        assert!(rec.lost_at.is_none());
        let direct1 = 700f64.exp();
        assert_eq!(rec.points[1].value, OrbitValue::Plain(c(direct1, 0.0)));
        match rec.points[2].value {
            OrbitValue::PositiveReal(x) => assert!((x.ln().to_f64() - direct1).abs() <= 1e-10 * direct1),
            other => panic!("{other:?}"),
        }
        let again = rec.recompute_ln_deriv(&m);
        for (p, r) in rec.points.iter().zip(&again) {
            match (p.ln_deriv_sum, r) {
                (LnAmount::Finite(a), LnAmount::Finite(b)) => assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
                (LnAmount::Large(a), LnAmount::Large(b)) => assert!(a.approx_eq(*b, 1e-9)),
                other => panic!("{other:?}"),
            }
        }
        // A complex orbit loses its argument on overflow.
        let rec = orbit(&m, c(800.0, 1.0), 3).unwrap();
        assert_eq!(rec.lost_at, Some(1));
        assert!(rec.to_csv().lines().nth(2).unwrap().contains("nan"));
    }

    #[test]
    fn cauchy_checks() {
        let m = exp_model(1.0);
        for r in [0.5, 2.0, 5.0] {
            let ch = derivative_cauchy_check(&|z| m.eval(z), &|z| m.deriv(z), r, r + 1.0, 256).unwrap();
            assert!(ch.holds && (ch.max_deriv - r.exp()).abs() < 1e-9 * r.exp());
        }
        let ch = derivative_cauchy_check(&|z| z / 2.0, &|_| c(0.5, 0.0), 1.0, 3.0, 64).unwrap();
        assert!(ch.holds);
        assert!(derivative_cauchy_check(&|z| z, &|_| c(1.0, 0.0), 2.0, 1.0, 8).is_err());
    }

    #[test]
    fn render_examples() {
        let win = Window::new(-2.0, 2.0, -2.0, 2.0).unwrap();
        let r = render_partition(&exp_model(0.25), &win, 24, 24, None, 60, None).unwrap();
        assert!(r.histogram()[0] > 24);
        let one = render_partition(&exp_model(0.25), &win, 1, 1, None, 60, None).unwrap();
        assert_eq!(one.codes.len(), 1);
        let ppm = one.to_ppm();
        assert!(ppm.starts_with(b"P6\n1 1\n255\n") && ppm.len() == 11 + 3);
        // Real axis for λ = 1: fast escaping from a small abscissa on.
        let row = Window::new(0.0, 10.0, -1e-9, 1e-9).unwrap();
        let r = render_partition(&exp_model(1.0), &row, 20, 1, None, 6, Some(FastCriterion::new(1.0))).unwrap();
        let first = r.codes.iter().position(|&k| k == 3).unwrap();
        assert!(r.codes[first..].iter().all(|&k| k == 3), "{:?}", r.codes);
        assert!(render_partition(&exp_model(1.0), &win, 1 << 13, 1 << 13, None, 1, None).is_err());
    }
}
