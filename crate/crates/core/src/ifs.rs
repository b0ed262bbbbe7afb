//! Iterated function schemes on a square, their limit sets and the cylinder
//! measures built from lower Lipschitz bounds.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauge::GaugeFn;
use crate::logspace::LogValue;

/// Default cap on the number of cylinders enumerated at once.
pub const DEFAULT_CYLINDER_CAP: u64 = 10_000_000;

/// Default cap on schedule indices searched by [`schedule_indices`].
pub const DEFAULT_SCHEDULE_CAP: usize = 1_000_000;

pub type PlaneFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Closed axis-parallel square `center + [-half, half]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub center: Complex64,
    pub half: f64,
}

impl Square {
    pub fn new(center: Complex64, half: f64) -> Self {
        Square { center, half }
    }

    /// The unit square `[0,1]²`.
    pub fn unit() -> Self {
        Square { center: Complex64::new(0.5, 0.5), half: 0.5 }
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half
    }

    pub fn diam(&self) -> f64 {
        2.0 * std::f64::consts::SQRT_2 * self.half
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        let d = z - self.center;
        d.re.abs() <= self.half + tol && d.im.abs() <= self.half + tol
    }

    /// `n` points per side along the boundary, counterclockwise from the
    /// lower-left corner.
    pub fn boundary(&self, n: usize) -> Vec<Complex64> {
        let h = self.half;
        let corners = [
            Complex64::new(-h, -h),
            Complex64::new(h, -h),
            Complex64::new(h, h),
            Complex64::new(-h, h),
        ];
        let mut out = Vec::with_capacity(4 * n);
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            for i in 0..n {
                out.push(self.center + a + (b - a) * (i as f64 / n as f64));
            }
        }
        out
    }

    /// `n × n` grid of cell centers.
    pub fn grid(&self, n: usize) -> Vec<Complex64> {
        let step = self.side() / n as f64;
        let corner = self.center - Complex64::new(self.half, self.half);
        (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                corner + Complex64::new((i as f64 + 0.5) * step, (j as f64 + 0.5) * step)
            })
            .collect()
    }
}

/// A contraction of the scheme's square with certified Lipschitz bounds
/// `b_lower·|z−w| ≤ |T(z)−T(w)| ≤ c_upper·|z−w|`.
#[derive(Clone)]
pub struct ContractionMap {
    apply: PlaneFn,
    deriv: Option<PlaneFn>,
    pub b_lower: f64,
    pub c_upper: f64,
}

impl fmt::Debug for ContractionMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContractionMap")
            .field("b_lower", &self.b_lower)
            .field("c_upper", &self.c_upper)
            .finish()
    }
}

impl ContractionMap {
    /// A map with caller-certified bounds.
    pub fn new(apply: PlaneFn, deriv: Option<PlaneFn>, b_lower: f64, c_upper: f64) -> Result<Self> {
        if !(b_lower > 0.0 && b_lower <= c_upper && c_upper < 1.0) {
            return Err(Error::pre(format!(
                "contraction bounds must satisfy 0 < b ≤ c < 1, got b={b_lower}, c={c_upper}"
            )));
        }
        Ok(ContractionMap { apply, deriv, b_lower, c_upper })
    }

    /// `z ↦ a·z + b`, whose bounds are both `|a|`.
    pub fn affine(a: Complex64, b: Complex64) -> Result<Self> {
        let r = a.norm();
        Self::new(Arc::new(move |z| a * z + b), Some(Arc::new(move |_| a)), r, r)
    }

    /// `z ↦ ratio·z + offset`.
    pub fn similarity(ratio: f64, offset: Complex64) -> Result<Self> {
        Self::affine(Complex64::new(ratio, 0.0), offset)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.apply)(z)
    }

    pub fn deriv(&self, z: Complex64) -> Option<Complex64> {
        self.deriv.as_ref().map(|d| d(z))
    }

    /// Sample check that the image of `dom` stays in `dom`.
    pub fn maps_into(&self, dom: &Square, n: usize) -> bool {
        let tol = 1e-12 * dom.half.max(1.0);
        dom.boundary(n)
            .into_iter()
            .chain(std::iter::once(dom.center))
            .all(|z| dom.contains(self.apply(z), tol))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &ContractionMap) -> ContractionMap {
        let (f, g) = (self.apply.clone(), inner.apply.clone());
        let deriv = match (&self.deriv, &inner.deriv) {
            (Some(df), Some(dg)) => {
                let (df, dg, g2) = (df.clone(), dg.clone(), inner.apply.clone());
                Some(Arc::new(move |z| df(g2(z)) * dg(z)) as PlaneFn)
            }
            _ => None,
        };
        ContractionMap {
            apply: Arc::new(move |z| f(g(z))),
            deriv,
            b_lower: self.b_lower * inner.b_lower,
            c_upper: self.c_upper * inner.c_upper,
        }
    }
}

/// One iterated function scheme on a fixed square.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub maps: Vec<ContractionMap>,
    pub domain: Square,
    /// Minimal distance between distinct images, 0 when not certified.
    pub separation: f64,
    /// Solution of `Σ b^s = 1` over the lower bounds.
    pub s: f64,
}

impl Scheme {
    /// Validates the maps, solves for `s` and estimates the separation.
    pub fn new(maps: Vec<ContractionMap>, domain: Square) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::pre("scheme needs at least one map"));
        }
        for (i, m) in maps.iter().enumerate() {
            if !m.maps_into(&domain, 32) {
                return Err(Error::pre(format!("map {i} does not send the square into itself")));
            }
        }
        let b: Vec<f64> = maps.iter().map(|m| m.b_lower).collect();
        let s = similarity_dimension(&b)?;
        let separation = estimate_separation(&maps, &domain, 64);
        Ok(Scheme { maps, domain, separation, s })
    }

    /// Scheme of similarities `z ↦ r·z + offset`.
    pub fn similarities(parts: &[(f64, Complex64)], domain: Square) -> Result<Self> {
        let maps = parts
            .iter()
            .map(|&(r, o)| ContractionMap::similarity(r, o))
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps, domain)
    }

    /// Middle-thirds scheme `z/3`, `z/3 + 2/3` on the unit square.
    pub fn middle_thirds() -> Self {
        let third = 1.0 / 3.0;
        Self::similarities(&[(third, Complex64::new(0.0, 0.0)), (third, Complex64::new(2.0 * third, 0.0))], Square::unit())
            .expect("middle-thirds scheme is valid")
    }

    /// Four maps of ratio 1/3 onto the corner subsquares of the unit square.
    pub fn cantor_dust() -> Self {
        let t = 1.0 / 3.0;
        let offs = [(0.0, 0.0), (2.0 * t, 0.0), (0.0, 2.0 * t), (2.0 * t, 2.0 * t)];
        let parts: Vec<_> = offs.iter().map(|&(x, y)| (t, Complex64::new(x, y))).collect();
        Self::similarities(&parts, Square::unit()).expect("Cantor dust is valid")
    }

    pub fn arity(&self) -> usize {
        self.maps.len()
    }

    pub fn sum_b(&self) -> f64 {
        self.maps.iter().map(|m| m.b_lower).sum()
    }

    pub fn stats(&self) -> StageStats {
        let ln_b = self.maps.iter().map(|m| m.b_lower.ln());
        StageStats {
            ln_alpha: ln_b.clone().fold(f64::INFINITY, f64::min),
            ln_beta: ln_b.fold(f64::NEG_INFINITY, f64::max),
            gamma: self.s,
            delta: self.s,
            ln_d: if self.separation > 0.0 { self.separation.ln() } else { f64::NEG_INFINITY },
        }
    }
}

/// Lower estimate of the distance between distinct images from boundary
/// samples, less the Lipschitz slack between samples; 0 on overlap.
fn estimate_separation(maps: &[ContractionMap], dom: &Square, n: usize) -> f64 {
    if maps.len() < 2 {
        return 0.0;
    }
    let spacing = dom.side() / n as f64;
    let outlines: Vec<Vec<Complex64>> =
        maps.iter().map(|m| dom.boundary(n).into_iter().map(|z| m.apply(z)).collect()).collect();
    let mut best = f64::INFINITY;
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            let inside = winding(&outlines[j], maps[i].apply(dom.center)) != 0
                || winding(&outlines[i], maps[j].apply(dom.center)) != 0;
            if inside {
                return 0.0;
            }
            let mut dmin = f64::INFINITY;
            for p in &outlines[i] {
                for q in &outlines[j] {
                    dmin = dmin.min((p - q).norm());
                }
            }
            let slack = 0.5 * spacing * (maps[i].c_upper + maps[j].c_upper);
            best = best.min(dmin - slack);
        }
    }
    best.max(0.0)
}

/// Winding number of a closed polygon around `z`.
fn winding(poly: &[Complex64], z: Complex64) -> i32 {
    let mut total = 0.0;
    for k in 0..poly.len() {
        let a = poly[k] - z;
        let b = poly[(k + 1) % poly.len()] - z;
        total += (b / a).arg();
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Running worst-case statistics of a stage prefix, on the log scale:
/// `α = min b`, `β = max b`, `γ = min s`, `δ = max s`, `d = min separation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageStats {
    pub ln_alpha: f64,
    pub ln_beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub ln_d: f64,
}

impl StageStats {
    /// Worst case of two prefixes.
    pub fn merge(&self, other: &StageStats) -> StageStats {
        StageStats {
            ln_alpha: self.ln_alpha.min(other.ln_alpha),
            ln_beta: self.ln_beta.max(other.ln_beta),
            gamma: self.gamma.min(other.gamma),
            delta: self.delta.max(other.delta),
            ln_d: self.ln_d.min(other.ln_d),
        }
    }

    /// Running prefix worst cases of a list.
    pub fn running(stats: &[StageStats]) -> Vec<StageStats> {
        let mut out: Vec<StageStats> = Vec::with_capacity(stats.len());
        for s in stats {
            let next = match out.last() {
                Some(prev) => prev.merge(s),
                None => *s,
            };
            out.push(next);
        }
        out
    }
}

/// A finite sequence of schemes `T_1, …, T_k` acting on a common square.
#[derive(Clone, Debug)]
pub struct SchemeSequence {
    pub stages: Vec<Arc<Scheme>>,
    pub schedule: Vec<usize>,
    pub stage_stats: Vec<StageStats>,
}

impl SchemeSequence {
    pub fn new(stages: Vec<Arc<Scheme>>) -> Result<Self> {
        if let Some(first) = stages.first() {
            if stages.iter().any(|s| s.domain != first.domain) {
                return Err(Error::pre("all stages must act on the same square"));
            }
        }
        let stats: Vec<StageStats> = stages.iter().map(|s| s.stats()).collect();
        Ok(SchemeSequence { stages, schedule: Vec::new(), stage_stats: StageStats::running(&stats) })
    }

    /// The same scheme repeated `depth` times.
    pub fn repeat(scheme: Scheme, depth: usize) -> Result<Self> {
        let s = Arc::new(scheme);
        Self::new(vec![s; depth])
    }

    /// `T_k = R_i` for `n_{i-1} < k ≤ n_i`, then the last pool entry, up to `depth`.
    pub fn from_schedule(pool: &[Arc<Scheme>], schedule: &[usize], depth: usize) -> Result<Self> {
        check_schedule(schedule)?;
        if pool.is_empty() {
            return Err(Error::pre("empty scheme pool"));
        }
        let stages = (1..=depth)
            .map(|k| {
                let i = schedule.partition_point(|&n| n < k);
                pool[i.min(pool.len() - 1)].clone()
            })
            .collect();
        let mut seq = Self::new(stages)?;
        seq.schedule = schedule.to_vec();
        Ok(seq)
    }

    /// `T_k = P_i` for `n_{i-1} < k < n_i` and `T_{n_i} = Q_i`, up to `depth`.
    pub fn alternating(p: &[Arc<Scheme>], q: &[Arc<Scheme>], schedule: &[usize], depth: usize) -> Result<Self> {
        check_schedule(schedule)?;
        if p.is_empty() || q.is_empty() {
            return Err(Error::pre("empty scheme pool"));
        }
        let stages = (1..=depth)
            .map(|k| {
                let i = schedule.partition_point(|&n| n < k);
                if schedule.get(i) == Some(&k) {
                    q[i.min(q.len() - 1)].clone()
                } else {
                    p[i.min(p.len() - 1)].clone()
                }
            })
            .collect();
        let mut seq = Self::new(stages)?;
        seq.schedule = schedule.to_vec();
        Ok(seq)
    }

    pub fn depth(&self) -> usize {
        self.stages.len()
    }

    pub fn domain(&self) -> Square {
        self.stages.first().map(|s| s.domain).unwrap_or_else(Square::unit)
    }

    /// Number of cylinders at depth `k`, or `None` past `u64`.
    pub fn cylinder_count(&self, k: usize) -> Option<u64> {
        self.stages[..k].iter().try_fold(1u64, |acc, s| acc.checked_mul(s.arity() as u64))
    }

    /// Applies `T_{1,j_1} ∘ … ∘ T_{k,j_k}` to `z`.
    pub fn apply_code(&self, code: &CylinderCode, z: Complex64) -> Complex64 {
        code.0.iter().enumerate().rev().fold(z, |w, (l, &j)| self.stages[l].maps[j].apply(w))
    }

    /// Upper bound on the diameter of the cylinder of `code`.
    pub fn cylinder_diam(&self, code: &CylinderCode) -> f64 {
        let c: f64 = code.0.iter().enumerate().map(|(l, &j)| self.stages[l].maps[j].c_upper).product();
        c * self.domain().diam()
    }

    fn validate(&self, code: &CylinderCode) -> Result<()> {
        if code.0.len() > self.depth() {
            return Err(Error::pre("code longer than the sequence"));
        }
        for (l, &j) in code.0.iter().enumerate() {
            if j >= self.stages[l].arity() {
                return Err(Error::pre(format!("index {j} out of range at stage {}", l + 1)));
            }
        }
        Ok(())
    }
}

fn check_schedule(schedule: &[usize]) -> Result<()> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) || schedule.first() == Some(&0) {
        return Err(Error::pre("schedule must be strictly increasing positive integers"));
    }
    Ok(())
}

/// Word `(j_1, …, j_k)` with one (0-based) map index per stage.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CylinderCode(pub Vec<usize>);

impl fmt::Display for CylinderCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|j| j.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Solves `Σ bᵢˢ = 1` by bisection on `[0, 64]`.
pub fn similarity_dimension(b: &[f64]) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::pre("similarity_dimension needs at least one ratio"));
    }
    if let Some(&bad) = b.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::pre(format!("ratio {bad} outside (0,1)")));
    }
    let ln_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    similarity_dimension_ln(&ln_b.iter().map(|&l| (l, 0.0)).collect::<Vec<_>>())
}

/// Solves `Σ nᵢ·bᵢˢ = 1` from pairs `(ln bᵢ, ln nᵢ)`, so that huge families
/// of equal ratios can be handled without listing them.
pub fn similarity_dimension_ln(groups: &[(f64, f64)]) -> Result<f64> {
    if groups.is_empty() || groups.iter().any(|&(lb, _)| !(lb < 0.0)) {
        return Err(Error::pre("ratios must lie in (0,1)"));
    }
    let ln_sum = |s: f64| LogValue::sum(groups.iter().map(|&(lb, ln_n)| LogValue::exp_of(s * lb + ln_n))).ln();
    let (mut lo, mut hi) = (0.0f64, 64.0f64);
    if ln_sum(lo) < 0.0 {
        return Ok(0.0);
    }
    if ln_sum(hi) > 0.0 {
        return Err(Error::num("similarity exponent exceeds 64"));
    }
    while hi - lo > 1e-15 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_sum(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One representative point per depth-`k` cylinder, in lexicographic order
/// of codes. The representative is the image of the square's center.
pub fn limit_set_points(seq: &SchemeSequence, depth: usize, cap: u64) -> Result<Vec<(Complex64, CylinderCode)>> {
    if depth > seq.depth() {
        return Err(Error::pre(format!("depth {depth} exceeds sequence length {}", seq.depth())));
    }
    let count = seq
        .cylinder_count(depth)
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Capacity(format!("depth {depth} exceeds the cylinder cap {cap}")))?;
    let arities: Vec<usize> = seq.stages[..depth].iter().map(|s| s.arity()).collect();
    let center = seq.domain().center;
    Ok((0..count)
        .into_par_iter()
        .map(|idx| {
            let code = decode(idx, &arities);
            (seq.apply_code(&code, center), code)
        })
        .collect())
}

/// Mixed-radix decoding with the first stage most significant.
fn decode(mut idx: u64, arities: &[usize]) -> CylinderCode {
    let mut word = vec![0usize; arities.len()];
    for (l, &a) in arities.iter().enumerate().rev() {
        word[l] = (idx % a as u64) as usize;
        idx /= a as u64;
    }
    CylinderCode(word)
}

/// `μ` of the cylinder of `code`: `Π b_{ℓ,jℓ}^{s_ℓ}`.
pub fn cylinder_measure(seq: &SchemeSequence, code: &CylinderCode) -> Result<f64> {
    seq.validate(code)?;
    Ok(cylinder_ln_measure(seq, &code.0).exp())
}

fn cylinder_ln_measure(seq: &SchemeSequence, word: &[usize]) -> f64 {
    word.iter()
        .enumerate()
        .map(|(l, &j)| {
            let st = &seq.stages[l];
            st.s * st.maps[j].b_lower.ln()
        })
        .sum()
}

/// Least `nᵢ > nᵢ₋₁` satisfying the schedule inequality, for each consecutive
/// pair of pool prefixes. `stats[i]` are the statistics of pool entry `i`;
/// prefix worst cases are taken internally. Returns one index per pool entry
/// except the last, which repeats indefinitely.
pub fn schedule_indices(stats: &[StageStats], eps: &dyn Fn(f64) -> f64, cap: usize) -> Result<Vec<usize>> {
    for (i, s) in stats.iter().enumerate() {
        if !(s.gamma > 1.0) {
            return Err(Error::pre(format!("pool entry {} has s = {} ≤ 1", i + 1, s.gamma)));
        }
        if !s.ln_d.is_finite() {
            return Err(Error::pre(format!("pool entry {} has no certified separation", i + 1)));
        }
        if !(s.ln_beta < 0.0) {
            return Err(Error::pre(format!("pool entry {} is not contracting", i + 1)));
        }
    }
    let run = StageStats::running(stats);
    let mut out = Vec::with_capacity(stats.len().saturating_sub(1));
    let mut prev = 0usize;
    for i in 0..stats.len().saturating_sub(1) {
        let (cur, next) = (&run[i], &run[i + 1]);
        let n = (prev + 1..=cap)
            .find(|&n| schedule_holds(cur, next, n, eps))
            .ok_or_else(|| Error::num(format!("schedule inequality unsatisfiable up to n = {cap} at entry {}", i + 1)))?;
        out.push(n);
        prev = n;
    }
    Ok(out)
}

/// The schedule inequality at index `n` for the prefixes `cur` (through
/// entry i) and `next` (through entry i+1).
pub fn schedule_holds(cur: &StageStats, next: &StageStats, n: usize, eps: &dyn Fn(f64) -> f64) -> bool {
    let ln_r = cur.ln_d.min(0.0) + n as f64 * cur.ln_beta;
    let lhs = next.gamma - next.delta * (next.ln_alpha + next.ln_d.min(0.0)) / ln_r;
    lhs >= 1.0 + 2.0 * eps(ln_r.exp())
}

/// Least `p ≥ 0` with `m_Q · min b̄ · (Σ b̃)^p > 1`.
pub fn interleave_power(m_q: usize, min_bbar: LogValue, sum_btilde: LogValue) -> Result<u64> {
    if m_q == 0 {
        return Err(Error::pre("Q must be nonempty"));
    }
    interleave_power_ln((m_q as f64).ln(), min_bbar, sum_btilde)
}

/// [`interleave_power`] with the map count given as `ln m_Q`.
pub fn interleave_power_ln(ln_m_q: f64, min_bbar: LogValue, sum_btilde: LogValue) -> Result<u64> {
    if !(sum_btilde.ln() > 0.0) {
        return Err(Error::pre("sum of P lower bounds must exceed 1"));
    }
    if !(ln_m_q >= 0.0) {
        return Err(Error::pre("Q must be nonempty"));
    }
    let base = ln_m_q + min_bbar.ln();
    let step = sum_btilde.ln();
    let holds = |p: u64| base + p as f64 * step > 0.0;
    let mut p = if base > 0.0 { 0 } else { (-base / step).floor().max(0.0) as u64 };
    while p > 0 && holds(p - 1) {
        p -= 1;
    }
    while !holds(p) {
        p += 1;
    }
    Ok(p)
}

/// `R = P^p ∘ Q` with `p` from [`interleave_power`]: all maps
/// `P_{q_p} ∘ … ∘ P_{q_1} ∘ Q_j`.
pub fn interleave_schemes(p: &Scheme, q: &Scheme, cap: u64) -> Result<(u64, Scheme)> {
    let sum = LogValue::sum(p.maps.iter().map(|m| LogValue::exp_of(m.b_lower.ln())));
    let min_q = q.maps.iter().map(|m| m.b_lower).fold(f64::INFINITY, f64::min);
    let power = interleave_power(q.arity(), LogValue::exp_of(min_q.ln()), sum)?;
    let total = (p.arity() as u64)
        .checked_pow(power as u32)
        .and_then(|c| c.checked_mul(q.arity() as u64))
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::Capacity(format!("interleaved scheme exceeds {cap} maps")))?;
    let mut maps: Vec<ContractionMap> = q.maps.clone();
    for _ in 0..power {
        maps = p.maps.iter().flat_map(|pm| maps.iter().map(move |inner| pm.compose(inner))).collect();
    }
    debug_assert_eq!(maps.len() as u64, total);
    Ok((power, Scheme::new(maps, p.domain)?))
}

/// One row of [`mass_distribution_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct MassRow {
    pub center: Complex64,
    pub radius: f64,
    pub depth: usize,
    pub mass: f64,
    pub ratio: f64,
}

/// Tabulates `μ(D(x,r))/h(r)`, where `μ(D(x,r))` sums the masses of the
/// depth-`k` cylinders meeting the disk, `k` being the first depth whose
/// cylinder diameters are below `r/4`.
pub fn mass_distribution_check(seq: &SchemeSequence, gauge: &GaugeFn, centers: &[Complex64], radii: &[f64]) -> Result<Vec<MassRow>> {
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::pre("radii must be decreasing"));
    }
    let dom = seq.domain();
    let mut rows = Vec::with_capacity(centers.len() * radii.len());
    for &r in radii {
        let mut diam = dom.diam();
        let mut k = 0;
        while diam >= r / 4.0 {
            if k == seq.depth() {
                return Err(Error::pre(format!("sequence too short to resolve radius {r}")));
            }
            diam *= seq.stages[k].maps.iter().map(|m| m.c_upper).fold(0.0, f64::max);
            k += 1;
        }
        let masses: Vec<f64> = centers.par_iter().map(|&x| disk_mass(seq, x, r, k)).collect();
        for (&x, mass) in centers.iter().zip(masses) {
            rows.push(MassRow { center: x, radius: r, depth: k, mass, ratio: mass / gauge.eval(r) });
        }
    }
    Ok(rows)
}

fn disk_mass(seq: &SchemeSequence, x: Complex64, r: f64, k: usize) -> f64 {
    let dom = seq.domain();
    let mut total = 0.0;
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(word) = stack.pop() {
        let code = CylinderCode(word);
        let radius = 0.5 * seq.cylinder_diam(&code);
        let dist = (seq.apply_code(&code, dom.center) - x).norm();
        if dist > r + radius {
            continue;
        }
        if code.0.len() == k || dist + radius <= r {
            total += cylinder_ln_measure(seq, &code.0).exp();
            continue;
        }
        let l = code.0.len();
        for j in (0..seq.stages[l].arity()).rev() {
            let mut w = code.0.clone();
            w.push(j);
            stack.push(w);
        }
    }
    total
}

/// Smallest power `p ≤ p_max` whose compositions satisfy
/// `Σ_words b_word^s > 1`, where `b_word = |T_word'(z₀)|/K` for a distortion
/// constant `K ≥ 1` valid for all compositions. Returns `(p, sum)`.
pub fn proposition_power(scheme: &Scheme, s: f64, distortion: f64, p_max: u32, cap: u64) -> Result<Option<(u32, f64)>> {
    if distortion < 1.0 {
        return Err(Error::pre("distortion constant must be at least 1"));
    }
    let z0 = scheme.domain.center;
    let mut words: Vec<ContractionMap> = vec![];
    for p in 1..=p_max {
        words = if p == 1 {
            scheme.maps.clone()
        } else {
            if (words.len() as u64).saturating_mul(scheme.arity() as u64) > cap {
                return Err(Error::Capacity(format!("power {p} exceeds {cap} compositions")));
            }
            scheme.maps.iter().flat_map(|m| words.iter().map(move |w| m.compose(w))).collect()
        };
        let mut sum = 0.0;
        for w in &words {
            let d = w
                .deriv(z0)
                .ok_or_else(|| Error::pre("proposition check needs derivatives"))?
                .norm();
            sum += (d / distortion).powf(s);
        }
        if sum > 1.0 {
            return Ok(Some((p, sum)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_examples() {
        assert!((similarity_dimension(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-13);
        let s = similarity_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-13);
        let s = similarity_dimension(&[0.9, 0.9]).unwrap();
        assert!((s - 2f64.ln() / (1.0 / 0.9f64).ln()).abs() < 1e-12);
        assert!(similarity_dimension(&[]).is_err());
        assert!(similarity_dimension(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn depth_zero_is_center() {
        let seq = SchemeSequence::repeat(Scheme::middle_thirds(), 3).unwrap();
        let pts = limit_set_points(&seq, 0, 10).unwrap();
        assert_eq!(pts, vec![(Complex64::new(0.5, 0.5), CylinderCode(vec![]))]);
    }

    #[test]
    fn cylinder_cap_is_enforced() {
        let seq = SchemeSequence::repeat(Scheme::cantor_dust(), 12).unwrap();
        assert!(matches!(limit_set_points(&seq, 12, 1000), Err(Error::Capacity(_))));
    }

    #[test]
    fn interleave_examples() {
        let lv = |x: f64| LogValue::exp_of(x.ln());
        assert_eq!(interleave_power(1, lv(0.1), lv(2.0)).unwrap(), 4);
        assert_eq!(interleave_power(1, lv(0.5), lv(1.1)).unwrap(), 8);
        assert_eq!(interleave_power(3, lv(0.5), lv(1.1)).unwrap(), 0);
        assert!(interleave_power(1, lv(0.5), lv(1.0)).is_err());
    }

    #[test]
    fn separation_detects_overlap() {
        let ok = Scheme::middle_thirds();
        assert!((ok.separation - 1.0 / 3.0).abs() < 0.02);
        let overlap = Scheme::similarities(&[(0.6, Complex64::new(0.0, 0.0)), (0.6, Complex64::new(0.4, 0.0))], Square::unit()).unwrap();
        assert_eq!(overlap.separation, 0.0);
    }
}
