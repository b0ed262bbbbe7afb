//! Covers of sampled sets: upper estimates of the `h`-premeasure, box
//! counting, Besicovitch selection, the zero-measure criterion and the cover
//! ledger for the upper bound on `Unb(f, p)`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::{huge17, sig17};
use crate::gauge::{doubling_constant, GaugeFn};
use crate::strip::{tau_tiny, StripProfile, TinyFactor, TOWER_TOL};
use crate::tower::{Huge, Tiny};

/// One set of a cover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverElement {
    pub center: Complex64,
    pub diam: f64,
}

/// A δ-cover: every element has diameter below `delta`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverSet {
    pub elements: Vec<CoverElement>,
    pub delta: f64,
}

impl CoverSet {
    pub fn new(delta: f64) -> Self {
        CoverSet { elements: Vec::new(), delta }
    }

    pub fn push(&mut self, e: CoverElement) -> Result<()> {
        if !(e.diam < self.delta) {
            return Err(Error::pre(format!("element diameter {} not below δ = {}", e.diam, self.delta)));
        }
        self.elements.push(e);
        Ok(())
    }

    /// `Σ h(diam A_j)`.
    pub fn gauge_sum(&self, h: &GaugeFn) -> f64 {
        self.elements.iter().map(|e| h.eval(e.diam)).sum()
    }
}

/// How [`premeasure_upper`] builds covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverStrategy {
    /// Occupied cells of a grid anchored at the origin; intervals when the
    /// sample lies on a horizontal line.
    Grid,
    /// Sweep in `(x, y)` order, growing a cluster while its bounding box
    /// diagonal stays below the cell size.
    GreedyMerge,
}

/// Ratio between consecutive cell sizes tried.
const LADDER_RATIO: f64 = 1.189_207_115_002_721; // 2^{1/4}

fn is_horizontal(points: &[Complex64]) -> bool {
    points.iter().all(|z| z.im == points[0].im)
}

fn extent(points: &[Complex64]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in points {
        x0 = x0.min(z.re);
        x1 = x1.max(z.re);
        y0 = y0.min(z.im);
        y1 = y1.max(z.im);
    }
    (x1 - x0).hypot(y1 - y0)
}

fn grid_cover(points: &[Complex64], diam: f64) -> Vec<CoverElement> {
    let flat = is_horizontal(points);
    let side = if flat { diam } else { diam / std::f64::consts::SQRT_2 };
    let cells: BTreeSet<(i64, i64)> = points
        .iter()
        .map(|z| ((z.re / side).floor() as i64, if flat { 0 } else { (z.im / side).floor() as i64 }))
        .collect();
    let y = if flat { points[0].im } else { 0.0 };
    cells
        .into_iter()
        .map(|(i, j)| {
            let c = Complex64::new((i as f64 + 0.5) * side, if flat { y } else { (j as f64 + 0.5) * side });
            CoverElement { center: c, diam }
        })
        .collect()
}

/// Clusters carry the sample mesh on top of their bounding-box diagonal, so a
/// cluster stands for the piece of the set around its points.
fn greedy_cover(points: &[Complex64], diam: f64, mesh: f64) -> Vec<CoverElement> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out = Vec::new();
    let (mut lo, mut hi) = (pts[0], pts[0]);
    let flush = |lo: Complex64, hi: Complex64, out: &mut Vec<CoverElement>| {
        out.push(CoverElement { center: 0.5 * (lo + hi), diam: ((hi - lo).norm() + mesh).min(diam) });
    };
    for &z in &pts[1..] {
        let nlo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        let nhi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        if (nhi - nlo).norm() + mesh < diam {
            lo = nlo;
            hi = nhi;
        } else {
            flush(lo, hi, &mut out);
            lo = z;
            hi = z;
        }
    }
    flush(lo, hi, &mut out);
    out
}

/// Largest nearest-neighbour distance of the sample: below this scale the
/// sample no longer resolves the set it stands for.
pub fn sample_mesh(points: &[Complex64]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 2 {
        return 0.0;
    }
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in (0..i).rev() {
                if pts[i].re - pts[j].re >= best {
                    break;
                }
                best = best.min((pts[i] - pts[j]).norm());
            }
            for j in i + 1..pts.len() {
                if pts[j].re - pts[i].re >= best {
                    break;
                }
                best = best.min((pts[i] - pts[j]).norm());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

fn cover_at(points: &[Complex64], h: &GaugeFn, c: f64, mesh: f64, strategy: CoverStrategy) -> (f64, Vec<CoverElement>) {
    let els = match strategy {
        CoverStrategy::Grid => grid_cover(points, c),
        CoverStrategy::GreedyMerge => greedy_cover(points, c, mesh.min(c)),
    };
    (els.iter().map(|e| h.eval(e.diam)).sum(), els)
}

/// Upper estimate of `H_h^δ` of a finite sample: the least `Σ h(diam)` over
/// covers built at cell sizes from a fixed ladder in `[mesh, δ)`, where
/// `mesh` is [`sample_mesh`]. The ladder does not depend on `δ`, so the
/// estimate is nonincreasing in `δ` once `δ` exceeds the mesh. Below the mesh
/// a single cover with cells just under `δ` is used.
pub fn premeasure_upper(points: &[Complex64], h: &GaugeFn, delta: f64, strategy: CoverStrategy) -> Result<(f64, CoverSet)> {
    if !(delta > 0.0) {
        return Err(Error::pre("δ must be positive"));
    }
    if points.is_empty() {
        return Ok((0.0, CoverSet::new(delta)));
    }
    let ext = extent(points);
    let mesh = sample_mesh(points);
    let sizes: Vec<f64> = if ext > 0.0 && mesh > 0.0 {
        // c_k = ext·2^{k/4}
        let kmin = ((mesh / ext).ln() / LADDER_RATIO.ln()).ceil() as i64;
        let kmax = ((delta / ext).ln() / LADDER_RATIO.ln()).ceil() as i64 + 1;
        (kmin..=kmax).map(|k| ext * LADDER_RATIO.powi(k as i32)).filter(|&c| c >= mesh && c < delta).collect()
    } else {
        Vec::new()
    };
    let (sum, _, els) = if sizes.is_empty() {
        let c = delta * (1.0 - 1e-9);
        let (v, e) = cover_at(points, h, c, mesh, strategy);
        (v, c, e)
    } else {
        sizes
            .par_iter()
            .map(|&c| {
                let (v, e) = cover_at(points, h, c, mesh, strategy);
                (v, c, e)
            })
            .reduce_with(|a, b| match a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)) {
                Ordering::Greater => b,
                _ => a,
            })
            .expect("nonempty ladder")
    };
    Ok((sum, CoverSet { elements: els, delta }))
}

/// `H_h^δ(φ(A)) ≤ C·H_h^δ(A)` constant for a Lipschitz map with constant `l`:
/// `K^{⌈log₂ l⌉}` with `K` the doubling constant of `h` on `(0, t_max]`.
pub fn lipschitz_image_constant(h: &GaugeFn, l: f64, t_max: f64) -> Result<f64> {
    let k = doubling_constant(h, t_max)?;
    Ok(k.powi(l.log2().ceil().max(0.0) as i32))
}

/// Least-squares slope of `ln N(ε)` against `ln(1/ε)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxDimension {
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub counts: Vec<(f64, usize)>,
}

/// `count` dyadic scales `top, top/2, …`.
pub fn dyadic_scales(top: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| top * 0.5f64.powi(k as i32)).collect()
}

pub fn box_dimension(points: &[Complex64], scales: &[f64]) -> Result<BoxDimension> {
    if points.is_empty() {
        return Err(Error::pre("box counting needs points"));
    }
    if scales.len() < 4 {
        return Err(Error::pre("box counting needs at least four scales"));
    }
    let counts: Vec<(f64, usize)> = scales
        .par_iter()
        .map(|&e| {
            let cells: BTreeSet<(i64, i64)> = points.iter().map(|z| ((z.re / e).floor() as i64, (z.im / e).floor() as i64)).collect();
            (e, cells.len())
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|c| -c.0.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|c| (c.1 as f64).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::pre("scales must be distinct"));
    }
    let slope = sxy / sxx;
    let res = xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n;
    Ok(BoxDimension { slope, residual: res.sqrt(), counts })
}

// ---------------------------------------------------------------------------
// Besicovitch covering

/// Greedy largest-radius-first selection: a point is selected unless an
/// already selected open ball `B(y, r(y))` contains it. Returns indices.
pub fn besicovitch_cover(points: &[Complex64], radii: &[f64]) -> Result<Vec<usize>> {
    if points.len() != radii.len() {
        return Err(Error::pre("one radius per point"));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::pre("radii must be positive"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if !chosen.iter().any(|&j| (points[i] - points[j]).norm() < radii[j]) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Probe grids above this size are refused.
pub const MAX_PROBES: usize = 4_000_000;

/// Largest number of selected balls containing a probe point, over a grid
/// of spacing `min r / 4` covering all selected balls.
pub fn ball_multiplicity(points: &[Complex64], radii: &[f64], selected: &[usize]) -> Result<usize> {
    if selected.is_empty() {
        return Ok(0);
    }
    let rmin = selected.iter().map(|&i| radii[i]).fold(f64::INFINITY, f64::min);
    let step = rmin / 4.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &i in selected {
        let (c, r) = (points[i], radii[i]);
        x0 = x0.min(c.re - r);
        x1 = x1.max(c.re + r);
        y0 = y0.min(c.im - r);
        y1 = y1.max(c.im + r);
    }
    let nx = ((x1 - x0) / step).ceil() as usize + 1;
    let ny = ((y1 - y0) / step).ceil() as usize + 1;
    if nx.saturating_mul(ny) > MAX_PROBES {
        return Err(Error::Capacity(format!("probe grid {nx}×{ny} exceeds {MAX_PROBES}")));
    }
    // Bucket balls by grid cell of size 2·rmax for the probe lookups.
    let rmax = selected.iter().map(|&i| radii[i]).fold(0.0, f64::max);
    let cell = 2.0 * rmax;
    let mut buckets: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for &i in selected {
        let c = points[i];
        buckets.entry(((c.re / cell).floor() as i64, (c.im / cell).floor() as i64)).or_default().push(i);
    }
    let best = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::new(x0 + (k % nx) as f64 * step, y0 + (k / nx) as f64 * step);
            let (cx, cy) = ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
            let mut m = 0;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(b) = buckets.get(&(cx + dx, cy + dy)) {
                        m += b.iter().filter(|&&i| (z - points[i]).norm() < radii[i]).count();
                    }
                }
            }
            m
        })
        .max()
        .unwrap_or(0);
    Ok(best)
}

// ---------------------------------------------------------------------------
// Zero-measure criterion

/// Rounding allowance on `Σh / (ε·δⁿ) ≤ 1`.
pub const RATIO_TOL: f64 = 1e-12;

/// Output of a locator: `δ(x)` and balls `(center, diameter)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Located {
    pub delta: f64,
    pub balls: Vec<(Complex64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroMeasureVerdict {
    pub certified: bool,
    /// Largest `Σ h(diam B_j) / (ε·δ(x)ⁿ)` seen.
    pub worst_ratio: f64,
    /// First failing `(x, ε, reason)`.
    pub witness: Option<(Complex64, f64, String)>,
}

/// Checks the hypothesis of the zero-measure criterion on a sample: for each
/// `x` and `ε`, `0 < δ(x) ≤ ε`, the balls cover `K ∩ B(x, δ(x))`, and
/// `Σ h(diam B_j) ≤ ε·δ(x)^dim`.
pub fn zero_measure_certificate(
    k: &[Complex64],
    h: &GaugeFn,
    dim: u32,
    eps_schedule: &[f64],
    locator: &(dyn Fn(Complex64, f64) -> Option<Located> + Sync),
) -> ZeroMeasureVerdict {
    let mut verdict = ZeroMeasureVerdict { certified: true, worst_ratio: 0.0, witness: None };
    for &x in k {
        for &eps in eps_schedule {
            let fail = |reason: String| Some((x, eps, reason));
            let res = match locator(x, eps) {
                None => fail("locator failed".into()),
                Some(loc) if !(loc.delta > 0.0 && loc.delta <= eps) => fail(format!("δ(x) = {} not in (0, ε]", loc.delta)),
                Some(loc) => {
                    let sum: f64 = loc.balls.iter().map(|b| h.eval(b.1)).sum();
                    let ratio = sum / (eps * loc.delta.powi(dim as i32));
                    verdict.worst_ratio = verdict.worst_ratio.max(ratio);
                    let uncovered = k
                        .iter()
                        .filter(|&&p| (p - x).norm() < loc.delta)
                        .find(|&&p| !loc.balls.iter().any(|b| (p - b.0).norm() < 0.5 * b.1));
                    if let Some(p) = uncovered {
                        fail(format!("{p} in B(x, δ) is not covered"))
                    } else if ratio > 1.0 + RATIO_TOL {
                        fail(format!("Σh = {sum:e} exceeds ε·δ^{dim}"))
                    } else {
                        None
                    }
                }
            };
            if let Some(w) = res {
                verdict.certified = false;
                verdict.witness.get_or_insert(w);
            }
        }
    }
    verdict
}

// ---------------------------------------------------------------------------
// Cover ledger

/// A positive magnitude from `exp(−exp^k(·))` to `exp^k(·)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mag {
    Small(Tiny),
    Large(Huge),
}

impl Mag {
    pub fn from_f64(x: f64) -> Mag {
        if x >= 1.0 {
            Mag::Large(Huge::from_f64(x))
        } else {
            Mag::Small(Tiny::from_f64(x).unwrap_or(Tiny::from_neg_ln(Huge::from_f64(f64::INFINITY))))
        }
    }

    /// `ln` of the magnitude, as text.
    pub fn ln_text(&self) -> String {
        match self {
            Mag::Small(t) => match t.neg_ln().level() {
                0 => sig17(t.ln()),
                _ => format!("-{}", huge17(t.neg_ln())),
            },
            Mag::Large(h) => match h.level() {
                0 => sig17(h.to_f64().ln()),
                _ => huge17(h.ln()),
            },
        }
    }

    /// `ln` as an `f64` when representable.
    pub fn ln_f64(&self) -> f64 {
        match self {
            Mag::Small(t) => t.ln(),
            Mag::Large(h) => {
                if h.level() == 0 {
                    h.to_f64().ln()
                } else {
                    h.ln().to_f64()
                }
            }
        }
    }

    /// `self ≤ other` with relative tolerance on the logarithm.
    pub fn le_tol(&self, other: &Mag, tol: f64) -> bool {
        match (self, other) {
            (Mag::Small(a), Mag::Small(b)) => a.le_tol(*b, tol),
            (Mag::Large(a), Mag::Large(b)) => a <= b || a.approx_eq(*b, tol),
            (Mag::Small(a), Mag::Large(b)) => match (a.neg_ln().level(), b.level()) {
                (0, 0) => a.to_f64() <= b.to_f64() * (1.0 + tol),
                _ => true,
            },
            (Mag::Large(a), Mag::Small(b)) => match (a.level(), b.neg_ln().level()) {
                (0, 0) => a.to_f64() <= b.to_f64() * (1.0 + tol),
                _ => false,
            },
        }
    }
}

impl fmt::Display for Mag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mag::Small(t) => write!(f, "{t}"),
            Mag::Large(h) => write!(f, "{h}"),
        }
    }
}

/// One inequality `lhs ≤ rhs` of the ledger.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub name: String,
    pub lhs: Mag,
    pub rhs: Mag,
    pub pass: bool,
}

impl LedgerRow {
    fn new(name: impl Into<String>, lhs: Mag, rhs: Mag) -> Self {
        let pass = lhs.le_tol(&rhs, TOWER_TOL);
        LedgerRow { name: name.into(), lhs, rhs, pass }
    }

    /// `ln rhs − ln lhs`, infinite when the gap is past `f64`.
    pub fn slack(&self) -> f64 {
        let d = self.rhs.ln_f64() - self.lhs.ln_f64();
        if d.is_nan() {
            if self.pass { f64::INFINITY } else { f64::NEG_INFINITY }
        } else {
            d
        }
    }
}

/// Constants and tolerances of the cover recipe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecipeParams {
    /// Radius factor of the Koebe transfer: `D(ξ, c₁ρl)` is covered.
    pub c1: f64,
    /// Diameter factor: each disk has diameter `≤ c₂ρφ(t)`.
    pub c2: f64,
    /// Growth constant `C` of the cap `exp(exp(C/φ⁴))`.
    pub growth_c: f64,
    pub eps: f64,
}

impl Default for RecipeParams {
    fn default() -> Self {
        RecipeParams { c1: 1.0 / 16.0, c2: 8.0, growth_c: 1.0, eps: 1e-3 }
    }
}

/// Orbit data at `ξ`: `|f^k(ξ)|` for `k = 0..=n` and `ln|f'(f^k(ξ))|` for
/// `k = 0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitData {
    pub moduli: Vec<f64>,
    pub ln_deriv: Vec<f64>,
}

impl OrbitData {
    /// Surrogate orbit of the exponential model: moduli `k + 1` and
    /// derivative moduli `|f'(z_k)| = |z_{k+1}|`.
    pub fn surrogate(n: usize) -> Self {
        OrbitData {
            moduli: (0..=n).map(|k| (k + 1) as f64).collect(),
            ln_deriv: (0..n).map(|k| ((k + 2) as f64).ln()).collect(),
        }
    }
}

/// Indices `n ≥ 2` where `|f^n| ≥ p_n` and `|f^n| ≥ 6/n² + max_{k<n} |f^k|`;
/// `p[0] = p_1`.
pub fn qualifying_indices(orbit: &OrbitData, p: &[f64]) -> Vec<usize> {
    let mut run = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for (n, &m) in orbit.moduli.iter().enumerate() {
        if n >= 2 && n <= p.len() {
            let nn = (n * n) as f64;
            if m >= p[n - 1] && m >= 6.0 / nn + run {
                out.push(n);
            }
        }
        run = run.max(m);
    }
    out
}

/// Cover parameters at index `n` and the ledger of the inequality chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Thm2Cover {
    pub n: usize,
    /// `δ_n = c₁ρ_n l_n`.
    pub delta: Mag,
    /// Upper bound `2l_n/φ(t_n)` on the number of disks.
    pub n_balls: Mag,
    /// Disk diameter bound `c₂ρ_nφ(t_n)`.
    pub ball_diam: Mag,
    /// Diameter inflation from the covering squares to disks.
    pub square_to_disk: f64,
    pub rows: Vec<LedgerRow>,
}

impl Thm2Cover {
    pub fn ok(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// CSV with one row per inequality.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,lhs_log,rhs_log,slack,pass\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{}\n", r.name, r.lhs.ln_text(), r.rhs.ln_text(), sig17(r.slack()), if r.pass { "pass" } else { "fail" }));
        }
        s
    }
}

fn tiny(x: f64) -> Tiny {
    Tiny::from_f64(x).expect("positive finite")
}

/// Runs the cover recipe at a qualifying index `n` and records every step
/// of the inequality chain.
pub fn thm2_cover_recipe(
    profile: &StripProfile,
    g: &dyn TinyFactor,
    orbit: &OrbitData,
    p: &[f64],
    n: usize,
    params: &RecipeParams,
) -> Result<Thm2Cover> {
    if n < 2 || n >= orbit.moduli.len() || n > orbit.ln_deriv.len() || n > p.len() {
        return Err(Error::pre(format!("index {n} outside the orbit data or rate sequence")));
    }
    if !qualifying_indices(orbit, p).contains(&n) {
        return Err(Error::pre(format!("n = {n} is not a qualifying index")));
    }
    let nf = n as f64;
    let inv = 1.0 / (nf * nf);
    let m = orbit.moduli[n];
    let prev_max = orbit.moduli[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (t, s, r) = (m - inv, m - 3.0 * inv, m - 5.0 * inv);
    let l = 2.0 * inv;
    let (pt, ps, pr) = (profile.phi_tiny(t), profile.phi_tiny(s), profile.phi_tiny(r));
    let mut rows = vec![
        LedgerRow::new("6g_rate", Mag::from_f64(p[n - 1]), Mag::from_f64(m)),
        LedgerRow::new("6g_jump", Mag::from_f64(6.0 * inv + prev_max.max(0.0)), Mag::from_f64(m)),
        LedgerRow::new("6g1_r_above_prev_rate", Mag::from_f64(p[n - 2]), Mag::from_f64(r)),
        LedgerRow::new("6h_t_s", Mag::Small(pt), Mag::Small(ps)),
        LedgerRow::new("6h_s_r", Mag::Small(ps), Mag::Small(pr)),
        LedgerRow::new("6h_r_decay", Mag::Small(pr), Mag::Small(tiny(4f64.powi(-(n as i32 - 1))))),
        LedgerRow::new("6h_decay_inv_n2", Mag::Small(tiny(4f64.powi(-(n as i32 - 1)))), Mag::Small(tiny(inv))),
        LedgerRow::new("r_plus_8phi_le_s", Mag::from_f64(r + 8.0 * pr.to_f64()), Mag::from_f64(s)),
        LedgerRow::new("6g2", Mag::Small(g.apply(pt)), Mag::Small(tau_tiny(ps))),
    ];
    // Cauchy estimate: |f'(f^k ξ)| ≤ n² max_{|z|=r}|f| ≤ (1/φ(s))·exp(exp(C/φ(s)⁴)).
    let h_s = ps.neg_ln();
    let cap_ln = h_s.add(Huge::from_f64(params.growth_c).mul(h_s.scale(4.0).exp()).exp());
    let ln_deriv_max = orbit.ln_deriv[..n].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    rows.push(LedgerRow::new("cauchy_n2_le_inv_phi_s", Mag::from_f64(nf * nf), Mag::Large(ps.recip_huge())));
    rows.push(LedgerRow::new(
        "cauchy_derivative_cap",
        Mag::from_f64(ln_deriv_max.exp().max(1.0)),
        Mag::Large(cap_ln.exp()),
    ));
    rows.push(LedgerRow::new("cap_c_le_inv_phi_s", Mag::from_f64(params.growth_c), Mag::Large(ps.recip_huge())));
    // ρ_n = 1/|(f^n)'(ξ)| = exp(−Σ ln|f'|).
    let ln_rho: f64 = -orbit.ln_deriv[..n].iter().sum::<f64>();
    let rho = Tiny::from_neg_ln(Huge::from_f64(-ln_rho));
    rows.push(LedgerRow::new("rho_ge_4n_tau", Mag::Small(tau_tiny(ps).scale(4f64.powi(n as i32))), Mag::Small(rho)));
    let c6l = params.c1 * params.c1 * params.eps / (params.c2 * nf * nf);
    rows.push(LedgerRow::new("6l", Mag::Small(g.apply(pt)), Mag::Small(rho.scale(c6l))));
    rows.push(LedgerRow::new("c2_rho_le_1", Mag::Small(rho.scale(params.c2)), Mag::from_f64(1.0)));
    let delta = rho.scale(params.c1 * l);
    let diam = rho.mul(pt).scale(params.c2);
    let sum = rho.mul(g.apply(diam)).scale(2.0 * params.c2 * l);
    rows.push(LedgerRow::new("6k_6f", Mag::Small(sum), Mag::Small(delta.mul(delta).scale(params.eps))));
    Ok(Thm2Cover {
        n,
        delta: Mag::Small(delta),
        n_balls: Mag::Large(pt.recip_huge().scale(2.0 * l)),
        ball_diam: Mag::Small(diam),
        square_to_disk: std::f64::consts::SQRT_2,
        rows,
    })
}
