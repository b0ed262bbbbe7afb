//! Koebe distortion and quarter bounds, and contraction certificates for
//! univalent branches built from them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ifs::Square;

/// Default padding: the branch is univalent on the square with twice the
/// side of the one it is certified on.
pub const DEFAULT_PADDING: f64 = 0.5;

/// Derivative samples per side of the certified square.
pub const DERIV_GRID: usize = 64;

/// Data of one application of the distortion theorem on `D(a, r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KoebeBound {
    pub a: Complex64,
    pub r: f64,
    pub lambda: f64,
    pub gprime_a: f64,
}

impl KoebeBound {
    pub fn new(a: Complex64, r: f64, lambda: f64, gprime_a: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(r > 0.0) {
            return Err(Error::pre("disk radius must be positive"));
        }
        Ok(KoebeBound { a, r, lambda, gprime_a })
    }

    pub fn ratio_bounds(&self) -> (f64, f64) {
        ratio_factors(self.lambda).map_pair(self.gprime_a)
    }

    pub fn derivative_bounds(&self) -> (f64, f64) {
        derivative_factors(self.lambda).map_pair(self.gprime_a)
    }
}

trait MapPair {
    fn map_pair(self, s: f64) -> (f64, f64);
}

impl MapPair for (f64, f64) {
    fn map_pair(self, s: f64) -> (f64, f64) {
        (self.0 * s, self.1 * s)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::pre(format!("Koebe parameter must lie in (0,1), got {lambda}")));
    }
    Ok(())
}

fn ratio_factors(l: f64) -> (f64, f64) {
    (1.0 / ((1.0 + l) * (1.0 + l)), 1.0 / ((1.0 - l) * (1.0 - l)))
}

fn derivative_factors(l: f64) -> (f64, f64) {
    ((1.0 - l) / (1.0 + l).powi(3), (1.0 + l) / (1.0 - l).powi(3))
}

/// Bounds on `|g(z)−g(a)|/|z−a|` for `|z−a| ≤ λr`.
pub fn koebe_ratio_bounds(gprime_a: f64, lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if !(gprime_a > 0.0) {
        return Err(Error::pre("|g'(a)| must be positive"));
    }
    Ok(ratio_factors(lambda).map_pair(gprime_a))
}

/// Bounds on `|g'(z)|` for `|z−a| ≤ λr`.
pub fn koebe_derivative_bounds(gprime_a: f64, lambda: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if !(gprime_a > 0.0) {
        return Err(Error::pre("|g'(a)| must be positive"));
    }
    Ok(derivative_factors(lambda).map_pair(gprime_a))
}

/// A closed disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

/// The disk `D(g(a), |g'(a)|·r/4)` covered by `g(D(a,r))`.
pub fn koebe_quarter(g_a: Complex64, gprime_a: f64, r: f64) -> Disk {
    Disk { center: g_a, radius: 0.25 * gprime_a * r }
}

/// Samples the image of the circle `|z−a| = r` and returns the smallest
/// distance to `disk.center` divided by `disk.radius`; a value `≥ 1` means
/// the sampled boundary image stays outside the disk.
pub fn quarter_margin(g: &dyn Fn(Complex64) -> Complex64, a: Complex64, r: f64, disk: &Disk, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let z = a + Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64);
            (g(z) - disk.center).norm() / disk.radius
        })
        .fold(f64::INFINITY, f64::min)
}

/// `K = (1+λ)⁴/(1−λ)⁴`: the ratio of the two derivative bounds, so
/// `K·b ≥ sup ratio` for every branch with the same padding.
pub fn distortion_constant(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let (lo, hi) = derivative_factors(lambda);
    Ok(hi / lo)
}

/// Contraction bounds for one branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCertificate {
    pub b_lower: f64,
    pub c_upper: f64,
    /// Branch-independent distortion constant for the padding used.
    pub k: f64,
}

/// Certifies `b·|z−w| ≤ |g(z)−g(w)| ≤ c·|z−w|` on `inner` for a branch
/// univalent on the square `inner` enlarged by the factor `1/padding`.
///
/// `|g'|` is sampled on a 64×64 grid; every point of `inner` is within `η`
/// of a sample whose distance to the padded boundary is at least `ρ`, and
/// Koebe's derivative bounds with `μ = η/ρ` turn the sampled extremes into
/// bounds over the whole square. The lower chord bound then takes the Koebe
/// ratio factor for the padding. A derivative that is constant on all
/// samples is treated as affine and certified exactly.
pub fn certify_branch_contraction(
    deriv: &(dyn Fn(Complex64) -> Complex64 + Sync),
    inner: &Square,
    padding: f64,
) -> Result<ContractionCertificate> {
    check_lambda(padding)?;
    let samples = inner.grid(DERIV_GRID);
    let mags: Vec<f64> = samples.par_iter().map(|&z| deriv(z).norm()).collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &m in &mags {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::pre("branch derivative vanishes or is not finite: not univalent"));
        }
        lo = lo.min(m);
        hi = hi.max(m);
    }
    let k = distortion_constant(padding)?;
    if lo == hi {
        // A constant derivative on every sample is read as an affine branch.
        return Ok(ContractionCertificate { b_lower: lo, c_upper: hi, k });
    }
    let eta = inner.side() / DERIV_GRID as f64 * std::f64::consts::FRAC_1_SQRT_2;
    let rho = inner.half / padding - inner.half;
    let mu = eta / rho;
    if mu >= 1.0 {
        return Err(Error::num("sample spacing too coarse for the padding"));
    }
    let (dlo, dhi) = derivative_factors(mu);
    let (rlo, _) = ratio_factors(padding);
    Ok(ContractionCertificate { b_lower: lo * dlo * rlo, c_upper: hi * dhi, k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_bounds_at_half() {
        let (lo, hi) = koebe_ratio_bounds(1.0, 0.5).unwrap();
        assert!((lo - 4.0 / 9.0).abs() < 1e-15 && (hi - 4.0).abs() < 1e-15);
        assert!(koebe_ratio_bounds(1.0, 1.0).is_err());
    }

    #[test]
    fn koebe_function_attains_upper_ratio() {
        // k(z) = z/(1−z)², k'(0) = 1; at z = λ the ratio is 1/(1−λ)².
        for &l in &[0.1, 0.5, 0.9] {
            let ratio = (l / ((1.0 - l) * (1.0 - l))) / l;
            let (_, hi) = koebe_ratio_bounds(1.0, l).unwrap();
            assert!((ratio - hi).abs() <= 1e-12 * hi);
        }
    }

    #[test]
    fn distortion_constant_at_half() {
        assert!((distortion_constant(0.5).unwrap() - 81.0).abs() < 1e-12);
    }

    #[test]
    fn affine_branch_is_exact() {
        let a = Complex64::new(0.3, 0.0);
        let cert = certify_branch_contraction(&|_| a, &Square::unit(), 0.5).unwrap();
        assert_eq!((cert.b_lower, cert.c_upper), (0.3, 0.3));
    }

    #[test]
    fn vanishing_derivative_rejected() {
        assert!(certify_branch_contraction(&|_| Complex64::new(0.0, 0.0), &Square::unit(), 0.5).is_err());
    }
}
