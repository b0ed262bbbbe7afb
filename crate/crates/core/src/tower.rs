//! Level-index numbers for quantities beyond even the log scale.
//!
//! [`Huge`] stores `exp^L(top)`, the `L`-fold exponential of an `f64`.
//! [`Tiny`] stores a positive number `x` through `-ln x` as a [`Huge`], so
//! values such as `exp(-exp(exp(800)))` compare and combine exactly in
//! relative terms. Iterated maximum moduli and the strip-profile widths of
//! the zero-measure construction both live here.

use std::cmp::Ordering;
use std::fmt;

/// `ln(f64::MAX)`: the largest `top` whose exponential is finite.
pub const LN_MAX: f64 = 709.782_712_893_384;

/// A real number `exp^level(top)`.
///
/// Canonical form: when `level >= 1`, `top > LN_MAX`, so that lexicographic
/// comparison of `(level, top)` is numeric comparison. At level 0 `top` may
/// be any finite `f64`, including negative values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Huge {
    level: u32,
    top: f64,
}

impl Huge {
    pub const ZERO: Huge = Huge { level: 0, top: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Huge { level: 0, top: x }
    }

    /// Builds `exp^level(top)` and canonicalizes.
    pub fn tower(level: u32, top: f64) -> Self {
        let mut h = Huge { level, top };
        while h.level > 0 && h.top <= LN_MAX {
            h.top = h.top.exp();
            h.level -= 1;
        }
        h
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn top(self) -> f64 {
        self.top
    }

    /// The plain value, `inf` when it does not fit.
    pub fn to_f64(self) -> f64 {
        if self.level == 0 {
            self.top
        } else {
            f64::INFINITY
        }
    }

    pub fn is_finite_f64(self) -> bool {
        self.level == 0
    }

    pub fn exp(self) -> Self {
        if self.level == 0 && self.top <= LN_MAX {
            Huge { level: 0, top: self.top.exp() }
        } else {
            Huge { level: self.level + 1, top: self.top }
        }
    }

    /// Natural logarithm; the value must be positive.
    pub fn ln(self) -> Self {
        debug_assert!(self.level > 0 || self.top > 0.0, "ln of nonpositive Huge");
        if self.level == 0 {
            Huge { level: 0, top: self.top.ln() }
        } else {
            Huge { level: self.level - 1, top: self.top }
        }
    }

    /// `self + c` for an ordinary float `c` (either sign).
    pub fn add_f64(self, c: f64) -> Self {
        match self.level {
            0 => {
                let s = self.top + c;
                if s.is_finite() {
                    Huge { level: 0, top: s }
                } else {
                    // ln(a + c) = ln a + ln(1 + c/a)
                    Huge { level: 1, top: self.top.ln() + (c / self.top).ln_1p() }
                }
            }
            1 => Huge::tower(1, self.top + (c * (-self.top).exp()).ln_1p()),
            _ => self,
        }
    }

    /// Sum of two nonnegative values.
    pub fn add(self, other: Huge) -> Self {
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        match hi.level {
            0 => hi.add_f64(lo.top),
            1 => {
                // ln(hi + lo) = top + ln(1 + lo/hi)
                let ratio = match lo.level {
                    0 => lo.top * (-hi.top).exp(),
                    _ => (lo.top - hi.top).exp(),
                };
                Huge { level: 1, top: hi.top + ratio.ln_1p() }
            }
            _ => hi,
        }
    }

    /// Product of two positive values.
    pub fn mul(self, other: Huge) -> Self {
        if self.level == 0 && other.level == 0 {
            let p = self.top * other.top;
            if p.is_finite() {
                return Huge { level: 0, top: p };
            }
        }
        self.ln().add_signed(other.ln()).exp()
    }

    /// Sum where either term may be a negative level-0 number.
    fn add_signed(self, other: Huge) -> Self {
        if self.level == 0 && other.level == 0 {
            return Huge::from_f64(self.top).add_f64(other.top);
        }
        if self.level == 0 {
            return other.add_f64(self.top);
        }
        if other.level == 0 {
            return self.add_f64(other.top);
        }
        self.add(other)
    }

    /// `self · c` for `c > 0`.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c > 0.0);
        match self.level {
            0 => {
                let p = self.top * c;
                if p.is_finite() {
                    Huge { level: 0, top: p }
                } else {
                    Huge { level: 1, top: self.top.ln() + c.ln() }
                }
            }
            _ => self.ln().add_f64(c.ln()).exp(),
        }
    }

    /// `self^p` for positive `self` and `p > 0`.
    pub fn powf(self, p: f64) -> Self {
        if self.level == 0 {
            let v = self.top.powf(p);
            if v.is_finite() {
                return Huge::from_f64(v);
            }
        }
        self.ln().scale_signed(p).exp()
    }

    fn scale_signed(self, c: f64) -> Self {
        if self.level == 0 {
            Huge::from_f64(self.top).scale_any(c)
        } else {
            self.scale(c)
        }
    }

    fn scale_any(self, c: f64) -> Self {
        let p = self.top * c;
        if p.is_finite() {
            Huge { level: 0, top: p }
        } else {
            Huge { level: 1, top: self.top.abs().ln() + c.abs().ln() }
        }
    }

    /// Level index `ψ` with `ψ(x) = x` on `[0, 1)` and `ψ(x) = 1 + ψ(ln x)`
    /// above; strictly increasing on `[0, inf)`.
    pub fn index(self) -> f64 {
        let mut level = self.level as f64;
        let mut t = self.top;
        if t < 0.0 {
            return t;
        }
        while t >= 1.0 {
            t = t.ln();
            level += 1.0;
        }
        level + t
    }

    /// Inverse of [`Huge::index`].
    pub fn from_index(psi: f64) -> Self {
        if psi < 1.0 {
            return Huge::from_f64(psi);
        }
        let levels = psi.floor();
        let mut h = Huge::from_f64(psi - levels);
        for _ in 0..levels as u64 {
            h = h.exp();
        }
        h
    }

    /// Relative closeness in level-index space.
    pub fn approx_eq(self, other: Huge, tol: f64) -> bool {
        if self.level != other.level {
            return (self.index() - other.index()).abs() <= tol;
        }
        (self.top - other.top).abs() <= tol * self.top.abs().max(other.top.abs()).max(1.0)
    }
}

impl PartialOrd for Huge {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.level.cmp(&other.level) {
            Ordering::Equal => self.top.partial_cmp(&other.top),
            o => Some(o),
        }
    }
}

impl fmt::Display for Huge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            0 => write!(f, "{:e}", self.top),
            l => write!(f, "exp^{}({})", l, self.top),
        }
    }
}

/// A positive number `x` stored as `-ln x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tiny {
    neg_ln: Huge,
}

impl Tiny {
    pub const ONE: Tiny = Tiny { neg_ln: Huge::ZERO };

    pub fn from_f64(x: f64) -> Option<Self> {
        (x > 0.0 && x.is_finite()).then(|| Tiny { neg_ln: Huge::from_f64(-x.ln()) })
    }

    pub fn from_neg_ln(h: Huge) -> Self {
        Tiny { neg_ln: h }
    }

    /// `exp(-exp(v))`: the doubly exponential small number.
    pub fn exp_neg_exp(v: f64) -> Self {
        Tiny { neg_ln: Huge::from_f64(v).exp() }
    }

    pub fn neg_ln(self) -> Huge {
        self.neg_ln
    }

    /// `ln x` when it fits in an `f64`.
    pub fn ln(self) -> f64 {
        -self.neg_ln.to_f64()
    }

    /// Plain value; 0 on underflow.
    pub fn to_f64(self) -> f64 {
        (-self.neg_ln.to_f64()).exp()
    }

    pub fn mul(self, other: Tiny) -> Tiny {
        Tiny { neg_ln: signed_sum(self.neg_ln, other.neg_ln) }
    }

    pub fn div(self, other: Tiny) -> Tiny {
        // Only meaningful when other's -ln fits an f64.
        Tiny { neg_ln: self.neg_ln.add_f64(-other.neg_ln.to_f64()) }
    }

    /// `x · c` for a positive float `c`.
    pub fn scale(self, c: f64) -> Tiny {
        Tiny { neg_ln: self.neg_ln.add_f64(-c.ln()) }
    }

    /// `x^p` for `p > 0`.
    pub fn powf(self, p: f64) -> Tiny {
        Tiny { neg_ln: self.neg_ln.scale_signed(p) }
    }

    pub fn recip_huge(self) -> Huge {
        self.neg_ln.exp()
    }

    /// `self <= other` up to a relative tolerance on `-ln`.
    pub fn le_tol(self, other: Tiny, tol: f64) -> bool {
        self <= other || self.neg_ln.approx_eq(other.neg_ln, tol)
    }
}

fn signed_sum(a: Huge, b: Huge) -> Huge {
    a.add_signed(b)
}

impl PartialOrd for Tiny {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        other.neg_ln.partial_cmp(&self.neg_ln)
    }
}

impl fmt::Display for Tiny {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.neg_ln.level == 0 && self.neg_ln.top < 700.0 {
            write!(f, "{:e}", self.to_f64())
        } else {
            write!(f, "exp(-{})", self.neg_ln)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_ordering() {
        let a = Huge::tower(1, 800.0);
        let b = Huge::from_f64(1e300);
        let c = Huge::tower(2, 710.0);
        assert!(b < a && a < c);
        assert_eq!(Huge::tower(1, 2.0), Huge::from_f64(2f64.exp()));
        assert!(Huge::from_f64(-3.0) < Huge::ZERO);
    }

    #[test]
    fn exp_ln_round_trip() {
        let mut h = Huge::from_f64(1.0);
        for _ in 0..6 {
            h = h.exp();
        }
        for _ in 0..6 {
            h = h.ln();
        }
        assert!((h.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn arithmetic_in_range_matches_f64() {
        let a = Huge::from_f64(3.5);
        let b = Huge::from_f64(2.0);
        assert_eq!(a.add(b).to_f64(), 5.5);
        assert_eq!(a.mul(b).to_f64(), 7.0);
        assert!((a.powf(3.0).to_f64() - 42.875).abs() < 1e-12);
        assert!((a.scale(0.5).to_f64() - 1.75).abs() < 1e-15);
        let big = Huge::from_f64(1e300).mul(Huge::from_f64(1e300));
        assert_eq!(big.level(), 1);
        assert!((big.top() - 600.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn index_is_monotone_and_invertible() {
        let xs = [0.0, 0.5, 1.0, 2.0, 15.0, 1e10, 1e300];
        let idx: Vec<f64> = xs.iter().map(|&x| Huge::from_f64(x).index()).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for &x in &xs[..6] {
            let back = Huge::from_index(Huge::from_f64(x).index()).to_f64();
            assert!((back - x).abs() <= 1e-9 * x.max(1.0), "{x} -> {back}");
        }
        assert!(Huge::tower(3, 800.0).index() > Huge::tower(2, 800.0).index());
    }

    #[test]
    fn tiny_values_order_and_scale() {
        let a = Tiny::from_f64(0.25).unwrap();
        let b = Tiny::from_f64(0.5).unwrap();
        assert!(a < b);
        assert!((a.mul(b).to_f64() - 0.125).abs() < 1e-15);
        assert!((a.scale(2.0).to_f64() - 0.5).abs() < 1e-15);
        let t = Tiny::exp_neg_exp(800.0);
        assert!(t < a && t.to_f64() == 0.0);
        assert!(t.powf(0.5) > t);
    }
}
