//! Positive quantities stored by their natural logarithm.
//!
//! Doubly exponential quantities such as `exp(-exp(1/t^5))` leave the `f64`
//! range long before the constructions that use them stop being meaningful.
//! [`LogValue`] keeps `ln x` instead of `x`, so products, quotients and powers
//! stay exact in relative terms at any magnitude.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul};

/// A nonnegative real number represented as `ln x`. Zero is `ln x = -inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a logarithm. `NaN` is rejected by returning `None`.
    pub fn from_ln(ln: f64) -> Option<Self> {
        if ln.is_nan() || ln == f64::INFINITY {
            None
        } else {
            Some(LogValue(ln))
        }
    }

    /// Wraps a logarithm that is known to be valid.
    pub fn exp_of(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogValue(ln)
    }

    /// Returns `None` for negative or non-finite input.
    pub fn from_f64(x: f64) -> Option<Self> {
        if x.is_finite() && x >= 0.0 {
            Some(LogValue(x.ln()))
        } else {
            None
        }
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// The plain value; underflows to 0 or overflows to `inf` outside the
    /// `f64` range.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    /// The plain value if it is a normal finite nonzero `f64`.
    pub fn to_f64(self) -> Option<f64> {
        let v = self.0.exp();
        (v.is_normal()).then_some(v)
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powf(self, p: f64) -> Self {
        if self.is_zero() {
            return if p > 0.0 { Self::ZERO } else { Self::ONE };
        }
        LogValue(self.0 * p)
    }

    pub fn recip(self) -> Self {
        LogValue(-self.0)
    }

    /// `ln(e^a + e^b)` evaluated without overflow.
    pub fn add(self, other: Self) -> Self {
        let (hi, lo) = if self.0 >= other.0 { (self.0, other.0) } else { (other.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogValue(hi);
        }
        LogValue(hi + (lo - hi).exp().ln_1p())
    }

    /// `self - other`, or `None` when the difference would be negative.
    pub fn checked_sub(self, other: Self) -> Option<Self> {
        match self.0.partial_cmp(&other.0)? {
            Ordering::Less => None,
            Ordering::Equal => Some(Self::ZERO),
            Ordering::Greater => {
                if other.is_zero() {
                    return Some(self);
                }
                // ln(e^a - e^b) = a + ln(1 - e^{b-a})
                Some(LogValue(self.0 + (-(other.0 - self.0).exp_m1()).ln()))
            }
        }
    }

    pub fn sum<I: IntoIterator<Item = LogValue>>(iter: I) -> Self {
        let items: Vec<LogValue> = iter.into_iter().collect();
        let max = items.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let s: f64 = items.iter().map(|v| (v.0 - max).exp()).sum();
        LogValue(max + s.ln())
    }

    pub fn max(self, other: Self) -> Self {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            return LogValue::ZERO;
        }
        LogValue(self.0 + rhs.0)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 - rhs.0)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_f64() {
            Some(v) => write!(f, "{v:e}"),
            None if self.is_zero() => write!(f, "0"),
            None => write!(f, "exp({})", self.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_plain_floats() {
        let a = LogValue::from_f64(3.0).unwrap();
        let b = LogValue::from_f64(5.0).unwrap();
        assert!(((a * b).value() - 15.0).abs() < 1e-12);
        assert!(((b / a).value() - 5.0 / 3.0).abs() < 1e-12);
        assert!((a.add(b).value() - 8.0).abs() < 1e-12);
        assert!((b.checked_sub(a).unwrap().value() - 2.0).abs() < 1e-12);
        assert!(a.checked_sub(b).is_none());
        assert!((a.powf(2.5).value() - 3f64.powf(2.5)).abs() < 1e-10);
    }

    #[test]
    fn survives_far_outside_f64_range() {
        let tiny = LogValue::exp_of(-1e6);
        let huge = LogValue::exp_of(1e6);
        assert!((tiny * huge).ln().abs() < 1e-9);
        assert_eq!(tiny.to_f64(), None);
        assert_eq!(tiny.add(LogValue::ZERO), tiny);
        let s = LogValue::sum([huge, huge]);
        assert!((s.ln() - (1e6 + 2f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn zero_behaves() {
        assert!(LogValue::from_f64(0.0).unwrap().is_zero());
        assert!(LogValue::from_f64(-1.0).is_none());
        assert!((LogValue::ZERO * LogValue::exp_of(1e300)).is_zero());
        assert_eq!(LogValue::sum(std::iter::empty()), LogValue::ZERO);
    }
}
