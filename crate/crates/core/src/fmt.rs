//! Text formatting shared by CSV writers.

use crate::tower::Huge;

/// 17 significant digits, `.` as decimal separator, round-trip exact.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// A tower number with its top at 17 significant digits.
pub fn huge17(h: Huge) -> String {
    match h.level() {
        0 => sig17(h.top()),
        l => format!("exp^{l}({})", sig17(h.top())),
    }
}
