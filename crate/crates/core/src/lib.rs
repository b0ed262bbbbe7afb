//! Constructive machinery for escape-rate subsets of escaping sets of entire
//! functions: gauge functions, iterated function schemes with cylinder
//! measures, logarithmic transforms of class-B maps, Koebe and Ahlfors
//! distortion bounds, strip-profile contour functions, covering arguments and
//! orbit classification.
//!
//! Every inequality used by the constructions is exposed as a function that
//! can be evaluated at sample points, so the constructions can be checked
//! numerically rather than trusted.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait, clippy::suspicious_arithmetic_impl)]

pub mod cover;
pub mod distortion;
pub mod error;
pub mod fmt;
pub mod escape;
pub mod gauge;
pub mod ifs;
pub mod logspace;
pub mod logtransform;
pub mod quad;
pub mod strip;
pub mod tower;

pub use error::{Error, Result};
pub use logspace::LogValue;
pub use tower::{Huge, Tiny};
pub use num_complex::Complex64;
