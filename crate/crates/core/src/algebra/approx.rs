//! Floating-point views of exact scalars, for human-readable reports only.

use num::traits::ToPrimitive;

use super::{Rational, Scalar};

impl Rational {
    pub fn to_f64(&self) -> f64 {
        self.to_big().to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar {
    /// Approximate real value.
    pub fn approx(&self) -> f64 {
        self.rational_part().to_f64() + self.sqrt2_part().to_f64() * std::f64::consts::SQRT_2
    }
}
