// SPDX-License-Identifier: Apache-2.0
//! Scalar abstraction for the analog side of the model.
//!
//! Time is always integer femtoseconds ([`crate::SimTime`]); everything that
//! is a voltage, a fraction of a unit interval or a frequency is carried in a
//! generic `F: Real`, implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by voltages, jitter amplitudes and metrics.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FromStr + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; used for constants and parsed values.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// `self` rounded to the nearest integer, as `i64`.
    fn round_i64(self) -> i64 {
        self.round().to_i64().unwrap_or(if self > Self::zero() { i64::MAX } else { i64::MIN })
    }
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn of(x: f64) -> Self {
                x as $f
            }
            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Wraps a phase in unit intervals to `[-0.5, 0.5)`.
pub fn wrap_ui<F: Real>(x: F) -> F {
    let half = F::of(0.5);
    x - (x + half).floor()
}

/// Wraps a phase in unit intervals to `[0, 1)`.
pub fn frac_ui<F: Real>(x: F) -> F {
    x - x.floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping() {
        assert_eq!(wrap_ui(0.75f64), -0.25);
        assert_eq!(wrap_ui(-0.5f64), -0.5);
        assert_eq!(wrap_ui(0.5f32), -0.5);
        assert_eq!(frac_ui(-0.25f64), 0.75);
        assert_eq!(frac_ui(1.0f64), 0.0);
    }

    #[test]
    fn rounding() {
        assert_eq!(2.5f64.round_i64(), 3);
        assert_eq!((-2.5f64).round_i64(), -3);
        assert_eq!(f64::INFINITY.round_i64(), i64::MAX);
    }
}
