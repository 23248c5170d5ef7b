// SPDX-License-Identifier: Apache-2.0
use std::fmt;
use std::ops::{Add, Sub};

use crate::num::Real;

/// A voltage in volts.
#[derive(Copy, Clone, Debug, Default, PartialEq, PartialOrd)]
pub struct Voltage<F>(pub F);

impl<F: Real> Voltage<F> {
    pub fn volts(v: f64) -> Self {
        Voltage(F::of(v))
    }

    pub fn millivolts(mv: f64) -> Self {
        Voltage(F::of(mv * 1e-3))
    }

    pub fn value(self) -> F {
        self.0
    }

    pub fn clamp(self, lo: Voltage<F>, hi: Voltage<F>) -> Self {
        Voltage(self.0.max(lo.0).min(hi.0))
    }
}

impl<F: Real> Add for Voltage<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Voltage(self.0 + rhs.0)
    }
}

impl<F: Real> Sub for Voltage<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Voltage(self.0 - rhs.0)
    }
}

impl<F: Real> fmt::Display for Voltage<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} V", self.0)
    }
}
