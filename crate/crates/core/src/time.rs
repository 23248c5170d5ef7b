// SPDX-License-Identifier: Apache-2.0
//! Integer simulation time.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::num::Real;

/// A timestamp or duration in whole femtoseconds.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(pub i64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(i64::MAX);

    pub const fn fs(ticks: i64) -> Self {
        SimTime(ticks)
    }

    pub const fn ps(ps: i64) -> Self {
        SimTime(ps * 1_000)
    }

    pub const fn ns(ns: i64) -> Self {
        SimTime(ns * 1_000_000)
    }

    pub const fn us(us: i64) -> Self {
        SimTime(us * 1_000_000_000)
    }

    pub const fn ticks(self) -> i64 {
        self.0
    }

    /// Nearest tick to `secs` seconds.
    pub fn from_secs<F: Real>(secs: F) -> Self {
        SimTime((secs * F::of(1e15)).round_i64())
    }

    /// Nearest tick to `fs` femtoseconds.
    pub fn from_fs<F: Real>(fs: F) -> Self {
        SimTime(fs.round_i64())
    }

    /// Bit period of a link running at `rate` bits per second.
    pub fn period_of_rate<F: Real>(rate: F) -> Self {
        SimTime::from_secs(F::one() / rate)
    }

    pub fn as_secs<F: Real>(self) -> F {
        F::of(self.0 as f64) * F::of(1e-15)
    }

    pub fn as_fs<F: Real>(self) -> F {
        F::of(self.0 as f64)
    }

    /// `self / period` as a fraction of a unit interval.
    pub fn in_ui<F: Real>(self, period: SimTime) -> F {
        F::of(self.0 as f64 / period.0 as f64)
    }

    /// Scales a duration by a real factor, rounding to the nearest tick.
    pub fn scale<F: Real>(self, k: F) -> Self {
        SimTime((F::of(self.0 as f64) * k).round_i64())
    }

    /// Floor division by a positive period.
    pub fn div_floor(self, period: SimTime) -> i64 {
        self.0.div_euclid(period.0)
    }

    /// Euclidean remainder in `[0, period)`.
    pub fn rem_period(self, period: SimTime) -> SimTime {
        SimTime(self.0.rem_euclid(period.0))
    }

    pub fn abs(self) -> SimTime {
        SimTime(self.0.abs())
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl SubAssign for SimTime {
    fn sub_assign(&mut self, rhs: SimTime) {
        self.0 -= rhs.0;
    }
}

impl Neg for SimTime {
    type Output = SimTime;
    fn neg(self) -> SimTime {
        SimTime(-self.0)
    }
}

impl Mul<i64> for SimTime {
    type Output = SimTime;
    fn mul(self, rhs: i64) -> SimTime {
        SimTime(self.0 * rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} fs", self.0)
    }
}
