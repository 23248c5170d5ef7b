// SPDX-License-Identifier: Apache-2.0
//! Fine tuning loop: weak/strong charge pump on the loop-filter capacitor and
//! the voltage-controlled delay line.
//!
//! The capacitor charge is an integer count of `i_weak * 1 fs / 1024`, so
//! integration over any split of an interval gives the same result exactly.

use thiserror::Error;

use crate::num::Real;
use crate::time::SimTime;
use crate::units::Voltage;

/// Sub-units per weak-pump femtosecond; sets the resolution of `strong_ratio`.
pub const CHARGE_SUBUNITS: i64 = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FineLoopError {
    #[error("up_strong and dn_strong asserted together")]
    ConflictingStrong,
    #[error("negative integration interval {0}")]
    NegativeInterval(SimTime),
    #[error("pump parameter {0} must be positive")]
    NonPositive(&'static str),
    #[error("strong ratio must be at least 1, got {0}")]
    WeakStrongPump(f64),
    #[error("VCDL window must satisfy 0 <= v_low < v_high")]
    BadWindow,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PumpConfig<F> {
    /// Weak pump current in amperes.
    pub i_weak: F,
    pub strong_ratio: F,
    /// Loop-filter capacitance in farads.
    pub c_filter: F,
    pub v_dd: Voltage<F>,
}

impl<F: Real> Default for PumpConfig<F> {
    fn default() -> Self {
        PumpConfig {
            i_weak: F::of(1e-6),
            strong_ratio: F::of(16.0),
            c_filter: F::of(200e-15),
            v_dd: Voltage::volts(1.2),
        }
    }
}

impl<F: Real> PumpConfig<F> {
    pub fn validate(&self) -> Result<(), FineLoopError> {
        if !(self.i_weak > F::zero()) {
            return Err(FineLoopError::NonPositive("i_weak"));
        }
        if !(self.c_filter > F::zero()) {
            return Err(FineLoopError::NonPositive("c_filter"));
        }
        if !(self.v_dd.0 > F::zero()) {
            return Err(FineLoopError::NonPositive("v_dd"));
        }
        if !(self.strong_ratio >= F::one()) {
            return Err(FineLoopError::WeakStrongPump(self.strong_ratio.as_f64()));
        }
        Ok(())
    }

    /// Weak-pump slew rate `I / C` in volts per second.
    pub fn weak_slew(&self) -> F {
        self.i_weak / self.c_filter
    }

    /// Volts per charge unit.
    pub fn lsb(&self) -> F {
        self.i_weak * F::of(1e-15) / (F::of(CHARGE_SUBUNITS as f64) * self.c_filter)
    }

    pub fn strong_rate(&self) -> i64 {
        (self.strong_ratio * F::of(CHARGE_SUBUNITS as f64)).round_i64()
    }

    /// Charge units corresponding to `v`, rounded to nearest.
    pub fn charge_of(&self, v: Voltage<F>) -> i64 {
        (v.0 / self.lsb()).round_i64()
    }

    pub fn max_charge(&self) -> i64 {
        self.charge_of(self.v_dd)
    }
}

/// Pump inputs, held constant over an integration interval.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct PumpDrive {
    pub up: bool,
    pub dn: bool,
    pub up_strong: bool,
    pub dn_strong: bool,
}

impl PumpDrive {
    pub fn strong_active(&self) -> bool {
        self.up_strong || self.dn_strong
    }

    /// Net charge rate in units per femtosecond.
    pub fn rate<F: Real>(&self, cfg: &PumpConfig<F>) -> Result<i64, FineLoopError> {
        if self.up_strong && self.dn_strong {
            return Err(FineLoopError::ConflictingStrong);
        }
        let strong = cfg.strong_rate() * (self.up_strong as i64 - self.dn_strong as i64);
        let weak = if self.strong_active() { 0 } else { CHARGE_SUBUNITS * (self.up as i64 - self.dn as i64) };
        Ok(strong + weak)
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct FineLoopState {
    /// Capacitor charge in pump units; `v_c = charge * lsb`.
    pub charge: i64,
    /// True while a strong pump command has the weak pump gated off.
    pub weak_gated_off: bool,
}

impl FineLoopState {
    pub fn at_voltage<F: Real>(v: Voltage<F>, cfg: &PumpConfig<F>) -> Self {
        let charge = cfg.charge_of(v.clamp(Voltage(F::zero()), cfg.v_dd));
        FineLoopState { charge, weak_gated_off: false }
    }

    pub fn v_c<F: Real>(&self, cfg: &PumpConfig<F>) -> Voltage<F> {
        Voltage(F::of(self.charge as f64) * cfg.lsb()).clamp(Voltage(F::zero()), cfg.v_dd)
    }
}

/// Integrates constant pump inputs over `dt` and clamps to the rails.
pub fn pump_integrate<F: Real>(
    state: FineLoopState,
    drive: PumpDrive,
    dt: SimTime,
    cfg: &PumpConfig<F>,
) -> Result<FineLoopState, FineLoopError> {
    if dt < SimTime::ZERO {
        return Err(FineLoopError::NegativeInterval(dt));
    }
    let rate = drive.rate(cfg)?;
    let charge = state.charge.saturating_add(rate.saturating_mul(dt.ticks())).clamp(0, cfg.max_charge());
    Ok(FineLoopState { charge, weak_gated_off: drive.strong_active() })
}

/// Earliest time (relative to now) at which a charge moving at `rate` reaches
/// `target`; `None` if it never does.
pub fn time_to_charge(from: i64, target: i64, rate: i64) -> Option<SimTime> {
    let gap = target - from;
    if gap == 0 {
        return Some(SimTime::ZERO);
    }
    if rate == 0 || gap.signum() != rate.signum() {
        return None;
    }
    // ceil(gap / rate) for same-signed operands
    let (g, r) = (gap.abs(), rate.abs());
    Some(SimTime((g + r - 1) / r))
}

/// Process corner of the VCDL.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Corner {
    SS,
    #[default]
    TT,
    FF,
    FNSP,
    SNFP,
}

impl Corner {
    /// Tuning range in DLL phase steps.
    pub fn range_steps<F: Real>(self) -> F {
        F::of(match self {
            Corner::FF => 1.0,
            Corner::FNSP => 1.5,
            Corner::TT => 2.0,
            Corner::SNFP => 2.3,
            Corner::SS => 2.6,
        })
    }

    pub fn parse(s: &str) -> Option<Corner> {
        Some(match s.to_ascii_uppercase().as_str() {
            "SS" => Corner::SS,
            "TT" => Corner::TT,
            "FF" => Corner::FF,
            "FNSP" => Corner::FNSP,
            "SNFP" => Corner::SNFP,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Corner::SS => "SS",
            Corner::TT => "TT",
            Corner::FF => "FF",
            Corner::FNSP => "FNSP",
            Corner::SNFP => "SNFP",
        }
    }
}

/// Normalized transfer shape from `[0, 1]` onto `[0, 1]`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum VcdlShape<F> {
    Linear,
    /// `tanh` S-curve; larger `steepness` saturates harder at the ends.
    Saturating {
        steepness: F,
    },
}

impl<F: Real> VcdlShape<F> {
    pub fn eval(&self, x: F) -> F {
        match *self {
            VcdlShape::Linear => x,
            VcdlShape::Saturating { steepness } => {
                let half = F::of(0.5);
                half + (steepness * (x - half)).tanh() / (F::of(2.0) * (steepness * half).tanh())
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct VcdlCurve<F> {
    pub d_min: SimTime,
    /// One DLL phase step, `T / N`.
    pub phase_step: SimTime,
    pub corner: Corner,
    /// Overrides the corner's range when set, in phase steps.
    pub range_steps: Option<F>,
    pub shape: VcdlShape<F>,
    pub v_low: Voltage<F>,
    pub v_high: Voltage<F>,
}

impl<F: Real> VcdlCurve<F> {
    pub fn validate(&self) -> Result<(), FineLoopError> {
        if !(self.v_low.0 >= F::zero() && self.v_low.0 < self.v_high.0) {
            return Err(FineLoopError::BadWindow);
        }
        if self.phase_step <= SimTime::ZERO {
            return Err(FineLoopError::NonPositive("phase_step"));
        }
        Ok(())
    }

    pub fn steps(&self) -> F {
        self.range_steps.unwrap_or_else(|| self.corner.range_steps())
    }

    /// Full tuning range as a duration.
    pub fn range(&self) -> SimTime {
        self.phase_step.scale(self.steps())
    }

    pub fn max_delay(&self) -> SimTime {
        self.d_min + self.range()
    }
}

/// `d_min + range * shape(v_c)` with `v_c` clamped to `[v_low, v_high]`.
pub fn vcdl_delay<F: Real>(v_c: Voltage<F>, curve: &VcdlCurve<F>) -> SimTime {
    let span = curve.v_high.0 - curve.v_low.0;
    let x = ((v_c.0 - curve.v_low.0) / span).max(F::zero()).min(F::one());
    let range: F = curve.phase_step.as_fs::<F>() * curve.steps();
    curve.d_min + SimTime::from_fs(range * curve.shape.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> PumpConfig<f64> {
        PumpConfig::default()
    }

    fn mid(cfg: &PumpConfig<f64>) -> FineLoopState {
        FineLoopState::at_voltage(Voltage(0.6), cfg)
    }

    #[test]
    fn weak_up_for_one_ns_is_five_millivolts() {
        let c = cfg();
        let s0 = mid(&c);
        let s1 = pump_integrate(s0, PumpDrive { up: true, ..Default::default() }, SimTime::ns(1), &c).unwrap();
        let dv = s1.v_c(&c).0 - s0.v_c(&c).0;
        assert!((dv - 5e-3).abs() < 1e-12, "{dv}");
    }

    #[test]
    fn balanced_pump_holds() {
        let c = cfg();
        let s0 = mid(&c);
        let drive = PumpDrive { up: true, dn: true, ..Default::default() };
        assert_eq!(pump_integrate(s0, drive, SimTime::ns(50), &c).unwrap().charge, s0.charge);
    }

    #[test]
    fn strong_down_gates_weak_up() {
        let c = cfg();
        let s0 = mid(&c);
        let drive = PumpDrive { up: true, dn_strong: true, ..Default::default() };
        let s1 = pump_integrate(s0, drive, SimTime::ns(1), &c).unwrap();
        let dv = s1.v_c(&c).0 - s0.v_c(&c).0;
        assert!((dv + 80e-3).abs() < 1e-12, "{dv}");
        assert!(s1.weak_gated_off);
    }

    #[test]
    fn conflicting_strong_rejected() {
        let c = cfg();
        let drive = PumpDrive { up_strong: true, dn_strong: true, ..Default::default() };
        assert_eq!(pump_integrate(mid(&c), drive, SimTime::ns(1), &c), Err(FineLoopError::ConflictingStrong));
    }

    #[test]
    fn clamps_at_rails() {
        let c = cfg();
        let up = PumpDrive { up_strong: true, ..Default::default() };
        let s = pump_integrate(mid(&c), up, SimTime::us(1), &c).unwrap();
        assert_eq!(s.v_c(&c), Voltage(1.2));
        let dn = PumpDrive { dn_strong: true, ..Default::default() };
        let s = pump_integrate(s, dn, SimTime::us(1), &c).unwrap();
        assert_eq!(s.v_c(&c), Voltage(0.0));
    }

    #[test]
    fn crossing_time() {
        assert_eq!(time_to_charge(0, 10, 3), Some(SimTime(4)));
        assert_eq!(time_to_charge(10, 0, -5), Some(SimTime(2)));
        assert_eq!(time_to_charge(0, 10, -3), None);
        assert_eq!(time_to_charge(0, 10, 0), None);
        assert_eq!(time_to_charge(7, 7, 0), Some(SimTime::ZERO));
    }

    fn curve(corner: Corner) -> VcdlCurve<f64> {
        VcdlCurve {
            d_min: SimTime(76_923),
            phase_step: SimTime(76_923),
            corner,
            range_steps: None,
            shape: VcdlShape::Linear,
            v_low: Voltage(0.3),
            v_high: Voltage(0.9),
        }
    }

    #[test]
    fn vcdl_end_points() {
        let c = curve(Corner::TT);
        assert_eq!(vcdl_delay(Voltage(0.3), &c), c.d_min);
        assert_eq!(vcdl_delay(Voltage(0.0), &c), c.d_min);
        assert_eq!(vcdl_delay(Voltage(0.9), &c), c.d_min + SimTime(2 * 76_923));
        assert_eq!(vcdl_delay(Voltage(0.6), &c), c.d_min + SimTime(76_923));
        assert_eq!(vcdl_delay(Voltage(1.2), &c), c.d_min + SimTime(2 * 76_923));
    }

    #[test]
    fn fastest_corner_spans_one_step() {
        let c = curve(Corner::FF);
        assert_eq!(c.range(), c.phase_step);
        for corner in [Corner::SS, Corner::TT, Corner::FNSP, Corner::SNFP] {
            assert!(curve(corner).range() >= c.phase_step);
        }
    }

    #[test]
    fn saturating_shape_fixes_ends_and_middle() {
        let s = VcdlShape::Saturating { steepness: 3.0f64 };
        assert!(s.eval(0.0).abs() < 1e-12);
        assert!((s.eval(1.0) - 1.0).abs() < 1e-12);
        assert!((s.eval(0.5) - 0.5).abs() < 1e-12);
    }
}
