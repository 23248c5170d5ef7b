// SPDX-License-Identifier: Apache-2.0
//! Coarse tuning loop: window comparator, control FSM, one-hot up/down ring
//! counter and the snapshot register.

use thiserror::Error;

use crate::num::Real;
use crate::time::SimTime;
use crate::units::Voltage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoarseError {
    #[error("ring word {word:#x} is not one-hot over {width} bits")]
    NotOneHot { word: u64, width: u32 },
    #[error("ring width must be in 2..=64, got {0}")]
    BadWidth(u32),
    #[error("window thresholds must satisfy v_low < v_high")]
    BadWindow,
    #[error("divider ratio must be positive")]
    BadDivider,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum WindowClass {
    Below,
    Within,
    Above,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WindowComparator<F> {
    pub v_low: Voltage<F>,
    pub v_high: Voltage<F>,
    pub trip_delay: SimTime,
}

impl<F: Real> WindowComparator<F> {
    /// Thresholds at a quarter and three quarters of the supply.
    pub fn for_supply(v_dd: Voltage<F>, trip_delay: SimTime) -> Self {
        WindowComparator { v_low: Voltage(v_dd.0 * F::of(0.25)), v_high: Voltage(v_dd.0 * F::of(0.75)), trip_delay }
    }

    pub fn validate(&self) -> Result<(), CoarseError> {
        if self.v_low.0 < self.v_high.0 && self.trip_delay >= SimTime::ZERO {
            Ok(())
        } else {
            Err(CoarseError::BadWindow)
        }
    }

    pub fn classify(&self, v: Voltage<F>) -> WindowClass {
        if v.0 > self.v_high.0 {
            WindowClass::Above
        } else if v.0 < self.v_low.0 {
            WindowClass::Below
        } else {
            WindowClass::Within
        }
    }

    pub fn midpoint(&self) -> Voltage<F> {
        Voltage((self.v_low.0 + self.v_high.0) / F::of(2.0))
    }

    pub fn width(&self) -> Voltage<F> {
        self.v_high - self.v_low
    }
}

/// Classification of `v_c` sensed at `t_now`, and the instant it becomes
/// visible to the control logic.
pub fn window_classify<F: Real>(v_c: Voltage<F>, w: &WindowComparator<F>, t_now: SimTime) -> (WindowClass, SimTime) {
    (w.classify(v_c), t_now + w.trip_delay)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

/// One-hot ring of `width` flip-flops.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingCounter {
    word: u64,
    width: u32,
}

impl RingCounter {
    /// Preset state, Q₀.
    pub fn preset(width: u32) -> Result<Self, CoarseError> {
        Self::from_word(1, width)
    }

    pub fn from_word(word: u64, width: u32) -> Result<Self, CoarseError> {
        if !(2..=64).contains(&width) {
            return Err(CoarseError::BadWidth(width));
        }
        let r = RingCounter { word, width };
        if r.is_one_hot() {
            Ok(r)
        } else {
            Err(CoarseError::NotOneHot { word, width })
        }
    }

    pub fn with_hot(index: u32, width: u32) -> Result<Self, CoarseError> {
        if index >= width.min(64) {
            return Err(CoarseError::NotOneHot { word: 0, width });
        }
        Self::from_word(1u64 << index, width)
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_one_hot(&self) -> bool {
        self.word.count_ones() == 1 && (self.width == 64 || self.word >> self.width == 0)
    }

    pub fn hot_index(&self) -> u32 {
        self.word.trailing_zeros()
    }
}

/// Shifts the hot bit one position, wrapping at the ends.
pub fn ring_step(r: RingCounter, dir: Direction) -> Result<RingCounter, CoarseError> {
    if !r.is_one_hot() {
        return Err(CoarseError::NotOneHot { word: r.word, width: r.width });
    }
    let i = r.hot_index();
    let j = match dir {
        Direction::Up => (i + 1) % r.width,
        Direction::Down => (i + r.width - 1) % r.width,
    };
    Ok(RingCounter { word: 1u64 << j, width: r.width })
}

/// Control logic clocked by the divided receiver clock.
///
/// `enable` follows the published window class; a strong pulse starts on a
/// divided edge while out of window and lasts at most one divided cycle. The
/// asynchronous reset path ends it early when the comparator reports Within,
/// unless `pump_to_center` keeps it running until the window midpoint.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CoarseFsm {
    pub k: u32,
    pub enable: bool,
    /// UP̄/DN: high while the ring is commanded to count down.
    pub up_dn: bool,
    pub up_strong: bool,
    pub dn_strong: bool,
    pub pump_to_center: bool,
}

impl CoarseFsm {
    pub fn new(k: u32) -> Result<Self, CoarseError> {
        if k == 0 {
            return Err(CoarseError::BadDivider);
        }
        Ok(CoarseFsm { k, enable: false, up_dn: false, up_strong: false, dn_strong: false, pump_to_center: false })
    }

    pub fn strong_active(&self) -> bool {
        self.up_strong || self.dn_strong
    }

    /// Ends a center-seeking strong pulse once `v_c` reaches the midpoint.
    pub fn center_reached(mut self) -> Self {
        self.up_strong = false;
        self.dn_strong = false;
        self
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct FsmOutput {
    /// The ring counter advances on this edge.
    pub ring_enable: bool,
    pub ring_dir: Option<Direction>,
    pub up_strong: bool,
    pub dn_strong: bool,
}

pub fn fsm_step(f: CoarseFsm, class: WindowClass, divided_edge: bool) -> (CoarseFsm, FsmOutput) {
    let mut g = f;
    g.enable = class != WindowClass::Within;
    if divided_edge {
        g.up_strong = false;
        g.dn_strong = false;
    }
    if class == WindowClass::Within && !g.pump_to_center {
        g.up_strong = false;
        g.dn_strong = false;
    }
    let mut out = FsmOutput::default();
    if divided_edge && g.enable {
        let dir = if class == WindowClass::Above { Direction::Down } else { Direction::Up };
        g.up_dn = dir == Direction::Down;
        g.dn_strong = dir == Direction::Down;
        g.up_strong = dir == Direction::Up;
        out.ring_enable = true;
        out.ring_dir = Some(dir);
    }
    out.up_strong = g.up_strong;
    out.dn_strong = g.dn_strong;
    (g, out)
}

/// Saved lock state.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Snapshot {
    pub ring: RingCounter,
    /// Recenter `v_c` on the window midpoint at restore.
    pub restore_vc: bool,
}

pub fn snapshot_save(r: RingCounter, restore_vc: bool) -> Snapshot {
    Snapshot { ring: r, restore_vc }
}

/// Presets the ring counter, and optionally returns the recentered `v_c`.
pub fn snapshot_restore<F: Real>(
    s: &Snapshot,
    w: &WindowComparator<F>,
) -> Result<(RingCounter, Option<Voltage<F>>), CoarseError> {
    let ring = RingCounter::from_word(s.ring.word, s.ring.width)?;
    Ok((ring, s.restore_vc.then(|| w.midpoint())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> WindowComparator<f64> {
        WindowComparator::for_supply(Voltage(1.2), SimTime::ns(6))
    }

    #[test]
    fn classify_examples() {
        let w = window();
        assert_eq!(w.classify(Voltage(0.6)), WindowClass::Within);
        assert_eq!(w.classify(Voltage(0.29)), WindowClass::Below);
        assert_eq!(w.classify(Voltage(0.91)), WindowClass::Above);
        let (c, at) = window_classify(Voltage(0.95), &w, SimTime::ns(100));
        assert_eq!((c, at), (WindowClass::Above, SimTime::ns(106)));
    }

    #[test]
    fn ring_steps_and_wraps() {
        let q0 = RingCounter::preset(10).unwrap();
        assert_eq!(ring_step(q0, Direction::Up).unwrap().hot_index(), 1);
        let q9 = RingCounter::with_hot(9, 10).unwrap();
        assert_eq!(ring_step(q9, Direction::Up).unwrap().hot_index(), 0);
        assert_eq!(ring_step(q0, Direction::Down).unwrap().hot_index(), 9);
    }

    #[test]
    fn ring_cycle_matches_enumeration() {
        // Reference cycle built from plain index arithmetic.
        for dir in [Direction::Up, Direction::Down] {
            let mut r = RingCounter::preset(10).unwrap();
            let mut seen = vec![r.hot_index()];
            for _ in 0..10 {
                r = ring_step(r, dir).unwrap();
                seen.push(r.hot_index());
            }
            let expect: Vec<u32> = (0..=10)
                .map(|s: i32| match dir {
                    Direction::Up => s.rem_euclid(10) as u32,
                    Direction::Down => (-s).rem_euclid(10) as u32,
                })
                .collect();
            assert_eq!(seen, expect);
        }
    }

    #[test]
    fn rejects_bad_words() {
        assert!(RingCounter::from_word(0b11, 10).is_err());
        assert!(RingCounter::from_word(0, 10).is_err());
        assert!(RingCounter::from_word(1 << 10, 10).is_err());
        let bad = RingCounter { word: 0b101, width: 10 };
        assert!(ring_step(bad, Direction::Up).is_err());
    }

    #[test]
    fn fsm_above_counts_down_with_strong_discharge() {
        let f = CoarseFsm::new(16).unwrap();
        let (f, out) = fsm_step(f, WindowClass::Above, true);
        assert!(f.enable && f.up_dn && out.ring_enable && out.dn_strong && !out.up_strong);
        assert_eq!(out.ring_dir, Some(Direction::Down));
        // async reset when the comparator reports Within
        let (f, out) = fsm_step(f, WindowClass::Within, false);
        assert!(!f.enable && !out.dn_strong && !out.ring_enable);
    }

    #[test]
    fn fsm_below_counts_up() {
        let (f, out) = fsm_step(CoarseFsm::new(16).unwrap(), WindowClass::Below, true);
        assert_eq!(out.ring_dir, Some(Direction::Up));
        assert!(out.up_strong && !out.dn_strong && !f.up_dn);
    }

    #[test]
    fn fsm_within_holds() {
        let (f, out) = fsm_step(CoarseFsm::new(16).unwrap(), WindowClass::Within, true);
        assert!(!f.enable && out == FsmOutput::default());
    }

    #[test]
    fn pulse_lasts_one_divided_cycle() {
        let (f, _) = fsm_step(CoarseFsm::new(16).unwrap(), WindowClass::Above, true);
        // still above between edges: pulse continues, no further step
        let (f, out) = fsm_step(f, WindowClass::Above, false);
        assert!(out.dn_strong && !out.ring_enable);
        // the pulse ends on the next divided edge if the window was reached
        let mut g = f;
        g.pump_to_center = true;
        let (_, out) = fsm_step(g, WindowClass::Within, true);
        assert!(!out.dn_strong);
    }

    #[test]
    fn pump_to_center_keeps_pulse_until_midpoint() {
        let mut f = CoarseFsm::new(16).unwrap();
        f.pump_to_center = true;
        let (f, _) = fsm_step(f, WindowClass::Below, true);
        let (f, out) = fsm_step(f, WindowClass::Within, false);
        assert!(out.up_strong && !f.enable);
        assert!(!f.center_reached().strong_active());
    }

    #[test]
    fn snapshot_round_trip() {
        let q7 = RingCounter::with_hot(7, 10).unwrap();
        let s = snapshot_save(q7, false);
        let (r, v) = snapshot_restore(&s, &window()).unwrap();
        assert_eq!((r.hot_index(), v), (7, None));
        let (_, v) = snapshot_restore(&snapshot_save(q7, true), &window()).unwrap();
        assert!((v.unwrap().0 - 0.6).abs() < 1e-12);
        let bad = Snapshot { ring: RingCounter { word: 0b110, width: 10 }, restore_vc: false };
        assert!(snapshot_restore(&bad, &window()).is_err());
    }
}
