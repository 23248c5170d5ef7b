// SPDX-License-Identifier: Apache-2.0
//! Transmit pattern and received low-swing waveform.

use thiserror::Error;

use crate::num::Real;
use crate::time::SimTime;
use crate::units::Voltage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("PRBS-15 register must be a nonzero 15-bit value, got {0:#x}")]
    BadPrbsState(u16),
    #[error("alpha must lie in [0, 1), got {0}")]
    BadAlpha(f64),
    #[error("transition time {transition} must be shorter than the bit period {period}")]
    SlowTransition { transition: SimTime, period: SimTime },
    #[error("bit period must be positive")]
    BadPeriod,
    #[error("swing must be positive")]
    BadSwing,
}

/// Fibonacci LFSR for x^15 + x^14 + 1.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prbs15State(u16);

impl Prbs15State {
    pub const PERIOD: usize = (1 << 15) - 1;

    pub fn new(lfsr: u16) -> Result<Self, LinkError> {
        if lfsr == 0 || lfsr > 0x7FFF {
            return Err(LinkError::BadPrbsState(lfsr));
        }
        Ok(Prbs15State(lfsr))
    }

    pub fn lfsr(self) -> u16 {
        self.0
    }
}

impl Default for Prbs15State {
    fn default() -> Self {
        Prbs15State(0x7FFF)
    }
}

/// One LFSR step: returns the MSB before the shift and the next state.
pub fn prbs15_next(state: Prbs15State) -> (bool, Prbs15State) {
    let s = state.0;
    let out = (s >> 14) & 1;
    let fb = ((s >> 14) ^ (s >> 13)) & 1;
    (out == 1, Prbs15State(((s << 1) | fb) & 0x7FFF))
}

/// Source of transmitted bits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DataPattern {
    Prbs15(Prbs15State),
    /// 1010...
    Alternating,
    Constant(bool),
}

impl DataPattern {
    pub fn generate(&self, count: usize) -> Vec<bool> {
        match *self {
            DataPattern::Prbs15(mut s) => (0..count)
                .map(|_| {
                    let (b, next) = prbs15_next(s);
                    s = next;
                    b
                })
                .collect(),
            DataPattern::Alternating => (0..count).map(|k| k % 2 == 0).collect(),
            DataPattern::Constant(b) => vec![b; count],
        }
    }
}

/// Repeaterless channel: fixed delay `(n + alpha) T` and a linear edge ramp.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ChannelConfig<F> {
    pub n: u32,
    pub alpha: F,
    pub bit_period: SimTime,
    pub transition_time: SimTime,
    /// Differential amplitude; levels are `+-swing/2`.
    pub swing: Voltage<F>,
}

impl<F: Real> ChannelConfig<F> {
    pub fn validate(&self) -> Result<(), LinkError> {
        if self.bit_period <= SimTime::ZERO {
            return Err(LinkError::BadPeriod);
        }
        if !(self.alpha >= F::zero() && self.alpha < F::one()) {
            return Err(LinkError::BadAlpha(self.alpha.as_f64()));
        }
        if self.transition_time >= self.bit_period || self.transition_time < SimTime::ZERO {
            return Err(LinkError::SlowTransition { transition: self.transition_time, period: self.bit_period });
        }
        if !(self.swing.0 > F::zero()) {
            return Err(LinkError::BadSwing);
        }
        Ok(())
    }

    /// `(n + alpha) T` rounded to the nearest tick.
    pub fn delay(&self) -> SimTime {
        self.bit_period * self.n as i64 + self.bit_period.scale(self.alpha)
    }
}

/// The delayed differential waveform at the receiver input.
///
/// Bit `k` occupies `[b_k, b_(k+1))` with `b_k = tx_edge(k) + delay`. Each
/// data change is a linear ramp of width `transition_time` centered on its
/// boundary. Before the first boundary the line idles at bit 0's level and
/// after the last generated bit it holds the last level.
#[derive(Clone, Debug)]
pub struct RxWaveform<F> {
    cfg: ChannelConfig<F>,
    bits: Vec<bool>,
    boundaries: Vec<SimTime>,
}

impl<F: Real> RxWaveform<F> {
    pub fn new(cfg: ChannelConfig<F>, bits: Vec<bool>, tx_edges: &[SimTime]) -> Result<Self, LinkError> {
        cfg.validate()?;
        let delay = cfg.delay();
        let n = bits.len().min(tx_edges.len());
        let boundaries = tx_edges[..n].iter().map(|&t| t + delay).collect();
        let mut bits = bits;
        bits.truncate(n);
        Ok(RxWaveform { cfg, bits, boundaries })
    }

    pub fn config(&self) -> &ChannelConfig<F> {
        &self.cfg
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn boundary(&self, k: usize) -> Option<SimTime> {
        self.boundaries.get(k).copied()
    }

    /// Index of the bit whose interval contains `t`; `None` before bit 0.
    pub fn bit_index_at(&self, t: SimTime) -> Option<usize> {
        let p = self.boundaries.partition_point(|&b| b <= t);
        p.checked_sub(1)
    }

    fn level(&self, k: Option<usize>) -> bool {
        match k {
            Some(k) => self.bits[k],
            None => self.bits.first().copied().unwrap_or(false),
        }
    }

    /// Crossing at boundary `k`, if the data changes there.
    fn crossing(&self, k: usize) -> Option<(SimTime, bool)> {
        if k == 0 || k >= self.bits.len() || self.bits[k] == self.bits[k - 1] {
            None
        } else {
            Some((self.boundaries[k], self.bits[k]))
        }
    }

    fn ramp(&self, t: SimTime, center: SimTime, rising: bool) -> Option<Voltage<F>> {
        let h = self.cfg.transition_time.ticks() / 2;
        let d = (t - center).ticks();
        if d.abs() > h {
            return None;
        }
        let half = self.cfg.swing.0 / F::of(2.0);
        let frac = if h == 0 { F::zero() } else { F::of(d as f64) / F::of(h as f64) };
        let v = half * frac;
        Some(Voltage(if rising { v } else { -v }))
    }

    /// Differential input voltage at `t`.
    pub fn rx_value_at(&self, t: SimTime) -> Voltage<F> {
        let k = self.bit_index_at(t);
        let next = k.map_or(0, |k| k + 1);
        for j in [k, Some(next)].into_iter().flatten() {
            if let Some((c, rising)) = self.crossing(j) {
                if let Some(v) = self.ramp(t, c, rising) {
                    return v;
                }
            }
        }
        let half = self.cfg.swing.0 / F::of(2.0);
        Voltage(if self.level(k) { half } else { -half })
    }

    /// Distance from `t` to the closest zero crossing, if any lies within the
    /// bits adjacent to `t`.
    pub fn nearest_crossing_distance(&self, t: SimTime) -> Option<SimTime> {
        let k = self.bit_index_at(t);
        let next = k.map_or(0, |k| k + 1);
        [k, Some(next)].into_iter().flatten().filter_map(|j| self.crossing(j)).map(|(c, _)| (t - c).abs()).min()
    }
}

/// Convenience wrapper: waveform value for an unjittered transmitter.
pub fn rx_value_at<F: Real>(bits: &[bool], cfg: &ChannelConfig<F>, t: SimTime) -> Result<Voltage<F>, LinkError> {
    let edges: Vec<SimTime> = (0..bits.len() as i64).map(|k| cfg.bit_period * k).collect();
    Ok(RxWaveform::new(*cfg, bits.to_vec(), &edges)?.rx_value_at(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force reference LFSR on an explicit bit array, independent of
    /// the masked-integer implementation.
    fn reference_period_and_ones(seed: u16) -> (usize, usize) {
        let mut reg: Vec<u8> = (0..15).map(|i| ((seed >> (14 - i)) & 1) as u8).collect();
        let start = reg.clone();
        let mut ones = 0;
        for step in 1.. {
            ones += reg[0] as usize;
            let fb = reg[0] ^ reg[1];
            reg.remove(0);
            reg.push(fb);
            if reg == start {
                return (step, ones);
            }
        }
        unreachable!()
    }

    #[test]
    fn full_cycle_and_balance() {
        let (period, ones) = reference_period_and_ones(0x7FFF);
        assert_eq!(period, 32767);
        assert_eq!(ones, 16384);

        let mut s = Prbs15State::new(0x7FFF).unwrap();
        let mut count = 0;
        for step in 1..=Prbs15State::PERIOD {
            let (b, n) = prbs15_next(s);
            count += b as usize;
            s = n;
            if step < Prbs15State::PERIOD {
                assert_ne!(s.lfsr(), 0x7FFF, "early return at {step}");
            }
        }
        assert_eq!(s.lfsr(), 0x7FFF);
        assert_eq!(count, 16384);
        assert_eq!(Prbs15State::PERIOD - count, 16383);
    }

    #[test]
    fn matches_reference_bit_stream() {
        let mut reg: Vec<u8> = vec![1; 15];
        let ours = DataPattern::Prbs15(Prbs15State::default()).generate(200);
        for (i, b) in ours.into_iter().enumerate() {
            assert_eq!(b, reg[0] == 1, "bit {i}");
            let fb = reg[0] ^ reg[1];
            reg.remove(0);
            reg.push(fb);
        }
    }

    #[test]
    fn rejects_zero_state() {
        assert_eq!(Prbs15State::new(0), Err(LinkError::BadPrbsState(0)));
        assert!(Prbs15State::new(0x8000).is_err());
    }

    fn cfg(n: u32, alpha: f64) -> ChannelConfig<f64> {
        ChannelConfig { n, alpha, bit_period: SimTime::ps(400), transition_time: SimTime::ps(80), swing: Voltage(0.2) }
    }

    #[test]
    fn constant_stream_is_flat() {
        let bits = vec![true; 64];
        for t in [0, 1_000, 123_456, 9_999_999] {
            assert_eq!(rx_value_at(&bits, &cfg(1, 0.4), SimTime::fs(t)).unwrap(), Voltage(0.1));
        }
    }

    #[test]
    fn alternating_zero_at_boundary() {
        let bits = DataPattern::Alternating.generate(32);
        let c = cfg(2, 0.3);
        for k in 1..31i64 {
            let b = c.delay() + c.bit_period * k;
            assert_eq!(rx_value_at(&bits, &c, b).unwrap(), Voltage(0.0));
        }
    }

    #[test]
    fn boundary_arithmetic() {
        // 2.3 * 400 ps = 920 ps
        let c = cfg(2, 0.3);
        assert_eq!(c.delay(), SimTime::ps(920));
        let edges: Vec<SimTime> = (0..8).map(|k| SimTime::ps(400 * k)).collect();
        let w = RxWaveform::new(c, vec![true; 8], &edges).unwrap();
        for k in 0..8 {
            assert_eq!(w.boundary(k), Some(SimTime::ps(400 * k as i64 + 920)));
        }
    }

    #[test]
    fn ramp_shape() {
        let bits = vec![false, true, true, false];
        let c = cfg(0, 0.0);
        let w = |t| rx_value_at(&bits, &c, SimTime::ps(t)).unwrap().0;
        assert_eq!(w(400), 0.0);
        assert!((w(420) - 0.05).abs() < 1e-12);
        assert!((w(380) + 0.05).abs() < 1e-12);
        assert_eq!(w(440), 0.1);
        assert_eq!(w(360), -0.1);
        assert!((w(1220) + 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(0, 1.0);
        assert!(c.validate().is_err());
        c.alpha = 0.5;
        c.transition_time = SimTime::ps(400);
        assert!(c.validate().is_err());
    }
}
