// SPDX-License-Identifier: Apache-2.0
//! Multiphase DLL, switch matrix and the sampling clock φ_d.

use thiserror::Error;

use crate::coarse::RingCounter;
use crate::fine::{vcdl_delay, VcdlCurve};
use crate::jitter::{ClockJitter, EdgeStream, JitterError, Tracking};
use crate::num::Real;
use crate::time::SimTime;
use crate::units::Voltage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DllError {
    #[error("phase index {index} out of range for {n_phases} phases")]
    PhaseOutOfRange { index: u32, n_phases: u32 },
    #[error("DLL needs at least 2 phases, got {0}")]
    TooFewPhases(u32),
    #[error("intermediate phase needs an even phase count, got {0}")]
    OddPhaseCount(u32),
    #[error("per-phase skew list has {got} entries, expected {expected}")]
    SkewLength { got: usize, expected: usize },
    #[error(transparent)]
    Jitter(#[from] JitterError),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum DllMode<F> {
    Ideal,
    /// Output phases follow the reference modulation through a first-order
    /// low-pass with this corner.
    Tracking {
        bandwidth_hz: F,
    },
}

#[derive(Clone, Debug)]
pub struct DllModel<F> {
    n_phases: u32,
    mode: DllMode<F>,
    period: SimTime,
    skew: Vec<SimTime>,
    reference: EdgeStream<F>,
}

impl<F: Real> DllModel<F> {
    /// `rx_sources` modulate the reference clock φ₀.
    pub fn new(
        n_phases: u32,
        period: SimTime,
        mode: DllMode<F>,
        rx_sources: Vec<ClockJitter<F>>,
    ) -> Result<Self, DllError> {
        if n_phases < 2 {
            return Err(DllError::TooFewPhases(n_phases));
        }
        let tracking = match mode {
            DllMode::Ideal => Tracking::Direct,
            DllMode::Tracking { bandwidth_hz } => Tracking::LowPass { bandwidth_hz },
        };
        let reference = EdgeStream::new(period, SimTime::ZERO, rx_sources, tracking);
        Ok(DllModel { n_phases, mode, period, skew: vec![SimTime::ZERO; n_phases as usize], reference })
    }

    pub fn ideal(n_phases: u32, period: SimTime) -> Result<Self, DllError> {
        Self::new(n_phases, period, DllMode::Ideal, Vec::new())
    }

    /// Static per-phase delay errors, for robustness studies.
    pub fn with_skew(mut self, skew: Vec<SimTime>) -> Result<Self, DllError> {
        if skew.len() != self.n_phases as usize {
            return Err(DllError::SkewLength { got: skew.len(), expected: self.n_phases as usize });
        }
        self.skew = skew;
        Ok(self)
    }

    pub fn n_phases(&self) -> u32 {
        self.n_phases
    }

    pub fn mode(&self) -> DllMode<F> {
        self.mode
    }

    pub fn period(&self) -> SimTime {
        self.period
    }

    /// Nominal `i·T/N` plus any static skew.
    pub fn phase_offset(&self, i: u32) -> Result<SimTime, DllError> {
        self.check(i)?;
        let n = self.n_phases as i64;
        let nominal = (self.period.ticks() * 2 * i as i64 + n) / (2 * n);
        Ok(SimTime(nominal) + self.skew[i as usize])
    }

    fn check(&self, i: u32) -> Result<(), DllError> {
        if i < self.n_phases {
            Ok(())
        } else {
            Err(DllError::PhaseOutOfRange { index: i, n_phases: self.n_phases })
        }
    }

    /// Rising edge `k` of phase `i`.
    pub fn edge(&mut self, i: u32, k: usize) -> Result<SimTime, DllError> {
        let off = self.phase_offset(i)?;
        Ok(self.reference.edge(k)? + off)
    }

    /// First rising edge of phase `i` at or after `t`, with an extra fixed
    /// delay added to the phase.
    pub fn first_edge_at_or_after(&mut self, i: u32, extra: SimTime, t: SimTime) -> Result<(usize, SimTime), DllError> {
        let off = self.phase_offset(i)? + extra;
        let (k, e) = self.reference.first_at_or_after(t - off)?;
        Ok((k, e + off))
    }
}

pub fn dll_edge<F: Real>(i: u32, k: usize, model: &mut DllModel<F>) -> Result<SimTime, DllError> {
    model.edge(i, k)
}

/// Switch-matrix state: which DLL phase feeds the VCDL.
///
/// Ring index `j` selects phase `(N - j) mod N`, so each down count of the
/// ring moves φ_d one step later.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct PhaseSelect {
    pub n: u32,
    pub n_phases: u32,
}

impl PhaseSelect {
    pub fn from_ring(r: &RingCounter) -> Self {
        let n_phases = r.width();
        PhaseSelect { n: (n_phases - r.hot_index()) % n_phases, n_phases }
    }

    /// Ring hot index that selects DLL phase `n`.
    pub fn ring_index_for(n: u32, n_phases: u32) -> u32 {
        (n_phases - n % n_phases) % n_phases
    }
}

/// DLL phase clocking the intermediate retiming stage when φ_n drives φ_d.
pub fn intermediate_phase(n: u32, n_phases: u32) -> Result<u32, DllError> {
    if !n_phases.is_multiple_of(2) {
        return Err(DllError::OddPhaseCount(n_phases));
    }
    if n >= n_phases {
        return Err(DllError::PhaseOutOfRange { index: n, n_phases });
    }
    let half = n_phases / 2;
    Ok(if n + 2 > half { (n + 2 - half) % n_phases } else { 0 })
}

/// Rising edge `k` of φ_d.
pub fn sampling_clock_edge<F: Real>(
    k: usize,
    sel: PhaseSelect,
    v_c: Voltage<F>,
    curve: &VcdlCurve<F>,
    dll: &mut DllModel<F>,
) -> Result<SimTime, DllError> {
    Ok(dll.edge(sel.n, k)? + vcdl_delay(v_c, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fine::{Corner, VcdlShape};
    use crate::jitter::JitterSpec;
    use crate::rng::{SimRng, Stream};

    const T: SimTime = SimTime(769_231);

    #[test]
    fn phase_offsets() {
        let mut d = DllModel::<f64>::ideal(10, T).unwrap();
        assert_eq!(dll_edge(0, 3, &mut d).unwrap(), T * 3);
        assert_eq!(dll_edge(5, 0, &mut d).unwrap(), T.scale(0.5));
        assert!(dll_edge(10, 0, &mut d).is_err());
    }

    #[test]
    fn skew_is_added() {
        let mut d = DllModel::<f64>::ideal(4, SimTime::ps(400))
            .unwrap()
            .with_skew(vec![SimTime::ZERO, SimTime::ps(3), SimTime::ZERO, SimTime::ZERO])
            .unwrap();
        assert_eq!(d.edge(1, 0).unwrap(), SimTime::ps(103));
    }

    #[test]
    fn tracking_passes_slow_modulation() {
        let spec = JitterSpec::sinusoidal(0.5f64, 1e6, 0.0);
        let src = ClockJitter::new(spec, SimRng::for_stream(1, Stream::RxJitter));
        let mut d = DllModel::new(10, T, DllMode::Tracking { bandwidth_hz: 20e6 }, vec![src]).unwrap();
        // peak of the output modulation over one 1 MHz cycle
        let cycle = (1e-6 / 769_231e-15) as usize + 2;
        let peak = (0..cycle).map(|k| (d.edge(0, k).unwrap() - T * k as i64).ticks().abs()).max().unwrap();
        let input_peak = 0.5 * 769_231.0;
        assert!(peak as f64 >= 0.998 * input_peak - 1.0, "{peak}");
        assert!(1.0 / (1.0f64 + (1.0f64 / 20.0).powi(2)).sqrt() >= 0.998);
    }

    #[test]
    fn first_edge_search() {
        let mut d = DllModel::<f64>::ideal(10, T).unwrap();
        let (k, e) = d.first_edge_at_or_after(3, SimTime(100), T * 2).unwrap();
        assert_eq!((k, e), (2, T * 2 + SimTime(230_769 + 100)));
    }

    #[test]
    fn ring_to_phase_mapping() {
        let r = RingCounter::preset(10).unwrap();
        assert_eq!(PhaseSelect::from_ring(&r).n, 0);
        let r = RingCounter::with_hot(1, 10).unwrap();
        assert_eq!(PhaseSelect::from_ring(&r).n, 9);
        for n in 0..10 {
            let j = PhaseSelect::ring_index_for(n, 10);
            assert_eq!(PhaseSelect::from_ring(&RingCounter::with_hot(j, 10).unwrap()).n, n);
        }
    }

    #[test]
    fn intermediate_phase_examples() {
        assert_eq!(intermediate_phase(3, 8).unwrap(), 1);
        assert_eq!(intermediate_phase(0, 8).unwrap(), 0);
        assert_eq!(intermediate_phase(7, 10).unwrap(), 4);
        assert!(intermediate_phase(1, 9).is_err());
    }

    #[test]
    fn intermediate_phase_offset_from_inverted_reference() {
        // Distance in steps from φ_{N/2} (the complement of φ₀) is |n + 2 - N|.
        for n_phases in [8u32, 10, 16] {
            for n in 0..n_phases {
                if n + 2 > n_phases / 2 {
                    let i = intermediate_phase(n, n_phases).unwrap() as i32;
                    assert_eq!((i - n_phases as i32 / 2).abs(), (n as i32 + 2 - n_phases as i32).abs());
                }
            }
        }
    }

    #[test]
    fn sampling_edge_examples() {
        let step = SimTime(76_923);
        let curve = VcdlCurve {
            d_min: step,
            phase_step: step,
            corner: Corner::TT,
            range_steps: None,
            shape: VcdlShape::Linear,
            v_low: Voltage(0.3f64),
            v_high: Voltage(0.9),
        };
        let mut d = DllModel::<f64>::ideal(10, T).unwrap();
        let sel0 = PhaseSelect { n: 0, n_phases: 10 };
        assert_eq!(sampling_clock_edge(0, sel0, Voltage(0.3), &curve, &mut d).unwrap(), step);
        let sel3 = PhaseSelect { n: 3, n_phases: 10 };
        let got = sampling_clock_edge(0, sel3, Voltage(0.6), &curve, &mut d).unwrap();
        // 3T/10 + d_min + T/10
        assert_eq!(got, SimTime(230_769) + step + step);
        let later = sampling_clock_edge(0, sel3, Voltage(0.61), &curve, &mut d).unwrap();
        assert!(later > got);
    }
}
