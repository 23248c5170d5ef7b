// SPDX-License-Identifier: Apache-2.0
//! Clocked comparators and the Alexander bang-bang phase detector.

use std::collections::VecDeque;

use crate::link::RxWaveform;
use crate::num::Real;
use crate::rng::SimRng;
use crate::time::SimTime;

/// How a comparator resolves a sample taken inside its metastability window.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ResolutionMode {
    /// Fair coin from the simulation's metastability stream.
    #[default]
    Stochastic,
    /// Repeat the previously resolved value.
    DeterministicHold,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MetastabilityModel {
    /// Half-width of the window around a data zero crossing.
    pub time_window_tw: SimTime,
    pub resolution_mode: ResolutionMode,
    /// Sense-amplifier settling time; hidden by the retiming flip-flop.
    pub resolve_delay: SimTime,
}

impl MetastabilityModel {
    pub fn new(time_window_tw: SimTime, resolution_mode: ResolutionMode) -> Self {
        MetastabilityModel { time_window_tw, resolution_mode, resolve_delay: SimTime::ZERO }
    }

    pub fn is_valid(&self, period: SimTime) -> bool {
        self.time_window_tw >= SimTime::ZERO
            && self.resolve_delay >= SimTime::ZERO
            && self.resolve_delay.ticks() * 2 < period.ticks()
    }
}

/// A clocked regenerative comparator with memory of its last decision.
#[derive(Copy, Clone, Debug, Default)]
pub struct Comparator {
    prev: bool,
    metastable_hits: u64,
}

impl Comparator {
    pub fn new(initial: bool) -> Self {
        Comparator { prev: initial, metastable_hits: 0 }
    }

    pub fn last(&self) -> bool {
        self.prev
    }

    /// Number of samples that landed inside the metastability window.
    pub fn metastable_hits(&self) -> u64 {
        self.metastable_hits
    }

    pub fn sample<F: Real>(
        &mut self,
        waveform: &RxWaveform<F>,
        t_sample: SimTime,
        m: &MetastabilityModel,
        rng: &mut SimRng,
    ) -> bool {
        let in_window = waveform.nearest_crossing_distance(t_sample).is_some_and(|d| d <= m.time_window_tw);
        if in_window {
            self.metastable_hits += 1;
        }
        let bit = sample_comparator(waveform, t_sample, m, self.prev, rng);
        self.prev = bit;
        bit
    }
}

/// Sign of the waveform unless a data crossing lies within `tw` of the
/// sampling instant, in which case `m.resolution_mode` decides.
pub fn sample_comparator<F: Real>(
    waveform: &RxWaveform<F>,
    t_sample: SimTime,
    m: &MetastabilityModel,
    previous: bool,
    rng: &mut SimRng,
) -> bool {
    match waveform.nearest_crossing_distance(t_sample) {
        Some(d) if d <= m.time_window_tw => match m.resolution_mode {
            ResolutionMode::Stochastic => rng.coin(),
            ResolutionMode::DeterministicHold => previous,
        },
        _ => waveform.rx_value_at(t_sample).0 >= F::zero(),
    }
}

/// `(UP, DN) = (A ^ B, B ^ C)` for samples in time order.
pub fn alexander_eval(a: bool, b: bool, c: bool) -> (bool, bool) {
    (a ^ b, b ^ c)
}

/// One phase-detector decision and the retimed data bit it belongs to.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct PdDecision {
    /// Clock late relative to the data.
    pub up: bool,
    /// Clock early relative to the data.
    pub dn: bool,
    pub data: bool,
}

/// Alexander detector with its output pipeline.
///
/// Called once per active edge with the boundary sample taken on the previous
/// opposite edge and the fresh mid-eye sample. A is the previous mid-eye
/// sample, B the boundary sample, C the current mid-eye sample. Decisions
/// leave the pipeline two active edges after they are formed (comparator
/// retiming flop plus the output register).
#[derive(Clone, Debug, Default)]
pub struct AlexanderPd {
    a: Option<bool>,
    pipeline: VecDeque<PdDecision>,
}

impl AlexanderPd {
    pub const LATENCY_CYCLES: usize = 2;

    pub fn new() -> Self {
        Self::default()
    }

    /// The decision for the current triple, without pipelining.
    pub fn evaluate(&self, edge_sample: bool, center_sample: bool) -> PdDecision {
        let (up, dn) = match self.a {
            Some(a) => alexander_eval(a, edge_sample, center_sample),
            None => (false, false),
        };
        PdDecision { up, dn, data: center_sample }
    }

    /// Advances one cycle; returns the decision formed two cycles earlier.
    pub fn step(&mut self, edge_sample: bool, center_sample: bool) -> Option<PdDecision> {
        let d = self.evaluate(edge_sample, center_sample);
        self.a = Some(center_sample);
        self.pipeline.push_back(d);
        if self.pipeline.len() > Self::LATENCY_CYCLES {
            self.pipeline.pop_front()
        } else {
            None
        }
    }

    pub fn reset(&mut self) {
        self.a = None;
        self.pipeline.clear();
    }
}
