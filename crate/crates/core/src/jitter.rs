// SPDX-License-Identifier: Apache-2.0
//! Clock jitter models and jittered edge generation.

use thiserror::Error;

use crate::num::Real;
use crate::rng::SimRng;
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JitterError {
    #[error("jitter amplitude must be non-negative, got {0}")]
    NegativeAmplitude(f64),
    #[error("sinusoidal jitter frequency must be finite and non-negative, got {0}")]
    BadFrequency(f64),
    #[error("worst-case edge excursion {excursion_ui:.3} UI per period exceeds 0.5 UI")]
    ExcursionBound { excursion_ui: f64 },
    #[error("non-monotonic edge sequence at index {index}: {prev} then {next}")]
    NonMonotonic { index: usize, prev: SimTime, next: SimTime },
}

/// One additive jitter term, amplitudes in unit intervals.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum JitterComponent<F> {
    Sinusoidal { amplitude_ui: F, freq_hz: F, phase0: F },
    Gaussian { sigma_ui: F },
}

/// Whether a receiver-side spec also inherits the transmitter's jitter.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum Correlation {
    #[default]
    Independent,
    CorrelatedWithTx,
}

/// Sum of jitter components; an empty list means no jitter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JitterSpec<F> {
    pub components: Vec<JitterComponent<F>>,
    pub correlation: Correlation,
    /// Jitter is zero before this instant; sinusoids start here at `phase0`.
    pub onset: SimTime,
}

impl<F: Real> JitterSpec<F> {
    pub fn none() -> Self {
        JitterSpec { components: Vec::new(), correlation: Correlation::Independent, onset: SimTime::ZERO }
    }

    pub fn sinusoidal(amplitude_ui: F, freq_hz: F, phase0: F) -> Self {
        JitterSpec {
            components: vec![JitterComponent::Sinusoidal { amplitude_ui, freq_hz, phase0 }],
            correlation: Correlation::Independent,
            onset: SimTime::ZERO,
        }
    }

    pub fn gaussian(sigma_ui: F) -> Self {
        JitterSpec {
            components: vec![JitterComponent::Gaussian { sigma_ui }],
            correlation: Correlation::Independent,
            onset: SimTime::ZERO,
        }
    }

    pub fn with(mut self, c: JitterComponent<F>) -> Self {
        self.components.push(c);
        self
    }

    pub fn starting_at(mut self, onset: SimTime) -> Self {
        self.onset = onset;
        self
    }

    fn active(&self, t: SimTime) -> bool {
        t >= self.onset
    }

    pub fn correlated(mut self) -> Self {
        self.correlation = Correlation::CorrelatedWithTx;
        self
    }

    pub fn is_none(&self) -> bool {
        self.components.is_empty()
    }

    pub fn validate(&self) -> Result<(), JitterError> {
        for c in &self.components {
            match *c {
                JitterComponent::Sinusoidal { amplitude_ui, freq_hz, .. } => {
                    if !(amplitude_ui >= F::zero()) {
                        return Err(JitterError::NegativeAmplitude(amplitude_ui.as_f64()));
                    }
                    if !(freq_hz >= F::zero()) || !freq_hz.is_finite() {
                        return Err(JitterError::BadFrequency(freq_hz.as_f64()));
                    }
                }
                JitterComponent::Gaussian { sigma_ui } => {
                    if !(sigma_ui >= F::zero()) {
                        return Err(JitterError::NegativeAmplitude(sigma_ui.as_f64()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest change of the sinusoidal offset between two consecutive edges,
    /// in UI: `sum 2 A |sin(pi f T)|`.
    pub fn sinusoidal_excursion_ui(&self, period: SimTime) -> F {
        let t: F = period.as_secs();
        self.components
            .iter()
            .map(|c| match *c {
                JitterComponent::Sinusoidal { amplitude_ui, freq_hz, .. } => {
                    F::of(2.0) * amplitude_ui * (F::PI() * freq_hz * t).sin().abs()
                }
                JitterComponent::Gaussian { .. } => F::zero(),
            })
            .fold(F::zero(), |a, b| a + b)
    }

    /// Rejects specs whose deterministic part alone can reorder edges.
    pub fn check_excursion(&self, period: SimTime) -> Result<(), JitterError> {
        let e = self.sinusoidal_excursion_ui(period);
        if e >= F::of(0.5) {
            return Err(JitterError::ExcursionBound { excursion_ui: e.as_f64() });
        }
        Ok(())
    }

    fn sinusoid_at(&self, t: SimTime, gain: impl Fn(F) -> (F, F)) -> F {
        if !self.active(t) {
            return F::zero();
        }
        let secs: F = (t - self.onset).as_secs();
        let two_pi = F::TAU();
        self.components
            .iter()
            .map(|c| match *c {
                JitterComponent::Sinusoidal { amplitude_ui, freq_hz, phase0 } => {
                    let (mag, lag) = gain(freq_hz);
                    amplitude_ui * mag * (two_pi * freq_hz * secs + phase0 - lag).sin()
                }
                JitterComponent::Gaussian { .. } => F::zero(),
            })
            .fold(F::zero(), |a, b| a + b)
    }

    fn gaussian_draw(&self, rng: &mut SimRng) -> F {
        let mut sum = F::zero();
        for c in &self.components {
            if let JitterComponent::Gaussian { sigma_ui } = *c {
                // Always consume the draw so the stream layout does not
                // depend on sigma.
                let z: F = rng.normal();
                sum = sum + sigma_ui * z;
            }
        }
        sum
    }
}

/// Jitter offset in UI at time `t`: the sinusoids evaluated at `t` plus one
/// fresh draw per Gaussian component.
pub fn jitter_offset<F: Real>(spec: &JitterSpec<F>, t: SimTime, rng: &mut SimRng) -> F {
    let g = spec.gaussian_draw(rng);
    spec.sinusoid_at(t, |_| (F::one(), F::zero())) + if spec.active(t) { g } else { F::zero() }
}

/// `index*T + static_phase*T + jitter*T`, rounded to the nearest tick. The
/// jitter term is evaluated at the nominal grid time `index*T`.
pub fn edge_time<F: Real>(
    period: SimTime,
    index: i64,
    static_phase: F,
    jitter: &JitterSpec<F>,
    rng: &mut SimRng,
) -> SimTime {
    let nominal = period * index;
    let off = jitter_offset(jitter, nominal, rng);
    nominal + period.scale(static_phase + off)
}

/// First-order low-pass response at `f` for corner `f_bw`: magnitude and
/// phase lag in radians.
pub fn first_order_response<F: Real>(f: F, f_bw: F) -> (F, F) {
    let r = f / f_bw;
    (F::one() / (F::one() + r * r).sqrt(), r.atan())
}

/// Per-edge jitter of one clock source with memoized random draws.
#[derive(Clone, Debug)]
pub struct ClockJitter<F> {
    spec: JitterSpec<F>,
    rng: SimRng,
    draws: Vec<F>,
    filtered: Vec<F>,
}

impl<F: Real> ClockJitter<F> {
    pub fn new(spec: JitterSpec<F>, rng: SimRng) -> Self {
        ClockJitter { spec, rng, draws: Vec::new(), filtered: Vec::new() }
    }

    pub fn spec(&self) -> &JitterSpec<F> {
        &self.spec
    }

    fn draw(&mut self, k: usize, period: SimTime) -> F {
        while self.draws.len() <= k {
            let d = self.spec.gaussian_draw(&mut self.rng);
            self.draws.push(d);
        }
        if self.spec.active(period * k as i64) {
            self.draws[k]
        } else {
            F::zero()
        }
    }

    /// Offset in UI of edge `k` of a clock with period `period`.
    pub fn offset_ui(&mut self, k: usize, period: SimTime) -> F {
        let t = period * k as i64;
        self.spec.sinusoid_at(t, |_| (F::one(), F::zero())) + self.draw(k, period)
    }

    /// Offset after a first-order tracking loop with corner `f_bw`.
    /// Sinusoids use the exact steady-state response; the white part runs
    /// through the matching one-pole recursion, starting settled at zero.
    pub fn tracked_offset_ui(&mut self, k: usize, period: SimTime, f_bw: F) -> F {
        let t = period * k as i64;
        let sin = self.spec.sinusoid_at(t, |f| first_order_response(f, f_bw));
        let ts: F = period.as_secs();
        let beta = F::one() - (-F::TAU() * f_bw * ts).exp();
        while self.filtered.len() <= k {
            let i = self.filtered.len();
            let x = self.draw(i, period);
            let prev = if i == 0 { F::zero() } else { self.filtered[i - 1] };
            self.filtered.push(prev + beta * (x - prev));
        }
        sin + self.filtered[k]
    }
}

/// How an [`EdgeStream`] passes its reference modulation through.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Tracking<F> {
    Direct,
    LowPass { bandwidth_hz: F },
}

/// Lazily generated, memoized sequence of active-edge times.
#[derive(Clone, Debug)]
pub struct EdgeStream<F> {
    period: SimTime,
    static_offset: SimTime,
    sources: Vec<ClockJitter<F>>,
    tracking: Tracking<F>,
    edges: Vec<SimTime>,
}

impl<F: Real> EdgeStream<F> {
    pub fn new(period: SimTime, static_offset: SimTime, sources: Vec<ClockJitter<F>>, tracking: Tracking<F>) -> Self {
        EdgeStream { period, static_offset, sources, tracking, edges: Vec::new() }
    }

    /// Unjittered clock.
    pub fn ideal(period: SimTime, static_offset: SimTime) -> Self {
        Self::new(period, static_offset, Vec::new(), Tracking::Direct)
    }

    pub fn period(&self) -> SimTime {
        self.period
    }

    /// Total modulation of edge `k` in UI.
    pub fn offset_ui(&mut self, k: usize) -> F {
        let period = self.period;
        let tracking = self.tracking;
        self.sources
            .iter_mut()
            .map(|s| match tracking {
                Tracking::Direct => s.offset_ui(k, period),
                Tracking::LowPass { bandwidth_hz } => s.tracked_offset_ui(k, period, bandwidth_hz),
            })
            .fold(F::zero(), |a, b| a + b)
    }

    pub fn edge(&mut self, k: usize) -> Result<SimTime, JitterError> {
        while self.edges.len() <= k {
            let i = self.edges.len();
            let off = self.offset_ui(i);
            let t = self.period * i as i64 + self.static_offset + self.period.scale(off);
            if let Some(&prev) = self.edges.last() {
                if t <= prev {
                    return Err(JitterError::NonMonotonic { index: i, prev, next: t });
                }
            }
            self.edges.push(t);
        }
        Ok(self.edges[k])
    }

    /// Index and time of the first edge at or after `t` (edges start at 0).
    pub fn first_at_or_after(&mut self, t: SimTime) -> Result<(usize, SimTime), JitterError> {
        let est = (t - self.static_offset).div_floor(self.period).max(0) as usize;
        let mut k = est;
        while k > 0 && self.edge(k - 1)? >= t {
            k -= 1;
        }
        while self.edge(k)? < t {
            k += 1;
        }
        Ok((k, self.edge(k)?))
    }

    /// Index of the last edge strictly before `t`, if any.
    pub fn last_before(&mut self, t: SimTime) -> Result<Option<(usize, SimTime)>, JitterError> {
        let (k, _) = self.first_at_or_after(t)?;
        if k == 0 {
            Ok(None)
        } else {
            Ok(Some((k - 1, self.edge(k - 1)?)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_zero_and_peak() {
        let mut rng = SimRng::new(1);
        let spec = JitterSpec::sinusoidal(0.5f64, 1e6, 0.0);
        assert_eq!(jitter_offset(&spec, SimTime::ZERO, &mut rng), 0.0);
        let peak = jitter_offset(&spec, SimTime::ns(250), &mut rng);
        assert!((peak - 0.5).abs() < 1e-12);
    }

    #[test]
    fn onset_delays_everything() {
        let mut rng = SimRng::new(1);
        let spec = JitterSpec::sinusoidal(0.5f64, 1e6, 0.0)
            .with(JitterComponent::Gaussian { sigma_ui: 0.1 })
            .starting_at(SimTime::ns(1000));
        assert_eq!(jitter_offset(&spec, SimTime::ns(999), &mut rng), 0.0);
        // quarter period after the onset, minus the gaussian part
        let sin_only = JitterSpec::sinusoidal(0.5f64, 1e6, 0.0).starting_at(SimTime::ns(1000));
        assert!((jitter_offset(&sin_only, SimTime::ns(1250), &mut rng) - 0.5).abs() < 1e-12);
        let mut c = ClockJitter::new(spec, SimRng::new(3));
        let period = SimTime::ns(1);
        assert_eq!(c.offset_ui(999, period), 0.0);
        assert_ne!(c.offset_ui(1001, period), 0.0);
    }

    #[test]
    fn zero_sigma_is_zero() {
        let mut rng = SimRng::new(9);
        let spec = JitterSpec::gaussian(0.0f64);
        for k in 0..100 {
            assert_eq!(jitter_offset(&spec, SimTime::ps(k), &mut rng), 0.0);
        }
    }

    #[test]
    fn unjittered_grid_and_half_shift() {
        let mut rng = SimRng::new(0);
        let t = SimTime(769_231);
        let none = JitterSpec::<f64>::none();
        assert_eq!(edge_time(t, 2, 0.0, &none, &mut rng), t * 2);
        let t = SimTime::ps(400);
        assert_eq!(edge_time(t, 0, 0.5, &none, &mut rng), SimTime::ps(200));
    }

    #[test]
    fn sinusoidal_edges_match_scalar_formula() {
        // Evaluated independently: k*400 ps + 40 ps * sin(2*pi*50e6*k*400e-12)
        let expect_fs = [
            0.0,
            400_000.0 + 40_000.0 * (0.04 * std::f64::consts::PI).sin(),
            800_000.0 + 40_000.0 * (0.08 * std::f64::consts::PI).sin(),
            1_200_000.0 + 40_000.0 * (0.12 * std::f64::consts::PI).sin(),
        ];
        let spec = JitterSpec::sinusoidal(0.1f64, 50e6, 0.0);
        let mut rng = SimRng::new(0);
        for (k, e) in expect_fs.iter().enumerate() {
            let got = edge_time(SimTime::ps(400), k as i64, 0.0, &spec, &mut rng);
            assert_eq!(got.ticks(), e.round() as i64);
        }
        // k=1: 400 ps + 40 ps * sin(0.04 pi) = 405.0132 ps
        assert_eq!(edge_time(SimTime::ps(400), 1, 0.0, &spec, &mut rng).ticks(), 405_013);
    }

    #[test]
    fn excursion_bound() {
        let t = SimTime(769_231);
        assert!(JitterSpec::sinusoidal(0.4f64, 200e6, 0.0).check_excursion(t).is_ok());
        assert!(JitterSpec::sinusoidal(0.5f64, 400e6, 0.0).check_excursion(t).is_err());
        assert!(JitterSpec::sinusoidal(-0.1f64, 1e6, 0.0).validate().is_err());
    }

    #[test]
    fn tracking_attenuation_matches_first_order_magnitude() {
        let (mag, _) = first_order_response(1e6f64, 20e6);
        assert!(mag >= 0.998);
        assert!((mag - 1.0 / (1.0f64 + 1.0 / 400.0).sqrt()).abs() < 1e-15);

        // Peak of the tracked stream over one full 1 MHz period.
        let period = SimTime::ps(1000);
        let spec = JitterSpec::sinusoidal(0.5f64, 1e6, 0.0);
        let mut s = EdgeStream::new(
            period,
            SimTime::ZERO,
            vec![ClockJitter::new(spec, SimRng::new(1))],
            Tracking::LowPass { bandwidth_hz: 20e6 },
        );
        let peak = (0..1000).map(|k| s.offset_ui(k).abs()).fold(0.0, f64::max);
        assert!(peak >= 0.998 * 0.5 - 1e-6, "{peak}");
    }

    #[test]
    fn correlated_sources_share_offsets() {
        let spec = JitterSpec::sinusoidal(0.3f64, 5e6, 0.1).with(JitterComponent::Gaussian { sigma_ui: 0.01 });
        let t = SimTime::ps(400);
        let mut tx = ClockJitter::new(spec.clone(), SimRng::new(5));
        let mut rx = ClockJitter::new(spec, SimRng::new(5));
        for k in 0..500 {
            assert_eq!(tx.offset_ui(k, t), rx.offset_ui(k, t));
        }
    }

    #[test]
    fn first_at_or_after_finds_edges() {
        let mut s = EdgeStream::<f64>::ideal(SimTime::ps(400), SimTime::ps(100));
        assert_eq!(s.first_at_or_after(SimTime::ZERO).unwrap(), (0, SimTime::ps(100)));
        assert_eq!(s.first_at_or_after(SimTime::ps(100)).unwrap(), (0, SimTime::ps(100)));
        assert_eq!(s.first_at_or_after(SimTime::ps(101)).unwrap(), (1, SimTime::ps(500)));
        assert_eq!(s.last_before(SimTime::ps(500)).unwrap(), Some((0, SimTime::ps(100))));
        assert_eq!(s.last_before(SimTime::ps(50)).unwrap(), None);
    }

    #[test]
    fn gaussian_can_break_monotonicity() {
        let mut s = EdgeStream::new(
            SimTime::ps(400),
            SimTime::ZERO,
            vec![ClockJitter::new(JitterSpec::gaussian(2.0f64), SimRng::new(3))],
            Tracking::Direct,
        );
        let r: Result<Vec<_>, _> = (0..1000).map(|k| s.edge(k)).collect();
        assert!(matches!(r, Err(JitterError::NonMonotonic { .. })));
    }
}
