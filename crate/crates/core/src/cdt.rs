// SPDX-License-Identifier: Apache-2.0
//! Clock-domain transfer from φ_d to φ_Rx through the intermediate stage φ_i.
//!
//! A stage output settles a fixed `T/2 - t_setup` after its clock edge. Each
//! downstream stage samples at its first edge at least `t_setup` after the
//! input settles, and flags a violation if it is still sampling the previous
//! bit when the next one arrives.

use crate::time::SimTime;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CdtConfig {
    pub period: SimTime,
    pub t_setup: SimTime,
    pub hold: SimTime,
}

impl CdtConfig {
    pub fn new(period: SimTime, t_setup: SimTime) -> Self {
        CdtConfig { period, t_setup, hold: SimTime::ZERO }
    }

    /// Clock-to-output settling of every stage.
    pub fn resolve(&self) -> SimTime {
        SimTime(self.period.ticks() / 2) - self.t_setup
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CdtStage {
    Intermediate,
    Receiver,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CdtViolation {
    pub seq: u64,
    pub stage: CdtStage,
    pub sample_time: SimTime,
    pub transition_time: SimTime,
}

/// Timing of one bit through the chain.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CdtTransfer {
    pub seq: u64,
    /// φ_d edge at which the phase detector output register launches the bit.
    pub launch: SimTime,
    pub capture_i: SimTime,
    /// φ_Rx capture; the bit is in the receiver domain from here on.
    pub delivery: SimTime,
}

#[derive(Clone, Debug)]
pub struct CdtChain {
    cfg: CdtConfig,
    seq: u64,
    last: Option<CdtTransfer>,
}

impl CdtChain {
    pub fn new(cfg: CdtConfig) -> Self {
        CdtChain { cfg, seq: 0, last: None }
    }

    pub fn config(&self) -> &CdtConfig {
        &self.cfg
    }

    pub fn reset(&mut self) {
        self.last = None;
    }
}

/// Moves the bit launched at `launch` through both stages.
///
/// `phi_i` and `phi_rx` return the first edge of their clock at or after the
/// given instant.
pub fn cdt_transfer<E>(
    chain: &mut CdtChain,
    launch: SimTime,
    mut phi_i: impl FnMut(SimTime) -> Result<SimTime, E>,
    mut phi_rx: impl FnMut(SimTime) -> Result<SimTime, E>,
) -> Result<(CdtTransfer, Vec<CdtViolation>), E> {
    let cfg = chain.cfg;
    let r = cfg.resolve();
    let seq = chain.seq;
    chain.seq += 1;

    let avail_d = launch + r;
    let capture_i = phi_i(avail_d + cfg.t_setup)?;
    let avail_i = capture_i + r;
    let delivery = phi_rx(avail_i + cfg.t_setup)?;
    let cur = CdtTransfer { seq, launch, capture_i, delivery };

    let mut violations = Vec::new();
    let mut check = |stage, sample: SimTime, transition: SimTime, seq| {
        if sample >= transition - cfg.t_setup && sample < transition + cfg.hold.max(cfg.period) {
            violations.push(CdtViolation { seq, stage, sample_time: sample, transition_time: transition });
        }
    };
    if let Some(prev) = chain.last {
        check(CdtStage::Intermediate, prev.capture_i, avail_d, prev.seq);
        check(CdtStage::Receiver, prev.delivery, avail_i, prev.seq);
    }
    if cfg.hold > cfg.t_setup {
        // hold window after the bit's own arrival
        if capture_i < avail_d + cfg.hold {
            violations.push(CdtViolation {
                seq,
                stage: CdtStage::Intermediate,
                sample_time: capture_i,
                transition_time: avail_d,
            });
        }
        if delivery < avail_i + cfg.hold {
            violations.push(CdtViolation {
                seq,
                stage: CdtStage::Receiver,
                sample_time: delivery,
                transition_time: avail_i,
            });
        }
    }
    chain.last = Some(cur);
    Ok((cur, violations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn grid(period: SimTime, offset: SimTime) -> impl FnMut(SimTime) -> Result<SimTime, Infallible> {
        move |t| {
            let k = (t - offset + period - SimTime(1)).div_floor(period);
            Ok(period * k + offset)
        }
    }

    #[test]
    fn resolve_time() {
        let c = CdtConfig::new(SimTime::ps(1000), SimTime::ps(20));
        assert_eq!(c.resolve(), SimTime::ps(480));
    }

    #[test]
    fn aligned_chain_timing() {
        let t = SimTime::ps(1000);
        let mut chain = CdtChain::new(CdtConfig::new(t, SimTime::ps(20)));
        let (x, v) =
            cdt_transfer(&mut chain, SimTime::ps(2000), grid(t, SimTime::ZERO), grid(t, SimTime::ZERO)).unwrap();
        assert!(v.is_empty());
        // settles at 2480, sampled at 3000; settles 3480, delivered 4000
        assert_eq!((x.capture_i, x.delivery), (SimTime::ps(3000), SimTime::ps(4000)));
    }

    #[test]
    fn late_sample_flags_violation() {
        let t = SimTime::ps(1000);
        let mut chain = CdtChain::new(CdtConfig::new(t, SimTime::ps(20)));
        // φ_i edge 10 ps after the second bit settles: first bit is sampled late
        let phi_i = |x: SimTime| {
            Ok::<_, Infallible>(if x <= SimTime::ps(3490) { SimTime::ps(3490) } else { SimTime::ps(4490) })
        };
        let (_, v) = cdt_transfer(&mut chain, SimTime::ps(2000), phi_i, grid(t, SimTime::ZERO)).unwrap();
        assert!(v.is_empty());
        let (_, v) = cdt_transfer(&mut chain, SimTime::ps(3000), phi_i, grid(t, SimTime::ZERO)).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].stage, CdtStage::Intermediate);
    }

    #[test]
    fn steady_stream_is_clean() {
        let t = SimTime::ps(1000);
        let mut chain = CdtChain::new(CdtConfig::new(t, SimTime::ps(20)));
        for k in 0..50 {
            let launch = t * k + SimTime::ps(370);
            let (_, v) = cdt_transfer(&mut chain, launch, grid(t, SimTime::ps(700)), grid(t, SimTime::ZERO)).unwrap();
            assert!(v.is_empty(), "{k}");
        }
    }
}
