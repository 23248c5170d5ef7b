// SPDX-License-Identifier: Apache-2.0
//! Brute-force eye-center reference.
//!
//! Sweeps a fixed sampling phase across one bit period on the jitter-free
//! received waveform and counts margin errors at each phase: a sample is an
//! error if its magnitude is under half the swing or its sign disagrees with
//! the bit being received. The center is the middle of the longest circular
//! run of error-free phases.

use crate::link::{ChannelConfig, LinkError, RxWaveform};
use crate::num::{frac_ui, Real};
use crate::time::SimTime;

#[derive(Clone, Debug, PartialEq)]
pub struct EyeScan<F> {
    /// Phase of bin `i` is `i * resolution` UI after a receiver clock edge.
    pub resolution: F,
    pub errors: Vec<u64>,
}

impl<F: Real> EyeScan<F> {
    /// Center of the widest open region, in UI from the receiver edge.
    pub fn center(&self) -> Option<F> {
        let n = self.errors.len();
        if n == 0 || self.errors.iter().all(|&e| e > 0) {
            return None;
        }
        if self.errors.iter().all(|&e| e == 0) {
            return Some(F::zero());
        }
        let start = self.errors.iter().position(|&e| e > 0).unwrap_or(0);
        let (mut best_len, mut best_start) = (0usize, 0usize);
        let mut run = 0usize;
        for j in 1..=n {
            let i = (start + j) % n;
            if self.errors[i] == 0 {
                run += 1;
                if run > best_len {
                    best_len = run;
                    best_start = (i + n + 1 - run) % n;
                }
            } else {
                run = 0;
            }
        }
        let mid = F::of(best_start as f64) + F::of((best_len - 1) as f64) / F::of(2.0);
        Some(frac_ui(mid * self.resolution))
    }

    /// Width of the widest open region in UI.
    pub fn opening(&self) -> F {
        let n = self.errors.len();
        let mut best = 0;
        let mut run = 0;
        for j in 0..2 * n {
            if self.errors[j % n] == 0 {
                run += 1;
                best = best.max(run.min(n));
            } else {
                run = 0;
            }
        }
        F::of(best as f64) * self.resolution
    }
}

/// Scans `bits` sent over `cfg` with an ideal transmit clock.
pub fn eye_scan<F: Real>(cfg: &ChannelConfig<F>, bits: &[bool], resolution: F) -> Result<EyeScan<F>, LinkError> {
    let t = cfg.bit_period;
    let tx: Vec<SimTime> = (0..bits.len() as i64).map(|k| t * k).collect();
    let wave = RxWaveform::new(*cfg, bits.to_vec(), &tx)?;
    let half = cfg.swing.0 / F::of(2.0);
    let bins = (F::one() / resolution).round_i64().max(1) as usize;
    let first = wave.boundary(1).unwrap_or(SimTime::ZERO);
    let last = wave.boundary(bits.len().saturating_sub(1)).unwrap_or(SimTime::ZERO);
    let mut errors = vec![0u64; bins];
    for (i, e) in errors.iter_mut().enumerate() {
        let off = t.scale(F::of(i as f64) * resolution);
        let mut k = first.div_floor(t);
        loop {
            let ts = t * k + off;
            if ts >= last {
                break;
            }
            if ts >= first {
                let v = wave.rx_value_at(ts).0;
                let bit = wave.bit_index_at(ts).map(|j| bits[j]).unwrap_or(bits[0]);
                if v.abs() < half || (v >= F::zero()) != bit {
                    *e += 1;
                }
            }
            k += 1;
        }
    }
    Ok(EyeScan { resolution, errors })
}

/// Eye center at 0.01 UI resolution over `bits`.
pub fn eye_center<F: Real>(cfg: &ChannelConfig<F>, bits: &[bool]) -> Result<Option<F>, LinkError> {
    Ok(eye_scan(cfg, bits, F::of(0.01))?.center())
}
