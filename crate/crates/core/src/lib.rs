// SPDX-License-Identifier: Apache-2.0
//! Event-driven behavioral model of a DLL-based mesochronous clock
//! synchronizer: link source, Alexander phase detector, fine and coarse
//! phase-tracking loops, delay-locked loop and clock-domain transfer.

// `!(x > 0)` is used on purpose so that NaN parameters fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cdt;
pub mod coarse;
pub mod dll;
pub mod experiments;
pub mod eye;
pub mod fine;
pub mod jitter;
pub mod link;
pub mod metrics;
pub mod num;
pub mod pd;
pub mod rng;
pub mod scenario;
pub mod sched;
pub mod sim;
pub mod time;
pub mod units;

pub use sim::{run, SimError, LOCK_WINDOW_CYCLES};
pub use time::SimTime;

/// Double-precision aliases; the model is generic over [`num::Real`].
pub type Scenario = scenario::Scenario<f64>;
pub type Simulator = sim::Simulator<f64>;
pub type RunMetrics = metrics::RunMetrics<f64>;
pub type Voltage = units::Voltage<f64>;
pub type PumpConfig = fine::PumpConfig<f64>;
pub type VcdlCurve = fine::VcdlCurve<f64>;
pub type ChannelConfig = link::ChannelConfig<f64>;
pub type RxWaveform = link::RxWaveform<f64>;

/// Single-precision aliases.
pub type Scenario32 = scenario::Scenario<f32>;
pub type Simulator32 = sim::Simulator<f32>;
pub type RunMetrics32 = metrics::RunMetrics<f32>;
pub type Voltage32 = units::Voltage<f32>;
pub type PumpConfig32 = fine::PumpConfig<f32>;
pub type VcdlCurve32 = fine::VcdlCurve<f32>;
pub type ChannelConfig32 = link::ChannelConfig<f32>;
pub type RxWaveform32 = link::RxWaveform<f32>;
