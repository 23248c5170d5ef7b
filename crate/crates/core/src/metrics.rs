// SPDX-License-Identifier: Apache-2.0
//! Run results and their on-disk formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::cdt::{CdtStage, CdtViolation};
use crate::num::Real;
use crate::time::SimTime;

/// One row of the coarse-loop status trace, taken on each divided edge.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct CounterRow {
    pub time: SimTime,
    pub hot_index: u32,
    pub enable: bool,
    pub updn: bool,
    pub up_strong: bool,
    pub dn_strong: bool,
}

/// How a run ended, in CLI exit-code order.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    NonConvergence,
    TimingViolation,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::NonConvergence => 2,
            Outcome::TimingViolation => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::NonConvergence => "non-convergence",
            Outcome::TimingViolation => "timing-violation",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics<F> {
    pub period: SimTime,
    pub duration: SimTime,
    pub vc_trace: Vec<(SimTime, F)>,
    pub counter_trace: Vec<CounterRow>,

    pub locked: bool,
    pub lock_time: Option<SimTime>,
    /// Start of the window over which BER, phase error and latency are taken.
    pub measure_start: Option<SimTime>,
    pub final_hot_index: u32,
    pub final_phase: u32,
    pub final_vc: F,
    pub coarse_steps: u64,

    pub eye_center_ui: Option<F>,
    /// Mean sampling phase minus eye center, wrapped to ±0.5 UI.
    pub phase_error_ui: Option<F>,
    pub phase_error_max_ui: Option<F>,

    pub bit_errors: u64,
    pub bits_checked: u64,

    /// Delivery minus channel arrival, in hundredths of a UI.
    pub latency_hist: BTreeMap<i64, u64>,
    pub latency_max_ui: Option<F>,
    pub latency_min_ui: Option<F>,
    /// Delivery minus the sampling instant.
    pub latency_from_sample_max_ui: Option<F>,

    /// (phase bin in hundredths of a UI, value bin in mV) to count.
    pub eye_hist: BTreeMap<(i64, i64), u64>,
    pub violations: Vec<CdtViolation>,
    pub measured_violations: u64,
    pub invariant_violations: u64,

    pub excursions: u64,
    pub max_excursion_cycles: F,
    pub vc_min_measured: Option<F>,
    pub vc_max_measured: Option<F>,
    pub metastable_hits: u64,
    pub events: u64,
}

impl<F: Real> RunMetrics<F> {
    pub fn empty(period: SimTime, duration: SimTime) -> Self {
        RunMetrics {
            period,
            duration,
            vc_trace: Vec::new(),
            counter_trace: Vec::new(),
            locked: false,
            lock_time: None,
            measure_start: None,
            final_hot_index: 0,
            final_phase: 0,
            final_vc: F::zero(),
            coarse_steps: 0,
            eye_center_ui: None,
            phase_error_ui: None,
            phase_error_max_ui: None,
            bit_errors: 0,
            bits_checked: 0,
            latency_hist: BTreeMap::new(),
            latency_max_ui: None,
            latency_min_ui: None,
            latency_from_sample_max_ui: None,
            eye_hist: BTreeMap::new(),
            violations: Vec::new(),
            measured_violations: 0,
            invariant_violations: 0,
            excursions: 0,
            max_excursion_cycles: F::zero(),
            vc_min_measured: None,
            vc_max_measured: None,
            metastable_hits: 0,
            events: 0,
        }
    }

    pub fn outcome(&self) -> Outcome {
        if self.measured_violations > 0 {
            Outcome::TimingViolation
        } else if !self.locked {
            Outcome::NonConvergence
        } else {
            Outcome::Ok
        }
    }

    pub fn ber(&self) -> Option<F> {
        (self.bits_checked > 0).then(|| F::of(self.bit_errors as f64) / F::of(self.bits_checked as f64))
    }

    pub fn vc_peak_to_peak(&self) -> Option<F> {
        Some(self.vc_max_measured? - self.vc_min_measured?)
    }

    /// Range of `v_c` over `[from, to)` in the trace.
    pub fn vc_range(&self, from: SimTime, to: SimTime) -> Option<(F, F)> {
        let mut it = self.vc_trace.iter().filter(|(t, _)| *t >= from && *t < to).map(|&(_, v)| v);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    pub fn vc_trace_csv(&self) -> String {
        let mut s = String::from("time_fs,vc_volts\n");
        for (t, v) in &self.vc_trace {
            let _ = writeln!(s, "{},{:.9}", t.ticks(), v.as_f64());
        }
        s
    }

    pub fn counter_trace_csv(&self) -> String {
        let mut s = String::from("time_fs,hot_index,enable,updn,up_strong,dn_strong\n");
        for r in &self.counter_trace {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.time.ticks(),
                r.hot_index,
                r.enable as u8,
                r.updn as u8,
                r.up_strong as u8,
                r.dn_strong as u8
            );
        }
        s
    }

    pub fn eye_hist_csv(&self) -> String {
        let mut s = String::from("phase_bin_ui,value_volts,count\n");
        for (&(p, v), &c) in &self.eye_hist {
            let _ = writeln!(s, "{:.2},{:.3},{}", p as f64 / 100.0, v as f64 / 1000.0, c);
        }
        s
    }

    pub fn metrics_txt(&self) -> String {
        fn opt<F: Real>(x: Option<F>) -> String {
            x.map_or_else(|| "none".to_string(), |v| format!("{:.6}", v.as_f64()))
        }
        fn opt_t(x: Option<SimTime>) -> String {
            x.map_or_else(|| "none".to_string(), |t| t.ticks().to_string())
        }
        let stage_count = |st| self.violations.iter().filter(|v| v.stage == st).count();
        let mut kv: Vec<(&str, String)> = vec![
            ("outcome", self.outcome().name().to_string()),
            ("period_fs", self.period.ticks().to_string()),
            ("duration_fs", self.duration.ticks().to_string()),
            ("locked", self.locked.to_string()),
            ("lock_time_fs", opt_t(self.lock_time)),
            ("measure_start_fs", opt_t(self.measure_start)),
            ("final_hot_index", self.final_hot_index.to_string()),
            ("final_phase", self.final_phase.to_string()),
            ("final_vc_volts", format!("{:.6}", self.final_vc.as_f64())),
            ("coarse_steps", self.coarse_steps.to_string()),
            ("eye_center_ui", opt(self.eye_center_ui)),
            ("phase_error_ui", opt(self.phase_error_ui)),
            ("phase_error_max_ui", opt(self.phase_error_max_ui)),
            ("bit_errors", self.bit_errors.to_string()),
            ("bits_checked", self.bits_checked.to_string()),
            ("latency_max_ui", opt(self.latency_max_ui)),
            ("latency_min_ui", opt(self.latency_min_ui)),
            ("latency_from_sample_max_ui", opt(self.latency_from_sample_max_ui)),
            ("violations_total", self.violations.len().to_string()),
            ("violations_intermediate", stage_count(CdtStage::Intermediate).to_string()),
            ("violations_receiver", stage_count(CdtStage::Receiver).to_string()),
            ("violations_measured", self.measured_violations.to_string()),
            ("invariant_violations", self.invariant_violations.to_string()),
            ("excursions", self.excursions.to_string()),
            ("max_excursion_cycles", format!("{:.4}", self.max_excursion_cycles.as_f64())),
            ("vc_peak_to_peak_volts", opt(self.vc_peak_to_peak())),
            ("metastable_hits", self.metastable_hits.to_string()),
            ("events", self.events.to_string()),
        ];
        let hist: Vec<String> =
            self.latency_hist.iter().map(|(b, c)| format!("{:.2}:{}", *b as f64 / 100.0, c)).collect();
        let hist = hist.join(" ");
        kv.push(("latency_hist_ui", hist));
        let mut s = String::new();
        for (k, v) in kv {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Writes the four output files into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("vc_trace.csv"), self.vc_trace_csv())?;
        std::fs::write(dir.join("counter_trace.csv"), self.counter_trace_csv())?;
        std::fs::write(dir.join("eye_hist.csv"), self.eye_hist_csv())?;
        std::fs::write(dir.join("metrics.txt"), self.metrics_txt())?;
        Ok(())
    }
}
