// SPDX-License-Identifier: Apache-2.0
//! Scenario files: line-oriented `key = value` text with `#` comments.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::cdt::CdtConfig;
use crate::coarse::{RingCounter, Snapshot, WindowComparator};
use crate::dll::DllMode;
use crate::fine::{Corner, PumpConfig, VcdlCurve, VcdlShape};
use crate::jitter::{JitterComponent, JitterSpec};
use crate::link::{ChannelConfig, DataPattern, Prbs15State};
use crate::num::Real;
use crate::pd::{MetastabilityModel, ResolutionMode};
use crate::time::SimTime;
use crate::units::Voltage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownSetting(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Prbs15,
    Alternating,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ShapeKind {
    Linear,
    Tanh,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum DllModeKind {
    Ideal,
    Tracking,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct JitterParams<F> {
    pub sin_amp_ui: F,
    pub sin_freq_mhz: F,
    pub sin_phase_rad: F,
    pub gauss_sigma_ui: F,
}

impl<F: Real> Default for JitterParams<F> {
    fn default() -> Self {
        JitterParams {
            sin_amp_ui: F::zero(),
            sin_freq_mhz: F::zero(),
            sin_phase_rad: F::zero(),
            gauss_sigma_ui: F::zero(),
        }
    }
}

impl<F: Real> JitterParams<F> {
    pub fn spec(&self) -> JitterSpec<F> {
        let mut s = JitterSpec::none();
        if self.sin_amp_ui != F::zero() {
            s = s.with(JitterComponent::Sinusoidal {
                amplitude_ui: self.sin_amp_ui,
                freq_hz: self.sin_freq_mhz * F::of(1e6),
                phase0: self.sin_phase_rad,
            });
        }
        if self.gauss_sigma_ui != F::zero() {
            s = s.with(JitterComponent::Gaussian { sigma_ui: self.gauss_sigma_ui });
        }
        s
    }

    fn is_zero(&self) -> bool {
        self.sin_amp_ui == F::zero() && self.gauss_sigma_ui == F::zero()
    }
}

/// All parameters of one simulation. Units follow the key suffixes.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<F> {
    pub bit_rate_gbps: F,
    pub n: u32,
    pub alpha: F,
    pub transition_ui: F,
    pub swing_mv: F,
    pub pattern: PatternKind,
    pub prbs_seed: u16,

    pub phases: u32,
    pub dll_mode: DllModeKind,
    pub dll_bandwidth_mhz: F,
    pub dll_skew_ps: Vec<F>,

    pub k: u32,
    pub trip_ns: F,
    pub pump_to_center: bool,

    pub i_weak_ua: F,
    pub strong_ratio: F,
    pub c_filter_ff: F,
    pub vdd: F,

    pub corner: Corner,
    pub shape: ShapeKind,
    pub steepness: F,
    pub d_min_ui: F,
    pub range_steps: Option<F>,

    pub tw_ps: F,
    pub pd_mode: ResolutionMode,
    pub stochastic_after_ns: Option<F>,

    pub t_setup_ui: F,
    pub hold_ui: F,

    pub tx_jitter: JitterParams<F>,
    pub rx_jitter: JitterParams<F>,
    pub correlated: bool,
    pub jitter_onset_us: F,

    pub duration_us: F,
    pub seed: u64,
    pub measure_from_us: Option<F>,
    pub initial_vc: Option<F>,

    pub snapshot_hot_index: Option<u32>,
    pub snapshot_restore_vc: bool,
}

impl<F: Real> Default for Scenario<F> {
    fn default() -> Self {
        Self::defaults_130nm()
    }
}

const FILE_130NM: &str = include_str!("../../../scenarios/defaults-130nm.scn");
const FILE_65NM: &str = include_str!("../../../scenarios/defaults-65nm.scn");

fn opt_to_string<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), |x| x.to_string())
}

impl<F: Real> Scenario<F> {
    /// 1.3 Gb/s, 130 nm-like process at 1.2 V.
    pub fn defaults_130nm() -> Self {
        Scenario {
            bit_rate_gbps: F::of(1.3),
            n: 2,
            alpha: F::zero(),
            transition_ui: F::of(0.2),
            swing_mv: F::of(200.0),
            pattern: PatternKind::Prbs15,
            prbs_seed: 0x7FFF,
            phases: 10,
            dll_mode: DllModeKind::Ideal,
            dll_bandwidth_mhz: F::of(50.0),
            dll_skew_ps: Vec::new(),
            k: 16,
            trip_ns: F::of(6.0),
            pump_to_center: false,
            i_weak_ua: F::of(1.0),
            strong_ratio: F::of(16.0),
            c_filter_ff: F::of(200.0),
            vdd: F::of(1.2),
            corner: Corner::TT,
            shape: ShapeKind::Linear,
            steepness: F::of(3.0),
            d_min_ui: F::of(0.1),
            range_steps: None,
            tw_ps: F::of(10.0),
            pd_mode: ResolutionMode::Stochastic,
            stochastic_after_ns: None,
            t_setup_ui: F::of(0.02),
            hold_ui: F::zero(),
            tx_jitter: JitterParams::default(),
            rx_jitter: JitterParams::default(),
            correlated: false,
            jitter_onset_us: F::zero(),
            duration_us: F::of(6.0),
            seed: 1,
            measure_from_us: None,
            initial_vc: None,
            snapshot_hot_index: None,
            snapshot_restore_vc: true,
        }
    }

    /// 4 Gb/s, 65 nm-like process at 1.0 V.
    pub fn defaults_65nm() -> Self {
        Scenario { bit_rate_gbps: F::of(4.0), k: 32, vdd: F::of(1.0), ..Self::defaults_130nm() }
    }

    /// The shipped `defaults-130nm.scn`, parsed.
    pub fn file_130nm() -> Result<Self, ScenarioError> {
        Self::parse(FILE_130NM)
    }

    pub fn file_65nm() -> Result<Self, ScenarioError> {
        Self::parse(FILE_65NM)
    }

    /// Parses scenario text on top of the 130 nm defaults.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut s = Self::defaults_130nm();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ScenarioError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ScenarioError::Syntax { line: i + 1 });
            }
            s.set(k, v).map_err(|e| match e {
                ScenarioError::UnknownSetting(key) => ScenarioError::UnknownKey { line: i + 1, key },
                e => e,
            })?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    /// Sets one key; the scenario is not revalidated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ScenarioError> {
        let bad = || ScenarioError::BadValue { key: key.to_string(), value: value.to_string() };
        let real =
            || value.parse::<F>().map_err(|_| bad()).and_then(|x| if x.is_finite() { Ok(x) } else { Err(bad()) });
        let opt_real = || if value == "none" { Ok(None) } else { real().map(Some) };
        let uint = || value.parse::<u32>().map_err(|_| bad());
        let boolean = || match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "link.bit_rate_gbps" => self.bit_rate_gbps = real()?,
            "link.n" => self.n = uint()?,
            "link.alpha" => self.alpha = real()?,
            "link.transition_ui" => self.transition_ui = real()?,
            "link.swing_mv" => self.swing_mv = real()?,
            "link.pattern" => {
                self.pattern = match value {
                    "prbs15" => PatternKind::Prbs15,
                    "alternating" => PatternKind::Alternating,
                    _ => return Err(bad()),
                }
            }
            "link.prbs_seed" => {
                let v = match value.strip_prefix("0x") {
                    Some(h) => u16::from_str_radix(h, 16),
                    None => value.parse::<u16>(),
                };
                self.prbs_seed = v.map_err(|_| bad())?;
            }
            "dll.phases" => self.phases = uint()?,
            "dll.mode" => {
                self.dll_mode = match value {
                    "ideal" => DllModeKind::Ideal,
                    "tracking" => DllModeKind::Tracking,
                    _ => return Err(bad()),
                }
            }
            "dll.bandwidth_mhz" => self.dll_bandwidth_mhz = real()?,
            "dll.skew_ps" => {
                self.dll_skew_ps = if value.is_empty() || value == "none" {
                    Vec::new()
                } else {
                    value.split(',').map(|x| x.trim().parse::<F>().map_err(|_| bad())).collect::<Result<_, _>>()?
                }
            }
            "coarse.k" => self.k = uint()?,
            "coarse.trip_ns" => self.trip_ns = real()?,
            "coarse.pump_to_center" => self.pump_to_center = boolean()?,
            "pump.i_weak_uA" => self.i_weak_ua = real()?,
            "pump.strong_ratio" => self.strong_ratio = real()?,
            "pump.c_filter_fF" => self.c_filter_ff = real()?,
            "pump.vdd" => self.vdd = real()?,
            "vcdl.corner" => self.corner = Corner::parse(value).ok_or_else(bad)?,
            "vcdl.shape" => {
                self.shape = match value {
                    "linear" => ShapeKind::Linear,
                    "tanh" => ShapeKind::Tanh,
                    _ => return Err(bad()),
                }
            }
            "vcdl.steepness" => self.steepness = real()?,
            "vcdl.d_min_ui" => self.d_min_ui = real()?,
            "vcdl.range_steps" => self.range_steps = opt_real()?,
            "pd.tw_ps" => self.tw_ps = real()?,
            "pd.mode" => {
                self.pd_mode = match value {
                    "stochastic" => ResolutionMode::Stochastic,
                    "hold" => ResolutionMode::DeterministicHold,
                    _ => return Err(bad()),
                }
            }
            "pd.stochastic_after_ns" => self.stochastic_after_ns = opt_real()?,
            "cdt.t_setup_ui" => self.t_setup_ui = real()?,
            "cdt.hold_ui" => self.hold_ui = real()?,
            "jitter.correlated" => self.correlated = boolean()?,
            "jitter.onset_us" => self.jitter_onset_us = real()?,
            "run.duration_us" => self.duration_us = real()?,
            "run.seed" => self.seed = value.parse().map_err(|_| bad())?,
            "run.measure_from_us" => self.measure_from_us = opt_real()?,
            "run.initial_vc" => self.initial_vc = opt_real()?,
            "snapshot.hot_index" => self.snapshot_hot_index = if value == "none" { None } else { Some(uint()?) },
            "snapshot.restore_vc" => self.snapshot_restore_vc = boolean()?,
            _ => {
                let (side, field) = match key.strip_prefix("jitter.tx.") {
                    Some(f) => (&mut self.tx_jitter, f),
                    None => match key.strip_prefix("jitter.rx.") {
                        Some(f) => (&mut self.rx_jitter, f),
                        None => return Err(ScenarioError::UnknownSetting(key.to_string())),
                    },
                };
                let x = real()?;
                match field {
                    "sin_amp_ui" => side.sin_amp_ui = x,
                    "sin_freq_mhz" => side.sin_freq_mhz = x,
                    "sin_phase_rad" => side.sin_phase_rad = x,
                    "gauss_sigma_ui" => side.gauss_sigma_ui = x,
                    _ => return Err(ScenarioError::UnknownSetting(key.to_string())),
                }
            }
        }
        Ok(())
    }

    /// Applies `key=value` overrides and revalidates.
    pub fn with_overrides<'a>(mut self, sets: impl IntoIterator<Item = &'a str>) -> Result<Self, ScenarioError> {
        for kv in sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ScenarioError::BadValue { key: kv.to_string(), value: String::new() })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    /// Canonical text form; parses back to an equal scenario.
    pub fn to_text(&self) -> String {
        let pattern = match self.pattern {
            PatternKind::Prbs15 => "prbs15",
            PatternKind::Alternating => "alternating",
        };
        let skew: Vec<String> = self.dll_skew_ps.iter().map(|x| x.to_string()).collect();
        let kv: Vec<(&str, String)> = vec![
            ("link.bit_rate_gbps", self.bit_rate_gbps.to_string()),
            ("link.n", self.n.to_string()),
            ("link.alpha", self.alpha.to_string()),
            ("link.transition_ui", self.transition_ui.to_string()),
            ("link.swing_mv", self.swing_mv.to_string()),
            ("link.pattern", pattern.to_string()),
            ("link.prbs_seed", format!("0x{:04X}", self.prbs_seed)),
            ("dll.phases", self.phases.to_string()),
            ("dll.mode", if self.dll_mode == DllModeKind::Ideal { "ideal" } else { "tracking" }.to_string()),
            ("dll.bandwidth_mhz", self.dll_bandwidth_mhz.to_string()),
            ("dll.skew_ps", if skew.is_empty() { "none".to_string() } else { skew.join(",") }),
            ("coarse.k", self.k.to_string()),
            ("coarse.trip_ns", self.trip_ns.to_string()),
            ("coarse.pump_to_center", self.pump_to_center.to_string()),
            ("pump.i_weak_uA", self.i_weak_ua.to_string()),
            ("pump.strong_ratio", self.strong_ratio.to_string()),
            ("pump.c_filter_fF", self.c_filter_ff.to_string()),
            ("pump.vdd", self.vdd.to_string()),
            ("vcdl.corner", self.corner.name().to_string()),
            ("vcdl.shape", if self.shape == ShapeKind::Linear { "linear" } else { "tanh" }.to_string()),
            ("vcdl.steepness", self.steepness.to_string()),
            ("vcdl.d_min_ui", self.d_min_ui.to_string()),
            ("vcdl.range_steps", opt_to_string(&self.range_steps)),
            ("pd.tw_ps", self.tw_ps.to_string()),
            ("pd.mode", if self.pd_mode == ResolutionMode::Stochastic { "stochastic" } else { "hold" }.to_string()),
            ("pd.stochastic_after_ns", opt_to_string(&self.stochastic_after_ns)),
            ("cdt.t_setup_ui", self.t_setup_ui.to_string()),
            ("cdt.hold_ui", self.hold_ui.to_string()),
        ];
        let mut kv: Vec<(String, String)> = kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        for (side, j) in [("tx", &self.tx_jitter), ("rx", &self.rx_jitter)] {
            kv.push((format!("jitter.{side}.sin_amp_ui"), j.sin_amp_ui.to_string()));
            kv.push((format!("jitter.{side}.sin_freq_mhz"), j.sin_freq_mhz.to_string()));
            kv.push((format!("jitter.{side}.sin_phase_rad"), j.sin_phase_rad.to_string()));
            kv.push((format!("jitter.{side}.gauss_sigma_ui"), j.gauss_sigma_ui.to_string()));
        }
        kv.extend([
            ("jitter.correlated".to_string(), self.correlated.to_string()),
            ("jitter.onset_us".to_string(), self.jitter_onset_us.to_string()),
            ("run.duration_us".to_string(), self.duration_us.to_string()),
            ("run.seed".to_string(), self.seed.to_string()),
            ("run.measure_from_us".to_string(), opt_to_string(&self.measure_from_us)),
            ("run.initial_vc".to_string(), opt_to_string(&self.initial_vc)),
            ("snapshot.hot_index".to_string(), opt_to_string(&self.snapshot_hot_index)),
            ("snapshot.restore_vc".to_string(), self.snapshot_restore_vc.to_string()),
        ]);
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        let pos = |x: F| x > F::zero();
        if !pos(self.bit_rate_gbps) {
            return fail("link.bit_rate_gbps must be positive");
        }
        if !(self.alpha >= F::zero() && self.alpha < F::one()) {
            return fail("link.alpha must lie in [0, 1)");
        }
        if !(self.transition_ui >= F::zero() && self.transition_ui < F::one()) {
            return fail("link.transition_ui must lie in [0, 1)");
        }
        if !pos(self.swing_mv) {
            return fail("link.swing_mv must be positive");
        }
        if Prbs15State::new(self.prbs_seed).is_err() {
            return fail("link.prbs_seed must be a nonzero 15-bit value");
        }
        if self.phases < 4 || self.phases > 64 || !self.phases.is_multiple_of(2) {
            return fail("dll.phases must be even and in 4..=64");
        }
        if self.dll_mode == DllModeKind::Tracking && !pos(self.dll_bandwidth_mhz) {
            return fail("dll.bandwidth_mhz must be positive in tracking mode");
        }
        if !self.dll_skew_ps.is_empty() && self.dll_skew_ps.len() != self.phases as usize {
            return fail("dll.skew_ps needs one entry per phase");
        }
        if self.k == 0 {
            return fail("coarse.k must be positive");
        }
        if !(self.trip_ns >= F::zero()) {
            return fail("coarse.trip_ns must be non-negative");
        }
        if !(pos(self.i_weak_ua) && pos(self.c_filter_ff) && pos(self.vdd) && self.strong_ratio >= F::one()) {
            return fail("pump currents, capacitance and supply must be positive, strong_ratio >= 1");
        }
        if self.shape == ShapeKind::Tanh && !pos(self.steepness) {
            return fail("vcdl.steepness must be positive");
        }
        if !(self.d_min_ui >= F::zero() && self.d_min_ui < F::one()) {
            return fail("vcdl.d_min_ui must lie in [0, 1)");
        }
        if matches!(self.range_steps, Some(r) if !pos(r)) {
            return fail("vcdl.range_steps must be positive");
        }
        if !(self.tw_ps >= F::zero()) || !(self.tw_ps * F::of(2.0) < self.period().as_fs::<F>() / F::of(1000.0)) {
            return fail("pd.tw_ps must be non-negative and under half a bit");
        }
        if !(self.t_setup_ui >= F::zero() && self.t_setup_ui < F::of(0.5) && self.hold_ui >= F::zero()) {
            return fail("cdt.t_setup_ui must lie in [0, 0.5) and cdt.hold_ui be non-negative");
        }
        if !(self.duration_us >= F::zero()) {
            return fail("run.duration_us must be non-negative");
        }
        if !(self.jitter_onset_us >= F::zero()) {
            return fail("jitter.onset_us must be non-negative");
        }
        if self.correlated && !self.rx_jitter.is_zero() {
            return fail("jitter.rx.* must be zero when jitter.correlated = true");
        }
        for (name, j) in [("jitter.tx", &self.tx_jitter), ("jitter.rx", &self.rx_jitter)] {
            let spec = j.spec();
            if spec.validate().is_err() {
                return Err(ScenarioError::Invalid(format!(
                    "{name}: amplitudes must be non-negative, frequencies positive"
                )));
            }
            if spec.check_excursion(self.period()).is_err() {
                return Err(ScenarioError::Invalid(format!(
                    "{name}: sinusoidal edge-to-edge excursion must stay under 0.5 UI"
                )));
            }
        }
        if let Some(v) = self.initial_vc {
            if !(v >= F::zero() && v <= self.vdd) {
                return fail("run.initial_vc must lie within the supply");
            }
        }
        if let Some(j) = self.snapshot_hot_index {
            if j >= self.phases {
                return fail("snapshot.hot_index must be below dll.phases");
            }
        }
        Ok(())
    }

    pub fn period(&self) -> SimTime {
        SimTime::period_of_rate(self.bit_rate_gbps * F::of(1e9))
    }

    pub fn duration(&self) -> SimTime {
        SimTime::from_secs(self.duration_us * F::of(1e-6))
    }

    pub fn measure_from(&self) -> Option<SimTime> {
        self.measure_from_us.map(|u| SimTime::from_secs(u * F::of(1e-6)))
    }

    pub fn channel(&self) -> ChannelConfig<F> {
        let t = self.period();
        ChannelConfig {
            n: self.n,
            alpha: self.alpha,
            bit_period: t,
            transition_time: t.scale(self.transition_ui),
            swing: Voltage(self.swing_mv * F::of(1e-3)),
        }
    }

    pub fn data_pattern(&self) -> DataPattern {
        match self.pattern {
            PatternKind::Prbs15 => DataPattern::Prbs15(Prbs15State::new(self.prbs_seed).unwrap_or_default()),
            PatternKind::Alternating => DataPattern::Alternating,
        }
    }

    pub fn pump(&self) -> PumpConfig<F> {
        PumpConfig {
            i_weak: self.i_weak_ua * F::of(1e-6),
            strong_ratio: self.strong_ratio,
            c_filter: self.c_filter_ff * F::of(1e-15),
            v_dd: Voltage(self.vdd),
        }
    }

    pub fn window(&self) -> WindowComparator<F> {
        WindowComparator::for_supply(Voltage(self.vdd), SimTime::from_secs(self.trip_ns * F::of(1e-9)))
    }

    pub fn phase_step(&self) -> SimTime {
        let t = self.period().ticks();
        let n = self.phases as i64;
        SimTime((2 * t + n) / (2 * n))
    }

    pub fn d_min(&self) -> SimTime {
        self.period().scale(self.d_min_ui)
    }

    pub fn vcdl(&self) -> VcdlCurve<F> {
        let w = self.window();
        VcdlCurve {
            d_min: self.d_min(),
            phase_step: self.phase_step(),
            corner: self.corner,
            range_steps: self.range_steps,
            shape: match self.shape {
                ShapeKind::Linear => VcdlShape::Linear,
                ShapeKind::Tanh => VcdlShape::Saturating { steepness: self.steepness },
            },
            v_low: w.v_low,
            v_high: w.v_high,
        }
    }

    pub fn metastability(&self) -> MetastabilityModel {
        MetastabilityModel::new(SimTime::from_secs(self.tw_ps * F::of(1e-12)), self.pd_mode)
    }

    pub fn cdt(&self) -> CdtConfig {
        let t = self.period();
        CdtConfig { period: t, t_setup: t.scale(self.t_setup_ui), hold: t.scale(self.hold_ui) }
    }

    pub fn dll_mode(&self) -> DllMode<F> {
        match self.dll_mode {
            DllModeKind::Ideal => DllMode::Ideal,
            DllModeKind::Tracking => DllMode::Tracking { bandwidth_hz: self.dll_bandwidth_mhz * F::of(1e6) },
        }
    }

    pub fn dll_skew(&self) -> Vec<SimTime> {
        self.dll_skew_ps.iter().map(|&p| SimTime::from_secs(p * F::of(1e-12))).collect()
    }

    pub fn jitter_onset(&self) -> SimTime {
        SimTime::from_secs(self.jitter_onset_us * F::of(1e-6))
    }

    pub fn tx_jitter_spec(&self) -> JitterSpec<F> {
        self.tx_jitter.spec().starting_at(self.jitter_onset())
    }

    /// The rx spec, which copies the tx spec when the two are correlated.
    pub fn rx_jitter_spec(&self) -> JitterSpec<F> {
        if self.correlated {
            self.tx_jitter_spec().correlated()
        } else {
            self.rx_jitter.spec().starting_at(self.jitter_onset())
        }
    }

    pub fn snapshot(&self) -> Option<Snapshot> {
        self.snapshot_hot_index.map(|j| Snapshot {
            ring: RingCounter::with_hot(j, self.phases).expect("validated hot index"),
            restore_vc: self.snapshot_restore_vc,
        })
    }
}
