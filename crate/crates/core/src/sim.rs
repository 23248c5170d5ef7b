// SPDX-License-Identifier: Apache-2.0
//! Closed-loop event-driven simulation of the synchronizer.
//!
//! Event classes at equal timestamps run in this order: window crossing,
//! comparator publication, center-reached, divided clock edge, selected DLL
//! edge, mid-eye sample, boundary sample, mode switch.

use std::cell::RefCell;
use std::collections::VecDeque;

use thiserror::Error;

use crate::cdt::{cdt_transfer, CdtChain};
use crate::coarse::{
    fsm_step, ring_step, snapshot_restore, CoarseError, CoarseFsm, RingCounter, WindowClass, WindowComparator,
};
use crate::dll::{intermediate_phase, DllError, DllModel, PhaseSelect};
use crate::eye::eye_center;
use crate::fine::{
    pump_integrate, time_to_charge, vcdl_delay, FineLoopError, FineLoopState, PumpConfig, PumpDrive, VcdlCurve,
    CHARGE_SUBUNITS,
};
use crate::jitter::{ClockJitter, EdgeStream, JitterError, Tracking};
use crate::link::{LinkError, RxWaveform};
use crate::metrics::{CounterRow, RunMetrics};
use crate::num::{wrap_ui, Real};
use crate::pd::{AlexanderPd, Comparator, MetastabilityModel, ResolutionMode};
use crate::rng::{SimRng, Stream};
use crate::scenario::{Scenario, ScenarioError};
use crate::sched::{EventClass, Scheduler};
use crate::time::SimTime;
use crate::units::Voltage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Fine(#[from] FineLoopError),
    #[error(transparent)]
    Coarse(#[from] CoarseError),
    #[error(transparent)]
    Dll(#[from] DllError),
    #[error(transparent)]
    Jitter(#[from] JitterError),
}

#[derive(Copy, Clone, Debug, PartialEq)]
enum Ev {
    Crossing(u64),
    Publish(WindowClass),
    CenterReached(u64),
    Divided(usize),
    SelEdge(u64),
    Center,
    EdgeSample,
    ModeSwitch,
}

impl EventClass for Ev {
    fn class(&self) -> u8 {
        match self {
            Ev::Crossing(_) => 0,
            Ev::Publish(_) => 1,
            Ev::CenterReached(_) => 2,
            Ev::Divided(_) => 3,
            Ev::SelEdge(_) => 4,
            Ev::Center => 5,
            Ev::EdgeSample => 6,
            Ev::ModeSwitch => 7,
        }
    }
}

/// Divided cycles over which `v_c` must show no net slew before lock.
pub const LOCK_WINDOW_CYCLES: usize = 8;

#[derive(Copy, Clone, Debug)]
struct Delivery {
    sample: SimTime,
    bit: Option<usize>,
    data: bool,
    delivery: SimTime,
}

pub struct Simulator<F: Real> {
    period: SimTime,
    duration: SimTime,
    measure_from: Option<SimTime>,
    k_div: usize,
    n_phases: u32,
    d_min: SimTime,

    pump: PumpConfig<F>,
    window: WindowComparator<F>,
    curve: VcdlCurve<F>,
    meta: MetastabilityModel,
    q_lo: i64,
    q_hi: i64,
    q_mid: i64,
    lock_dq: i64,

    wave: RxWaveform<F>,
    dll: DllModel<F>,
    ring: RingCounter,
    sel: PhaseSelect,
    fsm: CoarseFsm,
    fine: FineLoopState,
    fine_t: SimTime,
    drive: PumpDrive,
    pd_charge: bool,
    pd_discharge: bool,
    raw_class: WindowClass,
    published: WindowClass,

    pd: AlexanderPd,
    center_cmp: Comparator,
    edge_cmp: Comparator,
    pending_b: Option<bool>,
    pd_meta: VecDeque<(SimTime, Option<usize>)>,
    cdt: CdtChain,

    rng: SimRng,
    sched: Scheduler<Ev>,
    gen_cross: u64,
    gen_center: u64,
    gen_sel: u64,
    last_sel_edge: Option<SimTime>,

    lock_hist: VecDeque<(SimTime, i64, bool)>,
    cycle_disturbed: bool,
    run_start: Option<SimTime>,
    excursion_start: Option<SimTime>,

    m: RunMetrics<F>,
    centers: Vec<(SimTime, F, F)>,
    edges: Vec<(SimTime, F)>,
    deliveries: Vec<Delivery>,
}

impl<F: Real> Simulator<F> {
    pub fn new(sc: &Scenario<F>) -> Result<Self, SimError> {
        sc.validate()?;
        let period = sc.period();
        let duration = sc.duration();
        let pump = sc.pump();
        pump.validate()?;
        let window = sc.window();
        window.validate()?;
        let curve = sc.vcdl();
        curve.validate()?;
        let n_phases = sc.phases;

        let tx_spec = sc.tx_jitter_spec();
        let tx_source = || ClockJitter::new(tx_spec.clone(), SimRng::for_stream(sc.seed, Stream::TxJitter));
        // Correlated jitter replays the transmitter's stream on the receiver.
        let rx_sources = if sc.correlated {
            vec![tx_source()]
        } else {
            vec![ClockJitter::new(sc.rx_jitter_spec(), SimRng::for_stream(sc.seed, Stream::RxJitter))]
        };
        let mut tx = EdgeStream::new(period, SimTime::ZERO, vec![tx_source()], Tracking::Direct);
        let mut dll = DllModel::new(n_phases, period, sc.dll_mode(), rx_sources)?;
        if !sc.dll_skew_ps.is_empty() {
            dll = dll.with_skew(sc.dll_skew())?;
        }

        let nbits = (duration.ticks() / period.ticks()) as usize + sc.n as usize + 8;
        let bits = sc.data_pattern().generate(nbits);
        let tx_edges = (0..nbits).map(|k| tx.edge(k)).collect::<Result<Vec<_>, _>>()?;
        let wave = RxWaveform::new(sc.channel(), bits, &tx_edges)?;

        let (ring, restored_vc) = match sc.snapshot() {
            Some(s) => snapshot_restore(&s, &window)?,
            None => (RingCounter::preset(n_phases)?, None),
        };
        let v0 = restored_vc.unwrap_or_else(|| sc.initial_vc.map(Voltage).unwrap_or_else(|| window.midpoint()));
        let fine = FineLoopState::at_voltage(v0, &pump);
        let mut fsm = CoarseFsm::new(sc.k)?;
        fsm.pump_to_center = sc.pump_to_center;

        let q_lo = pump.charge_of(window.v_low);
        let q_hi = pump.charge_of(window.v_high);
        let q_mid = pump.charge_of(window.midpoint());
        // Half the weak-pump slew expected over the lock window at a
        // transition density of one half.
        let lock_dq = LOCK_WINDOW_CYCLES as i64 * sc.k as i64 * CHARGE_SUBUNITS * period.ticks() / 4;

        let mut sim = Simulator {
            period,
            duration,
            measure_from: sc.measure_from(),
            k_div: sc.k as usize,
            n_phases,
            d_min: sc.d_min(),
            pump,
            window,
            curve,
            meta: sc.metastability(),
            q_lo,
            q_hi,
            q_mid,
            lock_dq,
            wave,
            dll,
            ring,
            sel: PhaseSelect::from_ring(&ring),
            fsm,
            fine,
            fine_t: SimTime::ZERO,
            drive: PumpDrive::default(),
            pd_charge: false,
            pd_discharge: false,
            raw_class: WindowClass::Within,
            published: WindowClass::Within,
            pd: AlexanderPd::new(),
            center_cmp: Comparator::new(false),
            edge_cmp: Comparator::new(false),
            pending_b: None,
            pd_meta: VecDeque::new(),
            cdt: CdtChain::new(sc.cdt()),
            rng: SimRng::for_stream(sc.seed, Stream::Metastability),
            sched: Scheduler::new(),
            gen_cross: 0,
            gen_center: 0,
            gen_sel: 0,
            last_sel_edge: None,
            lock_hist: VecDeque::new(),
            cycle_disturbed: false,
            run_start: None,
            excursion_start: None,
            m: RunMetrics::empty(period, duration),
            centers: Vec::new(),
            edges: Vec::new(),
            deliveries: Vec::new(),
        };
        sim.raw_class = sim.class_of(sim.fine.charge);
        sim.published = sim.raw_class;
        if sim.published != WindowClass::Within {
            sim.excursion_start = Some(SimTime::ZERO);
        }
        if duration > SimTime::ZERO {
            sim.push_vc(SimTime::ZERO);
        }
        sim.sched.schedule(SimTime::ZERO, Ev::Divided(0));
        sim.reselect(SimTime::ZERO)?;
        if let Some(ns) = sc.stochastic_after_ns {
            sim.sched.schedule(SimTime::from_secs(ns * F::of(1e-9)), Ev::ModeSwitch);
        }
        Ok(sim)
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn v_c(&self) -> Voltage<F> {
        self.fine.v_c(&self.pump)
    }

    pub fn ring(&self) -> RingCounter {
        self.ring
    }

    pub fn phase_select(&self) -> PhaseSelect {
        self.sel
    }

    pub fn fsm(&self) -> CoarseFsm {
        self.fsm
    }

    pub fn published_class(&self) -> WindowClass {
        self.published
    }

    pub fn waveform(&self) -> &RxWaveform<F> {
        &self.wave
    }

    /// Processes events strictly before `t` (and before the end of the run).
    pub fn run_until(&mut self, t: SimTime) -> Result<(), SimError> {
        let stop = t.min(self.duration);
        while let Some(next) = self.sched.peek_time() {
            if next >= stop {
                break;
            }
            let (now, ev) = self.sched.pop().expect("peeked");
            self.handle(now, ev)?;
            self.check_invariants();
        }
        Ok(())
    }

    pub fn run(mut self) -> Result<RunMetrics<F>, SimError> {
        self.run_until(self.duration)?;
        self.finish()
    }

    fn class_of(&self, q: i64) -> WindowClass {
        if q > self.q_hi {
            WindowClass::Above
        } else if q < self.q_lo {
            WindowClass::Below
        } else {
            WindowClass::Within
        }
    }

    fn advance(&mut self, t: SimTime) -> Result<(), SimError> {
        if t > self.fine_t {
            self.fine = pump_integrate(self.fine, self.drive, t - self.fine_t, &self.pump)?;
            self.fine_t = t;
        }
        Ok(())
    }

    fn push_vc(&mut self, t: SimTime) {
        let v = self.v_c().0;
        match self.m.vc_trace.last_mut() {
            Some(last) if last.0 == t => last.1 = v,
            _ => self.m.vc_trace.push((t, v)),
        }
    }

    fn check_invariants(&mut self) {
        let ok = self.ring.is_one_hot()
            && (0..=self.pump.max_charge()).contains(&self.fine.charge)
            && !(self.fsm.up_strong && self.fsm.dn_strong);
        if !ok {
            self.m.invariant_violations += 1;
        }
    }

    fn handle(&mut self, t: SimTime, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Crossing(g) if g == self.gen_cross => {
                self.advance(t)?;
                self.observe_class(t);
                self.predict_crossing(t)?;
            }
            Ev::Publish(c) => {
                self.advance(t)?;
                self.publish(t, c)?;
            }
            Ev::CenterReached(g) if g == self.gen_center && self.fsm.strong_active() => {
                self.advance(t)?;
                self.fsm = self.fsm.center_reached();
                self.update_drive(t)?;
            }
            Ev::Divided(m) => {
                self.advance(t)?;
                self.divided_edge(t)?;
                let next = self.dll.edge(0, (m + 1) * self.k_div)?;
                self.sched.schedule(next, Ev::Divided(m + 1));
            }
            Ev::SelEdge(g) if g == self.gen_sel => {
                self.advance(t)?;
                let delay = vcdl_delay(self.v_c(), &self.curve);
                self.sched.schedule(t + delay, Ev::Center);
                self.last_sel_edge = Some(t);
                self.reselect(t)?;
            }
            Ev::Center => {
                self.advance(t)?;
                self.center_sample(t)?;
            }
            Ev::EdgeSample => {
                let b = self.edge_cmp.sample(&self.wave, t, &self.meta, &mut self.rng);
                self.pending_b = Some(b);
                self.edges.push((t, self.wave.rx_value_at(t).0));
            }
            Ev::ModeSwitch => self.meta.resolution_mode = ResolutionMode::Stochastic,
            _ => {}
        }
        Ok(())
    }

    /// Starts the comparator's trip delay if `v_c` changed class.
    fn observe_class(&mut self, t: SimTime) {
        let c = self.class_of(self.fine.charge);
        if c != self.raw_class {
            self.raw_class = c;
            self.sched.schedule(t + self.window.trip_delay, Ev::Publish(c));
        }
    }

    fn publish(&mut self, t: SimTime, c: WindowClass) -> Result<(), SimError> {
        let was = self.published;
        self.published = c;
        if was == WindowClass::Within && c != WindowClass::Within {
            self.excursion_start = Some(t);
        }
        if c == WindowClass::Within {
            if let Some(s) = self.excursion_start.take() {
                self.close_excursion(t - s);
            }
        } else {
            self.cycle_disturbed = true;
        }
        let (f, _) = fsm_step(self.fsm, c, false);
        self.fsm = f;
        self.update_drive(t)?;
        self.push_vc(t);
        Ok(())
    }

    fn close_excursion(&mut self, len: SimTime) {
        self.m.excursions += 1;
        let cycles = F::of(len.ticks() as f64) / F::of((self.period.ticks() * self.k_div as i64) as f64);
        self.m.max_excursion_cycles = self.m.max_excursion_cycles.max(cycles);
    }

    fn divided_edge(&mut self, t: SimTime) -> Result<(), SimError> {
        self.evaluate_lock(t);
        let (f, out) = fsm_step(self.fsm, self.published, true);
        self.fsm = f;
        if let (true, Some(dir)) = (out.ring_enable, out.ring_dir) {
            self.ring = ring_step(self.ring, dir)?;
            self.sel = PhaseSelect::from_ring(&self.ring);
            self.m.coarse_steps += 1;
            self.cycle_disturbed = true;
            self.reselect(t)?;
        }
        self.update_drive(t)?;
        if self.fsm.strong_active() || self.published != WindowClass::Within {
            self.cycle_disturbed = true;
        }
        self.m.counter_trace.push(CounterRow {
            time: t,
            hot_index: self.ring.hot_index(),
            enable: self.fsm.enable,
            updn: self.fsm.up_dn,
            up_strong: self.fsm.up_strong,
            dn_strong: self.fsm.dn_strong,
        });
        self.push_vc(t);
        Ok(())
    }

    /// Lock holds when the two most recent divided cycles stayed in window
    /// with no strong pumping or ring motion, and `v_c` shows no net slew
    /// over the last [`LOCK_WINDOW_CYCLES`] cycles. The lock time is the edge
    /// at which the final unbroken stable run was first declared.
    fn evaluate_lock(&mut self, t: SimTime) {
        self.lock_hist.push_back((t, self.fine.charge, self.cycle_disturbed));
        if self.lock_hist.len() > LOCK_WINDOW_CYCLES + 1 {
            self.lock_hist.pop_front();
        }
        self.cycle_disturbed = false;
        let h = &self.lock_hist;
        let n = h.len();
        let stable =
            n == LOCK_WINDOW_CYCLES + 1 && !h[n - 1].2 && !h[n - 2].2 && (h[n - 1].1 - h[0].1).abs() <= self.lock_dq;
        if !stable {
            self.run_start = None;
        } else if self.run_start.is_none() {
            self.run_start = Some(t);
        }
    }

    fn update_drive(&mut self, t: SimTime) -> Result<(), SimError> {
        let nd = PumpDrive {
            up: self.pd_charge,
            dn: self.pd_discharge,
            up_strong: self.fsm.up_strong,
            dn_strong: self.fsm.dn_strong,
        };
        if nd == self.drive {
            return Ok(());
        }
        let strong_edge = nd.strong_active() != self.drive.strong_active();
        self.drive = nd;
        if nd.strong_active() {
            self.cycle_disturbed = true;
        }
        self.observe_class(t);
        self.gen_cross += 1;
        self.gen_center += 1;
        self.predict_crossing(t)?;
        self.predict_center(t)?;
        if strong_edge {
            self.push_vc(t);
        }
        Ok(())
    }

    fn predict_crossing(&mut self, t: SimTime) -> Result<(), SimError> {
        let rate = self.drive.rate(&self.pump)?;
        let target = match (rate.signum(), self.raw_class) {
            (1, WindowClass::Below) => Some(self.q_lo),
            (1, WindowClass::Within) => Some(self.q_hi + 1),
            (-1, WindowClass::Above) => Some(self.q_hi),
            (-1, WindowClass::Within) => Some(self.q_lo - 1),
            _ => None,
        };
        let target = target.filter(|&q| (0..=self.pump.max_charge()).contains(&q));
        if let Some(dt) = target.and_then(|q| time_to_charge(self.fine.charge, q, rate)) {
            self.sched.schedule(t + dt, Ev::Crossing(self.gen_cross));
        }
        Ok(())
    }

    fn predict_center(&mut self, t: SimTime) -> Result<(), SimError> {
        if !(self.fsm.pump_to_center && self.fsm.strong_active()) {
            return Ok(());
        }
        let rate = self.drive.rate(&self.pump)?;
        let q = self.fine.charge;
        if (rate > 0 && q < self.q_mid) || (rate < 0 && q > self.q_mid) {
            if let Some(dt) = time_to_charge(q, self.q_mid, rate) {
                self.sched.schedule(t + dt, Ev::CenterReached(self.gen_center));
            }
        }
        Ok(())
    }

    /// Schedules the next rising edge of the selected phase, at least half a
    /// period after the previous one so the switch matrix never glitches.
    fn reselect(&mut self, t: SimTime) -> Result<(), SimError> {
        self.gen_sel += 1;
        let half = SimTime(self.period.ticks() / 2);
        let from = self.last_sel_edge.map_or(t, |e| (e + half + SimTime(1)).max(t));
        let (_, e) = self.dll.first_edge_at_or_after(self.sel.n, SimTime::ZERO, from)?;
        self.sched.schedule(e, Ev::SelEdge(self.gen_sel));
        Ok(())
    }

    fn center_sample(&mut self, t: SimTime) -> Result<(), SimError> {
        let c = self.center_cmp.sample(&self.wave, t, &self.meta, &mut self.rng);
        let b = self.pending_b.take().unwrap_or_else(|| self.edge_cmp.last());
        self.pd_meta.push_back((t, self.wave.bit_index_at(t)));
        self.centers.push((t, self.v_c().0, self.wave.rx_value_at(t).0));
        if let Some(d) = self.pd.step(b, c) {
            let (sample, bit) = self.pd_meta.pop_front().expect("meta tracks the pipeline");
            // Clock early (DN) charges the filter, which lengthens the VCDL.
            self.pd_charge = d.dn;
            self.pd_discharge = d.up;
            self.update_drive(t)?;
            self.launch(t, sample, bit, d.data)?;
        }
        self.sched.schedule(t + SimTime(self.period.ticks() / 2), Ev::EdgeSample);
        Ok(())
    }

    fn launch(&mut self, t: SimTime, sample: SimTime, bit: Option<usize>, data: bool) -> Result<(), SimError> {
        let ip = intermediate_phase(self.sel.n, self.n_phases)?;
        let d_min = self.d_min;
        let dll = RefCell::new(&mut self.dll);
        // φ_i passes through a replica of the VCDL's minimum delay.
        let (x, viol) = cdt_transfer(
            &mut self.cdt,
            t,
            |u| dll.borrow_mut().first_edge_at_or_after(ip, d_min, u).map(|p| p.1),
            |u| dll.borrow_mut().first_edge_at_or_after(0, SimTime::ZERO, u).map(|p| p.1),
        )?;
        self.m.violations.extend(viol);
        self.deliveries.push(Delivery { sample, bit, data, delivery: x.delivery });
        Ok(())
    }

    pub fn finish(mut self) -> Result<RunMetrics<F>, SimError> {
        let t_end = self.duration.max(self.fine_t);
        self.advance(t_end)?;
        if let Some(s) = self.excursion_start.take() {
            if self.duration > SimTime::ZERO {
                self.close_excursion(t_end - s);
            }
        }
        let mut m = self.m;
        m.locked = self.run_start.is_some();
        m.lock_time = self.run_start;
        m.final_hot_index = self.ring.hot_index();
        m.final_phase = self.sel.n;
        m.final_vc = self.fine.v_c(&self.pump).0;
        m.metastable_hits = self.center_cmp.metastable_hits() + self.edge_cmp.metastable_hits();
        m.events = self.sched.popped();

        let bits = self.wave.bits();
        let probe = &bits[..bits.len().min(2048)];
        m.eye_center_ui = if probe.len() > 4 { eye_center(self.wave.config(), probe)? } else { None };

        let start = self.measure_from.or(m.lock_time);
        m.measure_start = start;
        let period = self.period;
        let hist_from = start.unwrap_or(SimTime::ZERO);
        let bin = |t: SimTime| (t.rem_period(period).ticks() * 100).div_euclid(period.ticks());
        let mv_bin = |v: F| ((v.as_f64() * 100.0).round() as i64) * 10;
        let samples = self.centers.iter().map(|c| (c.0, c.2)).chain(self.edges.iter().copied());
        for (t, v) in samples.filter(|s| s.0 >= hist_from) {
            *m.eye_hist.entry((bin(t), mv_bin(v))).or_insert(0) += 1;
        }

        let Some(s0) = start else { return Ok(m) };
        m.measured_violations = m.violations.iter().filter(|v| v.sample_time >= s0).count() as u64;

        let measured: Vec<&(SimTime, F, F)> = self.centers.iter().filter(|c| c.0 >= s0).collect();
        if let Some(center) = m.eye_center_ui {
            let errs: Vec<F> =
                measured.iter().map(|c| wrap_ui(c.0.rem_period(period).in_ui::<F>(period) - center)).collect();
            if !errs.is_empty() {
                let n = F::of(errs.len() as f64);
                m.phase_error_ui = Some(errs.iter().fold(F::zero(), |a, &e| a + e) / n);
                m.phase_error_max_ui = Some(errs.iter().fold(F::zero(), |a, &e| a.max(e.abs())));
            }
        }
        for c in &measured {
            m.vc_min_measured = Some(m.vc_min_measured.map_or(c.1, |x| x.min(c.1)));
            m.vc_max_measured = Some(m.vc_max_measured.map_or(c.1, |x| x.max(c.1)));
        }

        // The first measured bit fixes the alignment; a later slip shows up
        // as errors.
        let mut base: Option<usize> = None;
        let mut j = 0usize;
        for d in self.deliveries.iter().filter(|d| d.sample >= s0) {
            let Some(b0) = base.or(d.bit) else { continue };
            base = Some(b0);
            let Some(&expect) = bits.get(b0 + j) else { break };
            j += 1;
            m.bits_checked += 1;
            if d.data != expect {
                m.bit_errors += 1;
            }
            if let Some(arrival) = d.bit.and_then(|b| self.wave.boundary(b)) {
                let lat: F = (d.delivery - arrival).in_ui(period);
                let from_sample: F = (d.delivery - d.sample).in_ui(period);
                *m.latency_hist.entry((lat * F::of(100.0)).round_i64()).or_insert(0) += 1;
                m.latency_max_ui = Some(m.latency_max_ui.map_or(lat, |x| x.max(lat)));
                m.latency_min_ui = Some(m.latency_min_ui.map_or(lat, |x| x.min(lat)));
                m.latency_from_sample_max_ui =
                    Some(m.latency_from_sample_max_ui.map_or(from_sample, |x| x.max(from_sample)));
            }
        }
        Ok(m)
    }
}

/// Runs `s` to completion.
pub fn run<F: Real>(s: &Scenario<F>) -> Result<RunMetrics<F>, SimError> {
    Simulator::new(s)?.run()
}
