// SPDX-License-Identifier: Apache-2.0
//! Multi-run studies: parameter sweeps, the false-lock experiment and
//! snapshot relock timing.

use rayon::prelude::*;

use crate::dll::PhaseSelect;
use crate::fine::vcdl_delay;
use crate::metrics::RunMetrics;
use crate::num::{frac_ui, Real};
use crate::pd::ResolutionMode;
use crate::rng::derive_seed;
use crate::scenario::{PatternKind, Scenario, ScenarioError};
use crate::sim::{run, SimError};
use crate::time::SimTime;

/// Largest |phase error| accepted as a correct lock.
pub const CORRECT_LOCK_UI: f64 = 0.05;

/// Drift bound for a loop stuck on the wrong edge.
pub const STUCK_DRIFT_VOLTS: f64 = 0.010;

#[derive(Clone, Debug)]
pub struct SweepPoint<F> {
    pub value: String,
    pub seed: u64,
    pub result: Result<RunMetrics<F>, SimError>,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Runs independent scenarios in parallel; results keep input order.
pub fn run_all<F: Real>(scenarios: &[Scenario<F>]) -> Vec<Result<RunMetrics<F>, SimError>> {
    scenarios.par_iter().map(run).collect()
}

/// One run per grid value. Each run's seed depends only on the base seed and
/// the `key=value` text, so reordering the grid does not change any result.
pub fn sweep<F: Real>(base: &Scenario<F>, key: &str, grid: &[String]) -> Vec<SweepPoint<F>> {
    grid.par_iter()
        .map(|value| {
            let kv = format!("{key}={value}");
            let seed = derive_seed(base.seed, fnv1a(&kv));
            let mut s = base.clone();
            s.seed = seed;
            let result = s.with_overrides([kv.as_str()]).map_err(SimError::from).and_then(|s| run(&s));
            SweepPoint { value: value.clone(), seed, result }
        })
        .collect()
}

/// True if the run locked within the correct-lock tolerance of the eye center.
pub fn correctly_locked<F: Real>(m: &RunMetrics<F>) -> bool {
    m.locked && m.phase_error_ui.is_some_and(|e| e.abs().as_f64() <= CORRECT_LOCK_UI)
}

/// Fractional channel delay that puts the cold-start mid-eye sample exactly
/// on a data transition.
pub fn false_lock_alpha<F: Real>(s: &Scenario<F>) -> F {
    let period = s.period();
    let n0 = match s.snapshot() {
        Some(snap) => PhaseSelect::from_ring(&snap.ring).n,
        None => 0,
    };
    let step = s.phase_step();
    let v0 = s.initial_vc.map(crate::units::Voltage).unwrap_or_else(|| s.window().midpoint());
    let offset = step * n0 as i64 + vcdl_delay(v0, &s.vcdl());
    frac_ui(offset.rem_period(period).in_ui(period))
}

/// A 50%-activity, hold-mode scenario sampling exactly on the transitions.
pub fn false_lock_scenario<F: Real>(s: &Scenario<F>) -> Scenario<F> {
    let mut f = s.clone();
    f.pattern = PatternKind::Alternating;
    f.pd_mode = ResolutionMode::DeterministicHold;
    f.snapshot_hot_index = None;
    f.initial_vc = None;
    f.stochastic_after_ns = None;
    f.tx_jitter = Default::default();
    f.rx_jitter = Default::default();
    f.correlated = false;
    f.alpha = false_lock_alpha(&f);
    f
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeRun<F> {
    pub seed: u64,
    pub escape_time: Option<SimTime>,
    pub lock_time: Option<SimTime>,
    pub phase_error_ui: Option<F>,
    pub correctly_locked: bool,
}

impl<F> EscapeRun<F> {
    /// Time from leaving the wrong edge to the final lock.
    pub fn relock_duration(&self) -> Option<SimTime> {
        Some(self.lock_time? - self.escape_time?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FalseLockReport<F> {
    pub alpha: F,
    pub hold_duration: SimTime,
    /// Largest |v_c - v_c(0)| while resolution is held.
    pub hold_drift_volts: F,
    pub hold_ring_moved: bool,
    /// Mean sampling phase relative to the eye center while stuck.
    pub hold_phase_error_ui: Option<F>,
    pub stochastic: Vec<EscapeRun<F>>,
    pub snapshot_hot_index: u32,
    pub snapshot: Vec<EscapeRun<F>>,
}

impl<F: Real> FalseLockReport<F> {
    pub fn stuck(&self) -> bool {
        self.hold_drift_volts.as_f64() < STUCK_DRIFT_VOLTS && !self.hold_ring_moved
    }

    pub fn escapes(&self) -> usize {
        self.stochastic.iter().filter(|r| r.escape_time.is_some() && r.correctly_locked).count()
    }

    pub fn snapshot_clean(&self) -> usize {
        self.snapshot.iter().filter(|r| r.correctly_locked).count()
    }

    pub fn passed(&self) -> bool {
        self.stuck() && self.escapes() == self.stochastic.len() && self.snapshot_clean() == self.snapshot.len()
    }

    pub fn to_text(&self) -> String {
        let opt_t = |t: Option<SimTime>| t.map_or_else(|| "none".to_string(), |t| t.ticks().to_string());
        let opt_f = |x: Option<F>| x.map_or_else(|| "none".to_string(), |x| format!("{:.4}", x.as_f64()));
        let mut s = format!(
            "alpha = {:.6}\nhold_duration_fs = {}\nhold_drift_volts = {:.6}\nhold_ring_moved = {}\nhold_phase_error_ui = {}\nstuck = {}\n",
            self.alpha.as_f64(),
            self.hold_duration.ticks(),
            self.hold_drift_volts.as_f64(),
            self.hold_ring_moved,
            opt_f(self.hold_phase_error_ui),
            self.stuck()
        );
        for r in &self.stochastic {
            s += &format!(
                "stochastic seed={} escape_fs={} lock_fs={} relock_fs={} phase_error_ui={} ok={}\n",
                r.seed,
                opt_t(r.escape_time),
                opt_t(r.lock_time),
                opt_t(r.relock_duration()),
                opt_f(r.phase_error_ui),
                r.correctly_locked
            );
        }
        for r in &self.snapshot {
            s += &format!(
                "snapshot hot_index={} seed={} lock_fs={} phase_error_ui={} ok={}\n",
                self.snapshot_hot_index,
                r.seed,
                opt_t(r.lock_time),
                opt_f(r.phase_error_ui),
                r.correctly_locked
            );
        }
        s += &format!(
            "escapes = {}/{}\nsnapshot_clean = {}/{}\npassed = {}\n",
            self.escapes(),
            self.stochastic.len(),
            self.snapshot_clean(),
            self.snapshot.len(),
            self.passed()
        );
        s
    }
}

/// First instant at or after `from` where `v_c` has moved more than the stuck
/// bound or the ring has stepped.
fn escape_time<F: Real>(m: &RunMetrics<F>, from: SimTime) -> Option<SimTime> {
    let v0 = m.vc_trace.iter().take_while(|(t, _)| *t <= from).last().map(|p| p.1)?;
    let ring0 = m.counter_trace.iter().take_while(|r| r.time <= from).last().map(|r| r.hot_index);
    let by_vc =
        m.vc_trace.iter().find(|(t, v)| *t >= from && (*v - v0).abs().as_f64() > STUCK_DRIFT_VOLTS).map(|p| p.0);
    let by_ring = m.counter_trace.iter().find(|r| r.time >= from && Some(r.hot_index) != ring0).map(|r| r.time);
    match (by_vc, by_ring) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn escape_run<F: Real>(seed: u64, m: &RunMetrics<F>, from: SimTime) -> EscapeRun<F> {
    EscapeRun {
        seed,
        escape_time: escape_time(m, from),
        lock_time: m.lock_time,
        phase_error_ui: m.phase_error_ui,
        correctly_locked: correctly_locked(m),
    }
}

/// Holds the loop on the wrong edge for `hold`, then releases it with
/// stochastic resolution for `seeds` seeds, and finally restarts `seeds`
/// runs from a snapshot of a correct lock.
pub fn false_lock_experiment<F: Real>(
    s: &Scenario<F>,
    hold: SimTime,
    release: SimTime,
    seeds: usize,
) -> Result<FalseLockReport<F>, SimError> {
    let base = false_lock_scenario(s);
    let hold_us = hold.as_secs::<F>() * F::of(1e6);

    let mut h = base.clone();
    h.duration_us = hold_us;
    h.measure_from_us = Some(F::zero());
    let hm = run(&h)?;
    let (lo, hi) = hm.vc_range(SimTime::ZERO, hold).unwrap_or((F::zero(), F::zero()));
    let v0 = hm.vc_trace.first().map_or(F::zero(), |p| p.1);
    let hold_drift = (hi - v0).abs().max((lo - v0).abs());
    let hold_ring_moved = hm.coarse_steps > 0;

    let seeds_list: Vec<u64> = (0..seeds as u64).map(|i| derive_seed(s.seed, 0xFA15E + i)).collect();
    let released: Vec<Scenario<F>> = seeds_list
        .iter()
        .map(|&seed| {
            let mut r = base.clone();
            r.seed = seed;
            r.stochastic_after_ns = Some(hold_us * F::of(1e3));
            r.duration_us = (hold + release).as_secs::<F>() * F::of(1e6);
            r
        })
        .collect();
    let released_m = run_all(&released);
    let mut stochastic = Vec::new();
    for (seed, m) in seeds_list.iter().zip(released_m) {
        stochastic.push(escape_run(*seed, &m?, hold));
    }

    // Snapshot of a correct lock taken from a stochastic cold start.
    let mut c = base.clone();
    c.pd_mode = ResolutionMode::Stochastic;
    c.duration_us = release.as_secs::<F>() * F::of(1e6);
    let cm = run(&c)?;
    let hot = cm.final_hot_index;
    let snaps: Vec<Scenario<F>> = seeds_list
        .iter()
        .map(|&seed| {
            let mut r = c.clone();
            r.seed = seed;
            r.snapshot_hot_index = Some(hot);
            r.snapshot_restore_vc = true;
            r
        })
        .collect();
    let mut snapshot = Vec::new();
    for (seed, m) in seeds_list.iter().zip(run_all(&snaps)) {
        snapshot.push(escape_run(*seed, &m?, SimTime::ZERO));
    }

    Ok(FalseLockReport {
        alpha: base.alpha,
        hold_duration: hold,
        hold_drift_volts: hold_drift,
        hold_ring_moved,
        hold_phase_error_ui: hm.phase_error_ui,
        stochastic,
        snapshot_hot_index: hot,
        snapshot,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelockReport {
    pub seeds: Vec<u64>,
    pub cold: Vec<Option<SimTime>>,
    pub restored: Vec<Option<SimTime>>,
}

fn median(xs: &[Option<SimTime>]) -> Option<SimTime> {
    let mut v: Vec<SimTime> = xs.iter().copied().collect::<Option<Vec<_>>>()?;
    if v.is_empty() {
        return None;
    }
    v.sort();
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { SimTime((v[n / 2 - 1].ticks() + v[n / 2].ticks()) / 2) })
}

impl RelockReport {
    /// Median cold-start lock time; `None` if any run failed to lock.
    pub fn median_cold(&self) -> Option<SimTime> {
        median(&self.cold)
    }

    pub fn median_restored(&self) -> Option<SimTime> {
        median(&self.restored)
    }

    pub fn ratio(&self) -> Option<f64> {
        let c = self.median_cold()?.ticks();
        (c > 0).then(|| self.median_restored().map(|r| r.ticks() as f64 / c as f64)).flatten()
    }
}

/// Seed variants of `s`: both the metastability stream and the data pattern
/// start differ per seed.
pub fn seed_variants<F: Real>(s: &Scenario<F>, count: usize, salt: u64) -> Vec<Scenario<F>> {
    (0..count as u64)
        .map(|i| {
            let mut v = s.clone();
            v.seed = derive_seed(s.seed, salt + i);
            v.prbs_seed = (derive_seed(v.seed, 0x9e37) % 0x7FFF) as u16 + 1;
            v
        })
        .collect()
}

/// Cold start per seed, then a restart from a snapshot of where it locked.
pub fn snapshot_relock<F: Real>(s: &Scenario<F>, seeds: usize) -> Result<RelockReport, SimError> {
    let mut cold_s = seed_variants(s, seeds, 0x5EED);
    for c in &mut cold_s {
        c.snapshot_hot_index = None;
    }
    let cold_m = run_all(&cold_s).into_iter().collect::<Result<Vec<_>, _>>()?;
    let restored_s: Vec<Scenario<F>> = cold_s
        .iter()
        .zip(&cold_m)
        .map(|(c, m)| {
            let mut r = c.clone();
            r.snapshot_hot_index = Some(m.final_hot_index);
            r.snapshot_restore_vc = true;
            r
        })
        .collect();
    let restored_m = run_all(&restored_s).into_iter().collect::<Result<Vec<_>, _>>()?;
    let lt = |m: &RunMetrics<F>| if correctly_locked(m) { m.lock_time } else { None };
    Ok(RelockReport {
        seeds: cold_s.iter().map(|c| c.seed).collect(),
        cold: cold_m.iter().map(lt).collect(),
        restored: restored_m.iter().map(lt).collect(),
    })
}

/// Checks a parameter key against the scenario grammar without running.
pub fn check_key<F: Real>(base: &Scenario<F>, key: &str, value: &str) -> Result<(), ScenarioError> {
    base.clone().with_overrides([format!("{key}={value}").as_str()]).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn false_lock_alpha_hits_boundary() {
        let s = Scenario::<f64>::defaults_130nm();
        // phase 0, mid-window VCDL: d_min + one phase step = 0.2 UI
        let a = false_lock_alpha(&s);
        assert!((a - 0.2).abs() < 1e-5, "{a}");
    }

    #[test]
    fn median_handles_even_and_missing() {
        let xs = [Some(SimTime(4)), Some(SimTime(1)), Some(SimTime(3)), Some(SimTime(2))];
        assert_eq!(median(&xs), Some(SimTime(2)));
        assert_eq!(median(&[Some(SimTime(1)), None]), None);
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn empty_sweep_is_empty() {
        let s = Scenario::<f64>::defaults_130nm();
        assert!(sweep(&s, "link.alpha", &[]).is_empty());
    }

    #[test]
    fn sweep_seed_ignores_grid_order() {
        let mut s = Scenario::<f64>::defaults_130nm();
        s.duration_us = 0.2;
        let a = sweep(&s, "link.alpha", &["0.1".into(), "0.6".into()]);
        let b = sweep(&s, "link.alpha", &["0.6".into(), "0.1".into()]);
        assert_eq!(a[0].seed, b[1].seed);
        assert_eq!(a[0].result, b[1].result);
    }

    #[test]
    fn sweep_reports_bad_points_without_aborting() {
        let mut s = Scenario::<f64>::defaults_130nm();
        s.duration_us = 0.1;
        let r = sweep(&s, "link.alpha", &["0.2".into(), "7".into()]);
        assert!(r[0].result.is_ok());
        assert!(matches!(r[1].result, Err(SimError::Scenario(_))));
    }
}
