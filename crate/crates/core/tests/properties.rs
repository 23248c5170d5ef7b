// SPDX-License-Identifier: Apache-2.0
//! Randomized invariants.

use proptest::prelude::*;

use mesosync::coarse::{ring_step, Direction, RingCounter};
use mesosync::fine::{pump_integrate, vcdl_delay, Corner, FineLoopState, PumpDrive};
use mesosync::link::{prbs15_next, Prbs15State};
use mesosync::sched::{EventClass, Scheduler};
use mesosync::units::Voltage;
use mesosync::{Scenario, SimTime};

fn drive() -> impl Strategy<Value = PumpDrive> {
    (any::<bool>(), any::<bool>(), 0u8..3).prop_map(|(up, dn, strong)| PumpDrive {
        up,
        dn,
        up_strong: strong == 1,
        dn_strong: strong == 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tagged(u8, usize);

impl EventClass for Tagged {
    fn class(&self) -> u8 {
        self.0
    }
}

proptest! {
    #[test]
    fn pump_is_additive_between_rails(q in 200_000_000i64..400_000_000, d in drive(), a in 0i64..5_000, b in 0i64..5_000) {
        let cfg = Scenario::defaults_130nm().pump();
        let s = FineLoopState { charge: q, weak_gated_off: false };
        let two = pump_integrate(pump_integrate(s, d, SimTime(a), &cfg).unwrap(), d, SimTime(b), &cfg).unwrap();
        let one = pump_integrate(s, d, SimTime(a + b), &cfg).unwrap();
        prop_assert_eq!(two.charge, one.charge);
    }

    #[test]
    fn pump_stays_on_the_rails(q in 0i64..1_000_000_000, d in drive(), dt in 0i64..2_000_000_000) {
        let cfg = Scenario::defaults_130nm().pump();
        let s = FineLoopState { charge: q.min(cfg.max_charge()), weak_gated_off: false };
        let next = pump_integrate(s, d, SimTime(dt), &cfg).unwrap();
        prop_assert!(next.charge >= 0 && next.charge <= cfg.max_charge());
        let v = next.v_c(&cfg);
        prop_assert!(v >= Voltage(0.0) && v <= cfg.v_dd);
    }

    #[test]
    fn vcdl_is_monotonic(a in 0.0f64..1.2, b in 0.0f64..1.2, corner in 0usize..5, tanh in any::<bool>()) {
        let mut s = Scenario::defaults_130nm();
        s.corner = [Corner::SS, Corner::TT, Corner::FF, Corner::FNSP, Corner::SNFP][corner];
        if tanh {
            s.set("vcdl.shape", "tanh").unwrap();
        }
        let curve = s.vcdl();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (dl, dh) = (vcdl_delay(Voltage(lo), &curve), vcdl_delay(Voltage(hi), &curve));
        prop_assert!(dl <= dh);
        let w = s.window();
        if lo >= w.v_low.0 && hi <= w.v_high.0 && hi - lo > 0.01 {
            prop_assert!(dl < dh);
        }
        prop_assert!(dl >= curve.d_min && dh <= curve.max_delay());
    }

    #[test]
    fn ring_stays_one_hot(width in 2u32..32, start in 0u32..32, steps in prop::collection::vec(any::<bool>(), 0..100)) {
        let mut r = RingCounter::with_hot(start % width, width).unwrap();
        let mut net = (start % width) as i64;
        for up in steps {
            r = ring_step(r, if up { Direction::Up } else { Direction::Down }).unwrap();
            net += if up { 1 } else { -1 };
            prop_assert!(r.is_one_hot());
        }
        prop_assert_eq!(r.hot_index() as i64, net.rem_euclid(width as i64));
    }

    #[test]
    fn prbs_never_reaches_zero(seed in 1u16..0x8000) {
        let mut s = Prbs15State::new(seed).unwrap();
        for _ in 0..500 {
            s = prbs15_next(s).1;
            prop_assert_ne!(s.lfsr(), 0);
        }
    }

    #[test]
    fn scheduler_order_is_total(events in prop::collection::vec((0i64..50, 0u8..4), 0..200)) {
        let mut q = Scheduler::new();
        for (i, (t, c)) in events.iter().enumerate() {
            q.schedule(SimTime(*t), Tagged(*c, i));
        }
        let mut popped = Vec::new();
        while let Some((t, e)) = q.pop() {
            popped.push((t, e.0, e.1));
        }
        let mut expected: Vec<(SimTime, u8, usize)> =
            events.iter().enumerate().map(|(i, (t, c))| (SimTime(*t), *c, i)).collect();
        expected.sort();
        prop_assert_eq!(popped, expected);
    }

    #[test]
    fn scenario_text_round_trips(alpha in 0.0f64..0.999, n in 0u32..5, k in 2u32..64, seed in any::<u64>(), tw in 0.0f64..40.0) {
        let mut s = Scenario::defaults_130nm();
        s.alpha = alpha;
        s.n = n;
        s.k = k;
        s.seed = seed;
        s.tw_ps = tw;
        let back = Scenario::parse(&s.to_text()).unwrap();
        prop_assert_eq!(back, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn closed_loop_invariants(alpha in 0.0f64..0.999, n in 0u32..3, seed in any::<u64>(), sigma in 0.0f64..0.03) {
        let mut s = Scenario::defaults_130nm();
        s.alpha = alpha;
        s.n = n;
        s.seed = seed;
        s.tx_jitter.gauss_sigma_ui = sigma;
        s.duration_us = 1.0;
        let m = mesosync::run(&s).unwrap();
        prop_assert_eq!(m.invariant_violations, 0);
        prop_assert!(m.vc_trace.windows(2).all(|w| w[0].0 <= w[1].0));
        prop_assert!(m.counter_trace.windows(2).all(|w| w[0].time < w[1].time));
        let cfg = s.pump();
        prop_assert!(m.vc_trace.iter().all(|p| p.1 >= 0.0 && p.1 <= cfg.v_dd.0));
        prop_assert_eq!(&m, &mesosync::run(&s).unwrap());
    }
}
