//! Independent reference computations checked against the library.

mod common;

use fcw_core::evaluation::{buffer_time, rates, ConfusionCounts};
use fcw_core::kinematics::AttentionTrace;
use fcw_core::warning::{attend_buffer_trace, sda_warning_distance, FcwParams};
use fcw_core::WarningTrace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distance each vehicle covers until standstill, stepped at `dt`: the ego
/// holds speed for `t_dr` before braking at `a_ego`, the lead brakes at
/// `a_lead` immediately.
fn simulate_stops(
    v_ego: f64,
    v_lead: f64,
    t_dr: f64,
    a_ego: f64,
    a_lead: f64,
    dt: f64,
) -> (f64, f64) {
    let travel = |mut v: f64, delay: f64, a: f64| {
        let (mut x, mut t) = (0.0, 0.0);
        while v > 0.0 {
            let braking = t >= delay;
            let v_next = if braking { (v - a * dt).max(0.0) } else { v };
            x += 0.5 * (v + v_next) * dt;
            v = v_next;
            t += dt;
        }
        x
    };
    (travel(v_ego, t_dr, a_ego), travel(v_lead, 0.0, a_lead))
}

/// Smallest initial gap for which the stopped ego is not past the stopped
/// lead, found by bisection on the simulated outcome.
fn bisect_stop_gap(v_ego: f64, v_lead: f64, t_dr: f64, a_ego: f64, a_lead: f64) -> f64 {
    let (ego, lead) = simulate_stops(v_ego, v_lead, t_dr, a_ego, a_lead, 1e-3);
    let safe = |g: f64| g + lead - ego >= 0.0;
    let (mut lo, mut hi) = (0.0, 1000.0);
    if safe(lo) {
        return 0.0;
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if safe(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[test]
fn sda_matches_brake_to_stop_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let v_ego = rng.gen_range(0.0..40.0);
        let v_lead = rng.gen_range(0.0..40.0);
        let t_dr = rng.gen_range(0.5..2.5);
        let a = rng.gen_range(3.0..9.0);
        let p = FcwParams {
            t_dr,
            a_ego_max: a,
            a_lead_max: a,
            ..FcwParams::default()
        };
        let d = sda_warning_distance(v_ego, v_lead, &p).unwrap();
        let oracle = bisect_stop_gap(v_ego, v_lead, t_dr, a, a);
        assert!(
            (d - oracle).abs() < 0.5,
            "v_ego={v_ego} v_lead={v_lead} t_dr={t_dr} a={a}: {d} vs {oracle}"
        );
    }
}

#[test]
fn sda_matches_simulation_with_unequal_decelerations() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let (v_ego, v_lead) = (rng.gen_range(5.0..35.0), rng.gen_range(0.0..35.0));
        let (a_ego, a_lead) = (rng.gen_range(3.0..9.0), rng.gen_range(3.0..9.0));
        let p = FcwParams {
            a_ego_max: a_ego,
            a_lead_max: a_lead,
            ..FcwParams::default()
        };
        let d = sda_warning_distance(v_ego, v_lead, &p).unwrap();
        let oracle = bisect_stop_gap(v_ego, v_lead, p.t_dr, a_ego, a_lead);
        assert!((d - oracle).abs() < 0.5, "{d} vs {oracle}");
    }
}

#[test]
fn table_one_rows_reproduce_reported_uar() {
    // (TPR, TNR, UAR) as published for the six compared methods.
    let rows = [
        (0.600, 0.613, 0.606),
        (0.067, 1.000, 0.533),
        (0.933, 0.065, 0.499),
        (0.933, 0.161, 0.547),
        (0.400, 0.839, 0.619),
        (0.733, 0.710, 0.722),
    ];
    for (tpr, tnr, uar) in rows {
        let (_, _, got) = fcw_core::evaluation::rates(&counts_for(tpr, tnr)).unwrap();
        assert!(
            (got - uar).abs() <= 0.0015,
            "({tpr}, {tnr}) -> {got}, expected {uar}"
        );
    }
}

/// Integer counts on 15 positives / 31 negatives that round to the given
/// rates; every published row is consistent with that split.
fn counts_for(tpr: f64, tnr: f64) -> ConfusionCounts {
    let tp = (tpr * 15.0).round() as usize;
    let tn = (tnr * 31.0).round() as usize;
    assert!(((tp as f64 / 15.0) - tpr).abs() < 5e-4);
    assert!(((tn as f64 / 31.0) - tnr).abs() < 5e-4);
    ConfusionCounts {
        tp,
        fn_: 15 - tp,
        tn,
        fp: 31 - tn,
    }
}

#[test]
fn rates_on_reconstructed_counts() {
    let (tpr, tnr, _) = rates(&counts_for(0.733, 0.710)).unwrap();
    assert_eq!((tpr, tnr), (11.0 / 15.0, 22.0 / 31.0));
}

#[test]
fn buffer_half_second_before_deployed_alert() {
    let mut warn = vec![false; 151];
    warn[45] = true;
    let b = buffer_time(&WarningTrace::new(0.1, 0.0, warn), 5.0).unwrap();
    assert!((b - 0.5).abs() < 1e-9);
}

#[test]
fn attend_buffer_drains_in_exactly_two_seconds() {
    let p = FcwParams::default();
    let mut attended = vec![true; 10];
    attended.extend(vec![false; 40]);
    let buf = attend_buffer_trace(&AttentionTrace::new(0.1, 0.0, attended), &p);
    // Looking away from step 10 onwards: empty 20 steps later, not before.
    let first_empty = buf.iter().position(|&b| b <= 0.0).unwrap();
    assert_eq!(first_empty, 30);
    assert!(buf[29] > 0.0);
    // Brute-force reference: count down in integer tenths.
    let mut tenths: i64 = 20;
    for (i, &b) in buf.iter().enumerate().skip(1) {
        tenths = if i <= 10 { 20 } else { (tenths - 1).max(0) };
        assert!((b - tenths as f64 / 10.0).abs() < 1e-9, "step {i}");
    }
}
