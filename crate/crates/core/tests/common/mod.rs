#![allow(dead_code)]

use fcw_core::kinematics::{
    Annotation, AttentionTrace, Episode, Trajectory, VehicleState, DEFAULT_VEHICLE_LENGTH,
};

/// Straight-line trajectory along +x from per-step speeds, integrated with
/// the trapezoid rule.
pub fn straight(x0: f64, speeds: &[f64], dt: f64) -> Trajectory {
    let mut x = x0;
    let states = speeds
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if i > 0 {
                x += 0.5 * (speeds[i - 1] + v) * dt;
            }
            VehicleState::new(x, 0.0, 0.0, v)
        })
        .collect();
    Trajectory::new(dt, 0.0, states).unwrap()
}

pub fn episode(
    id: &str,
    ego_speeds: &[f64],
    lead_speeds: &[f64],
    gap0: f64,
    attended: Vec<bool>,
    valid: bool,
) -> Episode {
    let dt = 0.1;
    let n = ego_speeds.len();
    let span = (n - 1) as f64 * dt;
    Episode {
        id: id.to_string(),
        dt,
        deployed_fcw_time: span.min(5.0),
        ego: straight(0.0, ego_speeds, dt),
        lead: straight(gap0 + DEFAULT_VEHICLE_LENGTH, lead_speeds, dt),
        attention: AttentionTrace::new(dt, 0.0, attended),
        annotation: Annotation::unanimous(valid, 3, valid.then_some(0.5 * span)),
        ego_length: DEFAULT_VEHICLE_LENGTH,
        lead_length: DEFAULT_VEHICLE_LENGTH,
    }
}

/// Piecewise-constant acceleration profile starting at `v0`, floored at 0.
pub fn speed_profile(v0: f64, accels: &[(usize, f64)], n: usize, dt: f64) -> Vec<f64> {
    let mut v = v0;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    let mut left = accels.first().map_or(usize::MAX, |s| s.0);
    for _ in 0..n {
        out.push(v);
        let a = accels.get(seg).map_or(0.0, |s| s.1);
        v = (v + a * dt).max(0.0);
        left = left.saturating_sub(1);
        if left == 0 && seg + 1 < accels.len() {
            seg += 1;
            left = accels[seg].0;
        } else if left == 0 {
            seg = accels.len();
        }
    }
    out
}
