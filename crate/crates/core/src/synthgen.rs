//! Seeded generator of straight-lane car-following episodes with
//! rule-derived need-to-warn labels.
//!
//! The lead follows a closed-form speed profile: constant speed until
//! `event_time`, then constant acceleration until it reaches its terminal
//! speed (zero when braking). The ego holds its speed until the driver
//! notices danger, which requires looking at the lead while closing in with
//! the gap inside the conventional warning distance. After the reaction
//! time the ego brakes at its limit until it is no slower than the lead,
//! then cruises again.
//!
//! An episode is labelled warning-needed when the actual gap ever falls
//! below [`LABEL_GAP_THRESHOLD`] (contact included). The preferred warning
//! time is the last step from which a reaction-then-full-brake maneuver
//! still avoids contact.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FcwError, Result};
use crate::evaluation::majority_validity;
use crate::kinematics::{
    longitudinal_gap, Annotation, AttentionTrace, Episode, Trajectory, VehicleState,
    DEFAULT_DEPLOYED_FCW_TIME, DEFAULT_VEHICLE_LENGTH, TIME_EPS,
};
use crate::warning::{sda_warning_distance, FcwParams};

/// Minimum actual gap below which a warning is deemed needed, m.
pub const LABEL_GAP_THRESHOLD: f64 = 5.0;
/// Synthetic observer panel size.
pub const OBSERVERS: usize = 3;
/// Largest relative perturbation applied to the initial speeds.
pub const MAX_SPEED_JITTER: f64 = 0.02;
/// How far above its initial speed an accelerating lead goes, m/s.
pub const ACCELERATION_SPEED_GAIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Lead brakes while the driver looks away.
    BrakeDuringInattention,
    /// Lead speeds up while the driver looks away.
    AccelerateDuringInattention,
    /// Steady following, no event.
    NominalFollowing,
    /// Lead brakes hard in front of an attentive driver.
    AttentiveBrake,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::BrakeDuringInattention,
        ScenarioKind::AccelerateDuringInattention,
        ScenarioKind::NominalFollowing,
        ScenarioKind::AttentiveBrake,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::BrakeDuringInattention => "brake_during_inattention",
            ScenarioKind::AccelerateDuringInattention => "accelerate_during_inattention",
            ScenarioKind::NominalFollowing => "nominal_following",
            ScenarioKind::AttentiveBrake => "attentive_brake",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = FcwError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FcwError::invalid(format!("unknown scenario kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Initial speeds, m/s.
    pub ego_speed: f64,
    pub lead_speed: f64,
    /// Initial bumper-to-bumper gap, m.
    pub initial_gap: f64,
    /// When the lead starts accelerating, s.
    pub event_time: f64,
    /// Signed lead acceleration during the event, m/s².
    pub event_magnitude: f64,
    /// Half-open interval `[start, end)` during which the driver looks away.
    pub inattention_window: Option<(f64, f64)>,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::BrakeDuringInattention,
            ego_speed: 20.0,
            lead_speed: 20.0,
            initial_gap: 40.0,
            event_time: 4.0,
            event_magnitude: -5.0,
            inattention_window: Some((3.0, 7.0)),
            duration: 15.0,
            dt: 0.1,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [("dt", self.dt), ("duration", self.duration)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(FcwError::invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.ego_speed >= 0.0) || !(self.lead_speed >= 0.0) {
            return Err(FcwError::invalid("speeds must be non-negative"));
        }
        if !(self.initial_gap > 0.0) || !self.initial_gap.is_finite() {
            return Err(FcwError::invalid(format!(
                "initial gap must be positive, got {}",
                self.initial_gap
            )));
        }
        if !self.event_magnitude.is_finite() {
            return Err(FcwError::invalid("event magnitude must be finite"));
        }
        if !(self.event_time >= 0.0) || self.event_time > self.duration {
            return Err(FcwError::invalid(format!(
                "event time {} outside [0, {}]",
                self.event_time, self.duration
            )));
        }
        if let Some((a, b)) = self.inattention_window {
            if !(a >= 0.0 && a < b && b <= self.duration) {
                return Err(FcwError::invalid(format!(
                    "inattention window ({a}, {b}) must be a non-empty interval within [0, {}]",
                    self.duration
                )));
            }
        }
        if self.steps() < 2 {
            return Err(FcwError::invalid("duration must cover at least two steps"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Default inattention window: from 1 s before the event to 3 s after.
    fn default_window(&self) -> (f64, f64) {
        (
            (self.event_time - 1.0).max(0.0),
            (self.event_time + 3.0).min(self.duration),
        )
    }

    /// Shapes `base` into the regime of `kind`.
    ///
    /// - brake during inattention: lead decelerates at `|event_magnitude|`
    ///   inside the window
    /// - accelerate during inattention: ego 25% faster and lead 25% slower
    ///   than base, lead accelerating gently at 0.3 `|event_magnitude|`; the
    ///   gap is set so that without the event the conventional warning
    ///   would fire 1 s after the event
    /// - nominal following: no event, no inattention
    /// - attentive brake: lead brakes 1.6 times harder than base, driver
    ///   always attentive
    pub fn for_kind(kind: ScenarioKind, base: &ScenarioSpec) -> ScenarioSpec {
        let m = base.event_magnitude.abs();
        let window = Some(
            base.inattention_window
                .unwrap_or_else(|| base.default_window()),
        );
        let mut s = ScenarioSpec { kind, ..*base };
        match kind {
            ScenarioKind::BrakeDuringInattention => {
                s.event_magnitude = -m;
                s.inattention_window = window;
            }
            ScenarioKind::AccelerateDuringInattention => {
                s.ego_speed = base.ego_speed * 1.25;
                s.lead_speed = base.lead_speed * 0.75;
                s.event_magnitude = 0.3 * m;
                s.inattention_window = window;
                let p = FcwParams::default();
                let d_w = sda_warning_distance(s.ego_speed, s.lead_speed, &p).unwrap_or(0.0);
                let closing = (s.ego_speed - s.lead_speed).max(0.0);
                s.initial_gap = (d_w + closing * (s.event_time + 1.0)).max(base.initial_gap);
            }
            ScenarioKind::NominalFollowing => {
                s.event_magnitude = 0.0;
                s.inattention_window = None;
            }
            ScenarioKind::AttentiveBrake => {
                s.event_magnitude = -1.6 * m;
                s.inattention_window = None;
            }
        }
        s
    }
}

/// Lead travel since `t = 0` and speed at time `t`.
fn lead_motion(spec: &ScenarioSpec, v0: f64, t: f64) -> (f64, f64) {
    let a = spec.event_magnitude;
    if t <= spec.event_time || a == 0.0 {
        return (v0 * t, v0);
    }
    let before = v0 * spec.event_time;
    let tau = t - spec.event_time;
    let target = if a < 0.0 {
        0.0
    } else {
        v0 + ACCELERATION_SPEED_GAIN
    };
    let tau_end = ((target - v0) / a).max(0.0);
    if tau < tau_end {
        (before + v0 * tau + 0.5 * a * tau * tau, v0 + a * tau)
    } else {
        (
            before + v0 * tau_end + 0.5 * a * tau_end * tau_end + target * (tau - tau_end),
            target,
        )
    }
}

/// Distance covered when braking at `decel` from `v` for `tau` seconds,
/// and the resulting speed.
fn brake(v: f64, decel: f64, tau: f64) -> (f64, f64) {
    let t_stop = v / decel;
    if tau >= t_stop {
        (v * v / (2.0 * decel), 0.0)
    } else {
        (v * tau - 0.5 * decel * tau * tau, v - decel * tau)
    }
}

fn attended_at(window: Option<(f64, f64)>, t: f64) -> bool {
    match window {
        Some((a, b)) => !(t >= a - TIME_EPS && t < b - TIME_EPS),
        None => true,
    }
}

/// Generates an episode with default warning parameters.
pub fn generate(spec: &ScenarioSpec) -> Result<Episode> {
    generate_with(spec, &FcwParams::default())
}

/// Generates an episode; `p` supplies the driver model (reaction time,
/// braking limit, and the warning distance the driver reacts to).
pub fn generate_with(spec: &ScenarioSpec, p: &FcwParams) -> Result<Episode> {
    spec.validate()?;
    p.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = 1.0 + rng.gen_range(-MAX_SPEED_JITTER..=MAX_SPEED_JITTER);
    let ego_v0 = spec.ego_speed * scale;
    let lead_v0 = spec.lead_speed * scale;

    let n = spec.steps();
    let dt = spec.dt;
    let (ego_len, lead_len) = (DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_LENGTH);
    let lead_x0 = spec.initial_gap + 0.5 * (ego_len + lead_len);

    let time = |k: usize| k as f64 * dt;
    let lead: Vec<VehicleState> = (0..n)
        .map(|k| {
            let (d, v) = lead_motion(spec, lead_v0, time(k));
            VehicleState::new(lead_x0 + d, 0.0, 0.0, v)
        })
        .collect();
    let attended: Vec<bool> = (0..n)
        .map(|k| attended_at(spec.inattention_window, time(k)))
        .collect();

    let mut ego = Vec::with_capacity(n);
    let (mut x, mut v) = (0.0f64, ego_v0);
    let mut noticed_at: Option<f64> = None;
    let mut braking = false;
    for k in 0..n {
        let t = time(k);
        let here = VehicleState::new(x, 0.0, 0.0, v);
        ego.push(here);
        if k + 1 == n {
            break;
        }
        let l = &lead[k];
        if !braking && noticed_at.is_none() && attended[k] && v > l.speed {
            let gap = longitudinal_gap(&here, l, ego_len, lead_len);
            if gap < sda_warning_distance(v, l.speed, p)? {
                noticed_at = Some(t);
            }
        }
        if let Some(tn) = noticed_at {
            if t + TIME_EPS >= tn + p.t_dr {
                braking = true;
                noticed_at = None;
            }
        }
        if braking {
            let (d, v_next) = brake(v, p.a_ego_max, dt);
            x += d;
            v = v_next;
            if v <= lead[k + 1].speed {
                braking = false;
            }
        } else {
            x += v * dt;
        }
    }

    let gaps: Vec<f64> = ego
        .iter()
        .zip(&lead)
        .map(|(e, l)| longitudinal_gap(e, l, ego_len, lead_len))
        .collect();
    let first_violation = gaps.iter().position(|&g| g < LABEL_GAP_THRESHOLD);
    let label = first_violation.is_some();
    let preferred = first_violation.map(|kv| {
        (0..=kv)
            .rev()
            .find(|&k| maneuver_avoids_contact(&ego[k], &lead[k..], dt, p, ego_len, lead_len))
            .map_or(0.0, time)
    });

    let end = time(n - 1);
    Ok(Episode {
        id: format!("{}_{}", spec.kind, spec.seed),
        dt,
        deployed_fcw_time: DEFAULT_DEPLOYED_FCW_TIME.min(end),
        ego: Trajectory::new(dt, 0.0, ego)?,
        lead: Trajectory::new(dt, 0.0, lead)?,
        attention: AttentionTrace::new(dt, 0.0, attended),
        annotation: Annotation::unanimous(label, OBSERVERS, preferred),
        ego_length: ego_len,
        lead_length: lead_len,
    })
}

/// Ego keeps its speed for the reaction time, then brakes to a stop at its
/// limit. `lead` starts at the maneuver onset.
fn maneuver_avoids_contact(
    ego: &VehicleState,
    lead: &[VehicleState],
    dt: f64,
    p: &FcwParams,
    ego_len: f64,
    lead_len: f64,
) -> bool {
    lead.iter().enumerate().all(|(j, l)| {
        let tau = j as f64 * dt;
        let travelled = if tau <= p.t_dr {
            ego.speed * tau
        } else {
            ego.speed * p.t_dr + brake(ego.speed, p.a_ego_max, tau - p.t_dr).0
        };
        longitudinal_gap(&ego.advanced(travelled), l, ego_len, lead_len) > 0.0
    })
}

/// One generated episode with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEpisode {
    pub spec: ScenarioSpec,
    pub episode: Episode,
    /// Ground truth: warning needed.
    pub label: bool,
}

/// Scenario specs for a suite: `n_per_kind` of each kind, with gap,
/// event time and event magnitude perturbed around `base` and one episode
/// seed each, all drawn from `seed`.
pub fn suite_specs(n_per_kind: usize, base: &ScenarioSpec, seed: u64) -> Result<Vec<ScenarioSpec>> {
    if n_per_kind == 0 {
        return Err(FcwError::invalid("n_per_kind must be at least 1"));
    }
    base.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(4 * n_per_kind);
    for kind in ScenarioKind::ALL {
        for _ in 0..n_per_kind {
            let shift: f64 = rng.gen_range(-0.5..=0.5);
            let magnitude_scale: f64 = rng.gen_range(0.9..=1.1);
            let gap_scale: f64 = rng.gen_range(0.95..=1.05);
            let episode_seed: u64 = rng.gen();

            let mut varied = *base;
            varied.event_time = (base.event_time + shift).clamp(0.0, base.duration);
            varied.event_magnitude = base.event_magnitude * magnitude_scale;
            varied.inattention_window = base.inattention_window.map(|(a, b)| {
                (
                    (a + shift).clamp(0.0, base.duration),
                    (b + shift).clamp(0.0, base.duration),
                )
            });
            let mut spec = ScenarioSpec::for_kind(kind, &varied);
            spec.initial_gap *= gap_scale;
            spec.seed = episode_seed;
            specs.push(spec);
        }
    }
    Ok(specs)
}

/// Generates a labelled suite covering every scenario kind. Episode ids are
/// `<kind>_<index>` with a zero-padded index.
pub fn generate_suite(
    n_per_kind: usize,
    base: &ScenarioSpec,
    seed: u64,
    p: &FcwParams,
) -> Result<Vec<SuiteEpisode>> {
    let specs = suite_specs(n_per_kind, base, seed)?;
    specs
        .into_iter()
        .enumerate()
        .map(|(i, spec)| {
            let mut episode = generate_with(&spec, p)?;
            episode.id = format!("{}_{:03}", spec.kind, i % n_per_kind);
            let label = majority_validity(&episode.annotation.votes)?;
            Ok(SuiteEpisode {
                spec,
                episode,
                label,
            })
        })
        .collect()
}
