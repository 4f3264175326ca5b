//! Episode and trajectory types, validation, resampling and longitudinal gap
//! geometry.
//!
//! Everything here is a plain value type. Operations are pure; episodes can
//! be processed in parallel without coordination.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FcwError, Result, Violation};

pub mod file;

pub use file::{
    episode_from_json, episode_to_json, read_episode, read_episode_dir, write_episode, StateRecord,
};

/// Sampling step every episode is brought to before warning evaluation.
pub const CANONICAL_DT: f64 = 0.1;
/// Vehicle length used when an input does not provide one.
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.5;
/// Time of the production alert inside an episode window.
pub const DEFAULT_DEPLOYED_FCW_TIME: f64 = 5.0;
/// 5 s before the deployed alert and 10 s after.
pub const DEFAULT_EPISODE_SPAN: f64 = 15.0;

/// Slack for comparing sample times built from `start + i * dt`.
pub(crate) const TIME_EPS: f64 = 1e-9;

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w -= 2.0 * PI;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// World-frame position, meters.
    pub x: f64,
    pub y: f64,
    /// Radians, in `[-pi, pi)`.
    pub heading: f64,
    /// Meters per second along `heading`, never negative.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading,
            speed,
        }
    }

    /// Unit vector along the heading.
    pub fn heading_unit(&self) -> (f64, f64) {
        let (s, c) = self.heading.sin_cos();
        (c, s)
    }

    /// State reached after travelling `distance` meters along the current
    /// heading, keeping heading and speed.
    pub fn advanced(&self, distance: f64) -> Self {
        let (ux, uy) = self.heading_unit();
        Self {
            x: self.x + distance * ux,
            y: self.y + distance * uy,
            ..*self
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if !self.x.is_finite() || !self.y.is_finite() {
            out.push(Violation::new(
                format!("{path}.position"),
                "position components must be finite",
            ));
        }
        if !(self.speed >= 0.0) || !self.speed.is_finite() {
            out.push(Violation::new(
                format!("{path}.speed"),
                format!("speed must be finite and non-negative, got {}", self.speed),
            ));
        }
        if !(-PI..PI).contains(&self.heading) {
            out.push(Violation::new(
                format!("{path}.heading"),
                format!("heading must lie in [-pi, pi), got {}", self.heading),
            ));
        }
    }
}

/// Uniformly sampled sequence of vehicle states. State `i` is at
/// `start_time + i * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub start_time: f64,
    pub states: Vec<VehicleState>,
}

impl Trajectory {
    pub fn new(dt: f64, start_time: f64, states: Vec<VehicleState>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FcwError::invalid(format!("dt must be positive, got {dt}")));
        }
        if states.is_empty() {
            return Err(FcwError::invalid(
                "trajectory must contain at least one state",
            ));
        }
        Ok(Self {
            dt,
            start_time,
            states,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.start_time + i as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.states.len().saturating_sub(1))
    }

    pub fn first(&self) -> &VehicleState {
        &self.states[0]
    }

    pub fn last(&self) -> &VehicleState {
        &self.states[self.states.len() - 1]
    }

    /// Sub-trajectory over `[from, to]` inclusive, keeping absolute times.
    pub fn window(&self, from: usize, to: usize) -> Trajectory {
        Trajectory {
            dt: self.dt,
            start_time: self.time_at(from),
            states: self.states[from..=to].to_vec(),
        }
    }

    fn check(&self, path: &str, out: &mut Vec<Violation>) {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            out.push(Violation::new(format!("{path}.dt"), "dt must be positive"));
        }
        if !self.start_time.is_finite() {
            out.push(Violation::new(
                format!("{path}.start_time"),
                "start_time must be finite",
            ));
        }
        if self.states.is_empty() {
            out.push(Violation::new(
                format!("{path}.states"),
                "sequence must be non-empty",
            ));
        }
        for (i, s) in self.states.iter().enumerate() {
            s.check(&format!("{path}.states[{i}]"), out);
        }
    }
}

/// Per-timestep flag: is the driver looking at the lead vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    pub dt: f64,
    pub start_time: f64,
    pub attended: Vec<bool>,
}

impl AttentionTrace {
    pub fn new(dt: f64, start_time: f64, attended: Vec<bool>) -> Self {
        Self {
            dt,
            start_time,
            attended,
        }
    }

    pub fn fully_attended(dt: f64, start_time: f64, n: usize) -> Self {
        Self::new(dt, start_time, vec![true; n])
    }

    pub fn len(&self) -> usize {
        self.attended.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attended.is_empty()
    }
}

/// Observer judgements for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// One vote per observer: was a warning required.
    pub votes: Vec<bool>,
    /// When that observer would have warned; only set for valid votes.
    pub preferred_times: Vec<Option<f64>>,
}

impl Annotation {
    pub fn unanimous(valid: bool, observers: usize, preferred_time: Option<f64>) -> Self {
        let preferred = if valid { preferred_time } else { None };
        Self {
            votes: vec![valid; observers],
            preferred_times: vec![preferred; observers],
        }
    }
}

/// One FCW event window: ego and lead kinematics, driver attention and
/// observer annotations, all on the same time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub dt: f64,
    pub deployed_fcw_time: f64,
    pub ego: Trajectory,
    pub lead: Trajectory,
    pub attention: AttentionTrace,
    pub annotation: Annotation,
    pub ego_length: f64,
    pub lead_length: f64,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.ego.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.ego.start_time
    }

    pub fn end_time(&self) -> f64 {
        self.ego.end_time()
    }

    pub fn time_at(&self, i: usize) -> f64 {
        self.ego.time_at(i)
    }

    /// Bumper-to-bumper longitudinal gap at step `i`.
    pub fn gap_at(&self, i: usize) -> f64 {
        longitudinal_gap(
            &self.ego.states[i],
            &self.lead.states[i],
            self.ego_length,
            self.lead_length,
        )
    }

    pub fn fully_attended(&self) -> bool {
        self.attention.attended.iter().all(|&a| a)
    }

    /// Copy of the episode on a new time grid. Kinematics are linearly
    /// interpolated; attention holds the most recent source sample.
    pub fn resampled(&self, dt_new: f64) -> Result<Episode> {
        let ego = resample(&self.ego, dt_new)?;
        let lead = resample(&self.lead, dt_new)?;
        let n = ego.len().min(lead.len());
        let src = &self.attention;
        let attended = (0..n)
            .map(|k| {
                let t = ego.time_at(k);
                let idx = ((t - src.start_time) / src.dt + TIME_EPS).floor().max(0.0) as usize;
                src.attended[idx.min(src.attended.len().saturating_sub(1))]
            })
            .collect();
        Ok(Episode {
            id: self.id.clone(),
            dt: dt_new,
            deployed_fcw_time: self.deployed_fcw_time,
            attention: AttentionTrace::new(dt_new, ego.start_time, attended),
            ego,
            lead,
            annotation: self.annotation.clone(),
            ego_length: self.ego_length,
            lead_length: self.lead_length,
        })
    }

    /// Resamples to [`CANONICAL_DT`] unless already there.
    pub fn canonical(self) -> Result<Episode> {
        if (self.dt - CANONICAL_DT).abs() <= TIME_EPS {
            Ok(self)
        } else {
            self.resampled(CANONICAL_DT)
        }
    }

    /// Fails with every violation when the episode is not well formed.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_episode(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(FcwError::Validation {
                id: self.id.clone(),
                violations,
            })
        }
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_EPS * (1.0 + a.abs().max(b.abs()))
}

/// Lists every invariant the episode breaks. An empty list means the episode
/// is accepted by every downstream operation.
pub fn validate_episode(e: &Episode) -> Vec<Violation> {
    let mut out = Vec::new();

    if e.id.trim().is_empty() {
        out.push(Violation::new("id", "identifier must be non-empty"));
    }
    if !(e.dt > 0.0) || !e.dt.is_finite() {
        out.push(Violation::new("dt", "dt must be positive"));
    }
    for (name, len) in [("ego_length", e.ego_length), ("lead_length", e.lead_length)] {
        if !(len > 0.0) || !len.is_finite() {
            out.push(Violation::new(name, "vehicle length must be positive"));
        }
    }

    e.ego.check("ego", &mut out);
    e.lead.check("lead", &mut out);

    let n = e.ego.len();
    if e.lead.len() != n {
        out.push(Violation::new(
            "lead.states",
            format!(
                "length mismatch: lead has {} states, ego has {n}",
                e.lead.len()
            ),
        ));
    }
    if e.attention.len() != n {
        out.push(Violation::new(
            "attention.attended",
            format!(
                "length mismatch: attention has {} samples, ego has {n}",
                e.attention.len()
            ),
        ));
    }

    for (path, dt) in [
        ("ego.dt", e.ego.dt),
        ("lead.dt", e.lead.dt),
        ("attention.dt", e.attention.dt),
    ] {
        if e.dt > 0.0 && dt > 0.0 && !same_time(dt, e.dt) {
            out.push(Violation::new(
                path,
                format!("dt {dt} differs from episode dt {}", e.dt),
            ));
        }
    }
    if !(e.attention.dt > 0.0) {
        out.push(Violation::new("attention.dt", "dt must be positive"));
    }
    for (path, start) in [
        ("lead.start_time", e.lead.start_time),
        ("attention.start_time", e.attention.start_time),
    ] {
        if !same_time(start, e.ego.start_time) {
            out.push(Violation::new(
                path,
                format!(
                    "start time {start} differs from ego start {}",
                    e.ego.start_time
                ),
            ));
        }
    }

    let (start, end) = (e.start_time(), e.end_time());
    let within = |t: f64| t.is_finite() && t >= start - TIME_EPS && t <= end + TIME_EPS;
    if !within(e.deployed_fcw_time) {
        out.push(Violation::new(
            "deployed_fcw_time",
            format!(
                "deployed time {} outside episode span [{start}, {end}]",
                e.deployed_fcw_time
            ),
        ));
    }

    let ann = &e.annotation;
    if ann.votes.is_empty() {
        out.push(Violation::new(
            "annotation.votes",
            "at least one vote is required",
        ));
    }
    if ann.preferred_times.len() != ann.votes.len() {
        out.push(Violation::new(
            "annotation.preferred_times",
            format!(
                "length mismatch: {} preferred times for {} votes",
                ann.preferred_times.len(),
                ann.votes.len()
            ),
        ));
    }
    for (i, (vote, time)) in ann.votes.iter().zip(&ann.preferred_times).enumerate() {
        match (vote, time) {
            (false, Some(_)) => out.push(Violation::new(
                format!("annotation.preferred_times[{i}]"),
                "preferred time given for an observer who voted not-valid",
            )),
            (true, Some(t)) if !within(*t) => out.push(Violation::new(
                format!("annotation.preferred_times[{i}]"),
                format!("preferred time {t} outside episode span [{start}, {end}]"),
            )),
            _ => {}
        }
    }

    out
}

/// Linearly interpolates positions, speeds and headings onto a new uniform
/// grid starting at the same time. Grid points that coincide with source
/// samples reproduce them exactly.
pub fn resample(t: &Trajectory, dt_new: f64) -> Result<Trajectory> {
    if !(dt_new > 0.0) || !dt_new.is_finite() {
        return Err(FcwError::invalid(format!(
            "resample step must be positive, got {dt_new}"
        )));
    }
    if t.states.is_empty() {
        return Err(FcwError::invalid("cannot resample an empty trajectory"));
    }
    if !(t.dt > 0.0) {
        return Err(FcwError::invalid("source trajectory dt must be positive"));
    }
    if dt_new == t.dt {
        return Ok(t.clone());
    }

    let last = t.states.len() - 1;
    let span = last as f64 * t.dt;
    let m = (span / dt_new + TIME_EPS).floor() as usize + 1;
    let states = (0..m)
        .map(|k| {
            let u = k as f64 * dt_new / t.dt;
            let nearest = u.round();
            if (u - nearest).abs() < 1e-9 {
                return t.states[(nearest as usize).min(last)];
            }
            let i0 = (u.floor() as usize).min(last);
            let i1 = (i0 + 1).min(last);
            let frac = u - i0 as f64;
            lerp_state(&t.states[i0], &t.states[i1], frac)
        })
        .collect();
    Ok(Trajectory {
        dt: dt_new,
        start_time: t.start_time,
        states,
    })
}

fn lerp_state(a: &VehicleState, b: &VehicleState, frac: f64) -> VehicleState {
    let lerp = |p: f64, q: f64| p + (q - p) * frac;
    let dh = wrap_angle(b.heading - a.heading);
    VehicleState {
        x: lerp(a.x, b.x),
        y: lerp(a.y, b.y),
        heading: wrap_angle(a.heading + dh * frac),
        speed: lerp(a.speed, b.speed),
    }
}

/// Recomputes speeds from positions: central differences inside, one-sided
/// at the ends. Used when an input omits speeds.
pub fn speeds_from_positions(positions: &[(f64, f64)], dt: f64) -> Vec<f64> {
    let n = positions.len();
    let dist = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0).hypot(b.1 - a.1);
    (0..n)
        .map(|i| match n {
            0 | 1 => 0.0,
            _ if i == 0 => dist(positions[0], positions[1]) / dt,
            _ if i == n - 1 => dist(positions[n - 2], positions[n - 1]) / dt,
            _ => dist(positions[i - 1], positions[i + 1]) / (2.0 * dt),
        })
        .collect()
}

/// Projection of the lead position onto the ego heading, minus half of each
/// vehicle length. Lateral offset is ignored. Negative means overlap.
pub fn longitudinal_gap(
    ego: &VehicleState,
    lead: &VehicleState,
    ego_length: f64,
    lead_length: f64,
) -> f64 {
    let (ux, uy) = ego.heading_unit();
    let along = (lead.x - ego.x) * ux + (lead.y - ego.y) * uy;
    along - 0.5 * (ego_length + lead_length)
}
