//! Rule-based warning methods.
//!
//! - conventional stop distance: warn when the gap is below the distance
//!   needed for the ego to stop behind a lead that brakes at its limit
//! - attention-aware stop distance: the same, shifted by how far the
//!   driver's believed lead speed is off from the actual one
//! - AttenD gaze-only: warn when the eyes-on-target time buffer runs out
//! - AttenD gaze+scene: warn only when both the buffer and the stop distance
//!   call for it at the same step

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::counterfactual::perceived_lead_trajectory;
use crate::error::{FcwError, Result};
use crate::kinematics::{AttentionTrace, Episode};

/// Physical and algorithmic constants shared by every method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FcwParams {
    /// Driver reaction time, s.
    pub t_dr: f64,
    /// Maximum ego deceleration magnitude, m/s².
    pub a_ego_max: f64,
    /// Maximum lead deceleration magnitude, m/s².
    pub a_lead_max: f64,
    /// Gain on the believed-minus-actual lead speed, s.
    pub alpha: f64,
    /// AttenD buffer capacity, s.
    pub attend_buffer_max: f64,
    /// Buffer seconds lost per second of looking away.
    pub attend_decrement_rate: f64,
    /// Buffer seconds regained per second of looking at the lead.
    pub attend_increment_rate: f64,
    /// Minimum hypothesized future gap below which forecast methods warn, m.
    pub min_gap_warn: f64,
    /// Forecast horizon, s.
    pub horizon: f64,
    /// Forecast input history, s.
    pub history: f64,
}

impl Default for FcwParams {
    fn default() -> Self {
        Self {
            t_dr: 1.5,
            a_ego_max: 6.0,
            a_lead_max: 6.0,
            alpha: 1.8,
            attend_buffer_max: 2.0,
            attend_decrement_rate: 1.0,
            attend_increment_rate: 1.0,
            min_gap_warn: 2.0,
            horizon: 3.0,
            history: 1.0,
        }
    }
}

impl FcwParams {
    pub const FIELD_NAMES: [&'static str; 10] = [
        "t_dr",
        "a_ego_max",
        "a_lead_max",
        "alpha",
        "attend_buffer_max",
        "attend_decrement_rate",
        "attend_increment_rate",
        "min_gap_warn",
        "horizon",
        "history",
    ];

    fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "t_dr" => &mut self.t_dr,
            "a_ego_max" => &mut self.a_ego_max,
            "a_lead_max" => &mut self.a_lead_max,
            "alpha" => &mut self.alpha,
            "attend_buffer_max" => &mut self.attend_buffer_max,
            "attend_decrement_rate" => &mut self.attend_decrement_rate,
            "attend_increment_rate" => &mut self.attend_increment_rate,
            "min_gap_warn" => &mut self.min_gap_warn,
            "horizon" => &mut self.horizon,
            "history" => &mut self.history,
            _ => return None,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let mut copy = *self;
        copy.field_mut(name).map(|v| *v)
    }

    /// Sets a field by name. Unknown names are an error.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match self.field_mut(name) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(FcwError::invalid(format!("unknown parameter `{name}`"))),
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        self.set(name, value)?;
        Ok(self)
    }

    /// All fields strictly positive and finite, except `alpha` which may be 0.
    pub fn validate(&self) -> Result<()> {
        for name in Self::FIELD_NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            let ok = if name == "alpha" { v >= 0.0 } else { v > 0.0 };
            if !ok || !v.is_finite() {
                let bound = if name == "alpha" { ">= 0" } else { "> 0" };
                return Err(FcwError::invalid(format!(
                    "parameter {name} must be finite and {bound}, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-step warn decisions of one method on one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningTrace {
    pub dt: f64,
    pub start_time: f64,
    pub warn: Vec<bool>,
    pub first_warning_time: Option<f64>,
}

impl WarningTrace {
    pub fn new(dt: f64, start_time: f64, warn: Vec<bool>) -> Self {
        let first_warning_time = warn
            .iter()
            .position(|&w| w)
            .map(|i| start_time + i as f64 * dt);
        Self {
            dt,
            start_time,
            warn,
            first_warning_time,
        }
    }

    pub fn any(&self) -> bool {
        self.first_warning_time.is_some()
    }

    /// Pointwise conjunction of two traces on the same grid.
    pub fn and(&self, other: &WarningTrace) -> WarningTrace {
        let warn = self
            .warn
            .iter()
            .zip(&other.warn)
            .map(|(&a, &b)| a && b)
            .collect();
        WarningTrace::new(self.dt, self.start_time, warn)
    }

    /// `t_s,warn` rows with a header line; warn is 0 or 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,warn\n");
        for (i, w) in self.warn.iter().enumerate() {
            let t = self.start_time + i as f64 * self.dt;
            let _ = writeln!(out, "{t},{}", u8::from(*w));
        }
        out
    }
}

/// Time of the earliest warning, if any.
pub fn first_warning_time(w: &WarningTrace) -> Option<f64> {
    w.warn
        .iter()
        .position(|&x| x)
        .map(|i| w.start_time + i as f64 * w.dt)
}

fn check_speeds(speeds: &[f64]) -> Result<()> {
    match speeds.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(v) => Err(FcwError::invalid(format!(
            "speeds must be finite and non-negative, got {v}"
        ))),
        None => Ok(()),
    }
}

/// Unclamped stop distance: ego reaction travel plus ego braking distance
/// minus lead braking distance.
fn stop_distance_core(v_ego: f64, v_lead: f64, p: &FcwParams) -> f64 {
    v_ego * p.t_dr + v_ego * v_ego / (2.0 * p.a_ego_max) - v_lead * v_lead / (2.0 * p.a_lead_max)
}

/// Conventional warning distance, clamped at zero.
pub fn sda_warning_distance(v_ego: f64, v_lead: f64, p: &FcwParams) -> Result<f64> {
    check_speeds(&[v_ego, v_lead])?;
    Ok(stop_distance_core(v_ego, v_lead, p).max(0.0))
}

/// Warning distance with the driver's believed lead speed `v_hat_lead`
/// folded in. Larger than the conventional distance when the driver thinks
/// the lead is faster than it is.
pub fn attention_aware_warning_distance(
    v_ego: f64,
    v_lead: f64,
    v_hat_lead: f64,
    p: &FcwParams,
) -> Result<f64> {
    check_speeds(&[v_ego, v_lead, v_hat_lead])?;
    Ok((stop_distance_core(v_ego, v_lead, p) + p.alpha * (v_hat_lead - v_lead)).max(0.0))
}

fn prepare(e: &Episode, p: &FcwParams) -> Result<()> {
    p.validate()?;
    e.ensure_valid()
}

/// Per-step conventional warning distances.
pub fn sda_distances(e: &Episode, p: &FcwParams) -> Result<Vec<f64>> {
    prepare(e, p)?;
    e.ego
        .states
        .iter()
        .zip(&e.lead.states)
        .map(|(ego, lead)| sda_warning_distance(ego.speed, lead.speed, p))
        .collect()
}

/// Per-step attention-aware warning distances and the believed lead speeds
/// they used.
pub fn attention_aware_distances(e: &Episode, p: &FcwParams) -> Result<(Vec<f64>, Vec<f64>)> {
    prepare(e, p)?;
    let perceived = perceived_lead_trajectory(&e.lead, &e.attention)?;
    let v_hat: Vec<f64> = perceived.speeds().collect();
    let d = e
        .ego
        .states
        .iter()
        .zip(&e.lead.states)
        .zip(&v_hat)
        .map(|((ego, lead), &vh)| attention_aware_warning_distance(ego.speed, lead.speed, vh, p))
        .collect::<Result<Vec<_>>>()?;
    Ok((d, v_hat))
}

fn gap_below(e: &Episode, distances: &[f64]) -> WarningTrace {
    let warn = distances
        .iter()
        .enumerate()
        .map(|(i, &d_w)| e.gap_at(i) < d_w)
        .collect();
    WarningTrace::new(e.dt, e.start_time(), warn)
}

/// Conventional FCW: warn whenever the gap is inside the stop distance.
pub fn evaluate_sda(e: &Episode, p: &FcwParams) -> Result<WarningTrace> {
    Ok(gap_below(e, &sda_distances(e, p)?))
}

/// Attention-aware FCW.
pub fn evaluate_attention_aware(e: &Episode, p: &FcwParams) -> Result<WarningTrace> {
    let (d, _) = attention_aware_distances(e, p)?;
    Ok(gap_below(e, &d))
}

/// AttenD buffer level at every step.
///
/// Starts full. The change into step `i` is driven by the attention state
/// over the preceding interval, so `k` unattended steps from a full buffer
/// drain exactly `k * dt * decrement_rate`. Levels within 1e-9 of a bound
/// snap to it so decimal steps land on zero exactly.
pub fn attend_buffer_trace(attention: &AttentionTrace, p: &FcwParams) -> Vec<f64> {
    const SNAP: f64 = 1e-9;
    let max = p.attend_buffer_max;
    let mut level = max;
    let mut out = Vec::with_capacity(attention.len());
    for i in 0..attention.len() {
        if i > 0 {
            let rate = if attention.attended[i - 1] {
                p.attend_increment_rate
            } else {
                -p.attend_decrement_rate
            };
            level += rate * attention.dt;
            if level <= SNAP {
                level = 0.0;
            } else if level >= max - SNAP {
                level = max;
            }
        }
        out.push(level);
    }
    out
}

/// AttenD gaze-only: warn while the buffer is empty.
pub fn evaluate_attend_gaze_only(e: &Episode, p: &FcwParams) -> Result<WarningTrace> {
    prepare(e, p)?;
    let warn = attend_buffer_trace(&e.attention, p)
        .into_iter()
        .map(|b| b <= 0.0)
        .collect();
    Ok(WarningTrace::new(e.dt, e.start_time(), warn))
}

/// AttenD gaze+scene: buffer empty and gap inside the stop distance at the
/// same step.
pub fn evaluate_attend_gaze_scene(e: &Episode, p: &FcwParams) -> Result<WarningTrace> {
    let gaze = evaluate_attend_gaze_only(e, p)?;
    let scene = evaluate_sda(e, p)?;
    Ok(gaze.and(&scene))
}
