//! The driver's belief about the lead vehicle.
//!
//! While the driver looks at the lead vehicle the belief is the actual state.
//! While looking away the driver keeps extrapolating the last observed state
//! at constant velocity (speed and heading held). When attention returns the
//! belief snaps back to the actual state with no blending.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FcwError, Result};
use crate::kinematics::{AttentionTrace, Trajectory, VehicleState, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerceivedState {
    pub x: f64,
    pub y: f64,
    /// Heading of the state the belief is extrapolated from.
    pub heading: f64,
    pub speed: f64,
    /// True when the belief equals the actual state at this step.
    pub observed: bool,
}

impl PerceivedState {
    pub fn as_vehicle_state(&self) -> VehicleState {
        VehicleState::new(self.x, self.y, self.heading, self.speed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceivedTrajectory {
    pub dt: f64,
    pub start_time: f64,
    pub states: Vec<PerceivedState>,
}

impl PerceivedTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn speeds(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.speed)
    }

    /// The belief as an ordinary trajectory, so it can feed forecasters.
    pub fn to_trajectory(&self) -> Trajectory {
        Trajectory {
            dt: self.dt,
            start_time: self.start_time,
            states: self
                .states
                .iter()
                .map(PerceivedState::as_vehicle_state)
                .collect(),
        }
    }

    /// `t_s,x_m,y_m,speed_mps,observed` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,x_m,y_m,speed_mps,observed\n");
        for (i, s) in self.states.iter().enumerate() {
            let t = self.start_time + i as f64 * self.dt;
            let _ = writeln!(out, "{t},{},{},{},{}", s.x, s.y, s.speed, s.observed);
        }
        out
    }
}

fn check_aligned(lead: &Trajectory, attention: &AttentionTrace) -> Result<()> {
    if lead.states.is_empty() {
        return Err(FcwError::invalid("lead trajectory is empty"));
    }
    if lead.len() != attention.len() {
        return Err(FcwError::invalid(format!(
            "lead has {} states but attention has {} samples",
            lead.len(),
            attention.len()
        )));
    }
    if (lead.dt - attention.dt).abs() > TIME_EPS
        || (lead.start_time - attention.start_time).abs() > TIME_EPS
    {
        return Err(FcwError::invalid(
            "lead trajectory and attention trace are on different time grids",
        ));
    }
    Ok(())
}

/// Builds the perceived lead trajectory.
///
/// The first step counts as observed even if the trace says otherwise: the
/// driver saw the scene before the window opened.
pub fn perceived_lead_trajectory(
    lead: &Trajectory,
    attention: &AttentionTrace,
) -> Result<PerceivedTrajectory> {
    check_aligned(lead, attention)?;

    let mut last = 0usize;
    let states = lead
        .states
        .iter()
        .enumerate()
        .map(|(i, actual)| {
            if i == 0 || attention.attended[i] {
                last = i;
                PerceivedState {
                    x: actual.x,
                    y: actual.y,
                    heading: actual.heading,
                    speed: actual.speed,
                    observed: true,
                }
            } else {
                let seen = &lead.states[last];
                let held = seen.advanced(seen.speed * (i - last) as f64 * lead.dt);
                PerceivedState {
                    x: held.x,
                    y: held.y,
                    heading: seen.heading,
                    speed: seen.speed,
                    observed: false,
                }
            }
        })
        .collect();

    Ok(PerceivedTrajectory {
        dt: lead.dt,
        start_time: lead.start_time,
        states,
    })
}

/// Perceived lead speed at the step containing `t`.
pub fn counterfactual_speed_at(
    lead: &Trajectory,
    attention: &AttentionTrace,
    t: f64,
) -> Result<f64> {
    check_aligned(lead, attention)?;
    let rel = (t - lead.start_time) / lead.dt;
    if !rel.is_finite() || rel < -TIME_EPS {
        return Err(FcwError::invalid(format!(
            "t={t} precedes the trajectory start {}",
            lead.start_time
        )));
    }
    let idx = (rel + TIME_EPS).floor() as usize;
    if idx >= lead.len() {
        return Err(FcwError::invalid(format!(
            "t={t} is past the trajectory end {}",
            lead.end_time()
        )));
    }
    // Only the most recent observed step matters.
    let seen = (0..=idx)
        .rev()
        .find(|&j| j == 0 || attention.attended[j])
        .unwrap_or(0);
    Ok(lead.states[seen].speed)
}
