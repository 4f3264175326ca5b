//! Joint future-trajectory providers and the minimum-future-gap warning rule.
//!
//! At every evaluated step the trailing `history` window of ego and lead
//! states is handed to a [`Forecaster`]; the step warns when the smallest
//! gap over the forecast future drops below `min_gap_warn`. The lead history
//! is either the actual trajectory or the driver's perceived one.
//!
//! Forecast trajectories use times relative to the current step: state 0 is
//! "now" and the last state is `horizon` seconds ahead.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::counterfactual::perceived_lead_trajectory;
use crate::error::{FcwError, Result};
use crate::kinematics::file::states_from_records;
use crate::kinematics::{
    longitudinal_gap, Episode, StateRecord, Trajectory, VehicleState, TIME_EPS,
};
use crate::warning::{FcwParams, WarningTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRequest {
    pub ego_history: Trajectory,
    /// Actual or perceived, aligned with `ego_history`.
    pub lead_history: Trajectory,
    pub horizon: f64,
}

impl ForecastRequest {
    fn validate(&self) -> Result<()> {
        if self.ego_history.is_empty() || self.lead_history.is_empty() {
            return Err(FcwError::invalid("forecast history is empty"));
        }
        if self.ego_history.len() != self.lead_history.len()
            || (self.ego_history.dt - self.lead_history.dt).abs() > TIME_EPS
        {
            return Err(FcwError::invalid("ego and lead histories are not aligned"));
        }
        if !(self.horizon > 0.0) || !(self.ego_history.dt > 0.0) {
            return Err(FcwError::invalid("horizon and dt must be positive"));
        }
        if self.steps() == 0 {
            return Err(FcwError::invalid(format!(
                "horizon {} is shorter than one step of {}",
                self.horizon, self.ego_history.dt
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.ego_history.dt
    }

    /// Number of future steps after "now".
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt()).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub ego_future: Trajectory,
    pub lead_future: Trajectory,
}

/// Which request a forecaster is answering. In-process forecasters ignore
/// it; precomputed ones look their answer up by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForecastKey<'a> {
    pub episode_id: &'a str,
    pub timestep: usize,
}

pub trait Forecaster {
    fn forecast(&self, key: ForecastKey<'_>, request: &ForecastRequest) -> Result<Forecast>;
}

/// Builds a relative-time future from a closed-form motion profile mapping
/// elapsed time to (distance travelled, speed).
fn roll_out(
    from: &VehicleState,
    dt: f64,
    steps: usize,
    profile: impl Fn(f64) -> (f64, f64),
) -> Trajectory {
    let states = (0..=steps)
        .map(|k| {
            let (dist, speed) = profile(k as f64 * dt);
            VehicleState {
                speed,
                ..from.advanced(dist)
            }
        })
        .collect();
    Trajectory {
        dt,
        start_time: 0.0,
        states,
    }
}

fn constant_velocity_profile(v: f64) -> impl Fn(f64) -> (f64, f64) {
    move |tau| (v * tau, v)
}

/// Constant acceleration `a` from speed `v`, stopping at zero speed.
fn accel_profile(v: f64, a: f64) -> impl Fn(f64) -> (f64, f64) {
    move |tau| {
        if a < 0.0 {
            let t_stop = v / -a;
            if tau >= t_stop {
                return (v * v / (-2.0 * a), 0.0);
            }
        }
        (v * tau + 0.5 * a * tau * tau, (v + a * tau).max(0.0))
    }
}

/// Each vehicle keeps its final speed and heading.
pub fn forecast_constant_velocity(r: &ForecastRequest) -> Result<Forecast> {
    r.validate()?;
    let (dt, n) = (r.dt(), r.steps());
    let ego = r.ego_history.last();
    let lead = r.lead_history.last();
    Ok(Forecast {
        ego_future: roll_out(ego, dt, n, constant_velocity_profile(ego.speed)),
        lead_future: roll_out(lead, dt, n, constant_velocity_profile(lead.speed)),
    })
}

/// Least-squares slope of speed against time over the history.
fn speed_slope(t: &Trajectory) -> f64 {
    let n = t.len() as f64;
    // centred on the first sample so a constant history gives exactly zero
    let v0 = t.states[0].speed;
    let tm = (t.len() - 1) as f64 * t.dt / 2.0;
    let wm = t.states.iter().map(|s| s.speed - v0).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, s) in t.states.iter().enumerate() {
        let dtj = j as f64 * t.dt - tm;
        num += dtj * (s.speed - v0 - wm);
        den += dtj * dtj;
    }
    num / den
}

/// Each vehicle keeps the acceleration fitted to its history speeds, along
/// its final heading, until it stops.
pub fn forecast_constant_acceleration(r: &ForecastRequest) -> Result<Forecast> {
    r.validate()?;
    if r.ego_history.len() < 2 {
        return Err(FcwError::invalid(
            "constant-acceleration forecast needs at least two history steps",
        ));
    }
    let (dt, n) = (r.dt(), r.steps());
    let fut = |t: &Trajectory| {
        let last = t.last();
        roll_out(last, dt, n, accel_profile(last.speed, speed_slope(t)))
    };
    Ok(Forecast {
        ego_future: fut(&r.ego_history),
        lead_future: fut(&r.lead_history),
    })
}

/// Lead brakes at `decel` until stopped; ego holds its velocity.
pub fn forecast_worst_case_brake(r: &ForecastRequest, decel: f64) -> Result<Forecast> {
    if !(decel > 0.0) || !decel.is_finite() {
        return Err(FcwError::invalid(format!(
            "braking deceleration must be positive, got {decel}"
        )));
    }
    r.validate()?;
    let (dt, n) = (r.dt(), r.steps());
    let ego = r.ego_history.last();
    let lead = r.lead_history.last();
    Ok(Forecast {
        ego_future: roll_out(ego, dt, n, constant_velocity_profile(ego.speed)),
        lead_future: roll_out(lead, dt, n, accel_profile(lead.speed, -decel)),
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantVelocity;

impl Forecaster for ConstantVelocity {
    fn forecast(&self, _: ForecastKey<'_>, r: &ForecastRequest) -> Result<Forecast> {
        forecast_constant_velocity(r)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantAcceleration;

impl Forecaster for ConstantAcceleration {
    fn forecast(&self, _: ForecastKey<'_>, r: &ForecastRequest) -> Result<Forecast> {
        forecast_constant_acceleration(r)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WorstCaseBrake {
    pub decel: f64,
}

impl Forecaster for WorstCaseBrake {
    fn forecast(&self, _: ForecastKey<'_>, r: &ForecastRequest) -> Result<Forecast> {
        forecast_worst_case_brake(r, self.decel)
    }
}

/// One line of an external forecast file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastRecord {
    pub episode_id: String,
    pub timestep_index: usize,
    pub dt_s: f64,
    pub ego_future: Vec<StateRecord>,
    pub lead_future: Vec<StateRecord>,
}

impl ForecastRecord {
    pub fn new(episode_id: &str, timestep_index: usize, f: &Forecast) -> Self {
        Self {
            episode_id: episode_id.to_string(),
            timestep_index,
            dt_s: f.ego_future.dt,
            ego_future: f.ego_future.states.iter().map(StateRecord::from).collect(),
            lead_future: f.lead_future.states.iter().map(StateRecord::from).collect(),
        }
    }

    fn into_forecast(self) -> Forecast {
        let traj = |records: &[StateRecord]| Trajectory {
            dt: self.dt_s,
            start_time: 0.0,
            states: states_from_records(records, self.dt_s),
        };
        Forecast {
            ego_future: traj(&self.ego_future),
            lead_future: traj(&self.lead_future),
        }
    }
}

/// Precomputed forecasts keyed by (episode id, timestep), typically the
/// output of a learned model. Read-only once loaded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalForecasts {
    entries: BTreeMap<(String, usize), Forecast>,
}

impl ExternalForecasts {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, episode_id: &str, timestep: usize) -> Result<&Forecast> {
        self.entries
            .get(&(episode_id.to_string(), timestep))
            .ok_or_else(|| {
                FcwError::Data(format!(
                    "no external forecast for episode `{episode_id}` at timestep {timestep}"
                ))
            })
    }

    pub fn insert(&mut self, record: ForecastRecord) -> Result<()> {
        let key = (record.episode_id.clone(), record.timestep_index);
        if self.entries.contains_key(&key) {
            return Err(FcwError::Data(format!(
                "duplicate external forecast for episode `{}` at timestep {}",
                key.0, key.1
            )));
        }
        if !(record.dt_s > 0.0) || record.ego_future.is_empty() || record.lead_future.is_empty() {
            return Err(FcwError::Data(format!(
                "external forecast for episode `{}` at timestep {} has no usable future",
                key.0, key.1
            )));
        }
        self.entries.insert(key, record.into_forecast());
        Ok(())
    }
}

impl Forecaster for ExternalForecasts {
    fn forecast(&self, key: ForecastKey<'_>, _: &ForecastRequest) -> Result<Forecast> {
        self.get(key.episode_id, key.timestep).cloned()
    }
}

/// Parses a JSON Lines forecast file. Blank lines are skipped.
pub fn parse_external_forecasts(text: &str, origin: &str) -> Result<ExternalForecasts> {
    let mut out = ExternalForecasts::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ForecastRecord =
            serde_json::from_str(line).map_err(|source| FcwError::Json {
                path: format!("{origin}:{}", n + 1),
                source,
            })?;
        out.insert(record)?;
    }
    Ok(out)
}

pub fn load_external_forecasts(path: &Path) -> Result<ExternalForecasts> {
    let text = fs::read_to_string(path).map_err(|e| FcwError::io(path, e))?;
    parse_external_forecasts(&text, &path.display().to_string())
}

pub fn write_external_forecasts(path: &Path, records: &[ForecastRecord]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| FcwError::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r).expect("forecast record serialization cannot fail");
        writeln!(file, "{line}").map_err(|e| FcwError::io(path, e))?;
    }
    Ok(())
}

/// Smallest longitudinal gap over the paired future states.
pub fn min_future_gap(f: &Forecast, ego_length: f64, lead_length: f64) -> f64 {
    f.ego_future
        .states
        .iter()
        .zip(&f.lead_future.states)
        .map(|(e, l)| longitudinal_gap(e, l, ego_length, lead_length))
        .fold(f64::INFINITY, f64::min)
}

/// Forecast requests for every evaluable step of an episode, paired with
/// the step index. Steps before a full history window are skipped.
pub fn forecast_requests(
    e: &Episode,
    p: &FcwParams,
    use_counterfactual: bool,
) -> Result<Vec<(usize, ForecastRequest)>> {
    p.validate()?;
    e.ensure_valid()?;
    let history_steps = (p.history / e.dt).round() as usize;
    if e.len() <= history_steps {
        return Err(FcwError::invalid(format!(
            "episode `{}` has {} steps, fewer than the {} s history needs",
            e.id,
            e.len(),
            p.history
        )));
    }
    let lead = if use_counterfactual {
        perceived_lead_trajectory(&e.lead, &e.attention)?.to_trajectory()
    } else {
        e.lead.clone()
    };
    Ok((history_steps..e.len())
        .map(|i| {
            let from = i - history_steps;
            (
                i,
                ForecastRequest {
                    ego_history: e.ego.window(from, i),
                    lead_history: lead.window(from, i),
                    horizon: p.horizon,
                },
            )
        })
        .collect())
}

fn checked_forecast(
    e: &Episode,
    forecaster: &dyn Forecaster,
    i: usize,
    r: &ForecastRequest,
) -> Result<Forecast> {
    let key = ForecastKey {
        episode_id: &e.id,
        timestep: i,
    };
    let f = forecaster.forecast(key, r)?;
    let same_dt = |t: &Trajectory| (t.dt - r.dt()).abs() <= TIME_EPS;
    if f.ego_future.is_empty()
        || f.ego_future.len() != f.lead_future.len()
        || !same_dt(&f.ego_future)
        || !same_dt(&f.lead_future)
    {
        return Err(FcwError::Data(format!(
            "forecast for episode `{}` at timestep {i} is malformed: futures must be non-empty, equal length and sampled at {} s",
            e.id,
            r.dt()
        )));
    }
    Ok(f)
}

/// Minimum future gap per step; `None` before the history window fills.
pub fn min_future_gaps(
    e: &Episode,
    forecaster: &dyn Forecaster,
    p: &FcwParams,
    use_counterfactual: bool,
) -> Result<Vec<Option<f64>>> {
    let mut gaps = vec![None; e.len()];
    for (i, r) in forecast_requests(e, p, use_counterfactual)? {
        let f = checked_forecast(e, forecaster, i, &r)?;
        gaps[i] = Some(min_future_gap(&f, e.ego_length, e.lead_length));
    }
    Ok(gaps)
}

/// Forecast-based FCW: warn when the hypothesized minimum future gap is
/// below `p.min_gap_warn`.
pub fn evaluate_forecast_fcw(
    e: &Episode,
    forecaster: &dyn Forecaster,
    p: &FcwParams,
    use_counterfactual: bool,
) -> Result<WarningTrace> {
    let warn = min_future_gaps(e, forecaster, p, use_counterfactual)?
        .into_iter()
        .map(|g| g.is_some_and(|g| g < p.min_gap_warn))
        .collect();
    Ok(WarningTrace::new(e.dt, e.start_time(), warn))
}

/// Runs `forecaster` over an episode and captures its outputs as external
/// forecast records.
pub fn record_forecasts(
    e: &Episode,
    forecaster: &dyn Forecaster,
    p: &FcwParams,
    use_counterfactual: bool,
) -> Result<Vec<ForecastRecord>> {
    forecast_requests(e, p, use_counterfactual)?
        .into_iter()
        .map(|(i, r)| {
            Ok(ForecastRecord::new(
                &e.id,
                i,
                &checked_forecast(e, forecaster, i, &r)?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(speeds: &[f64], x0: f64, heading: f64, dt: f64) -> Trajectory {
        let mut d = 0.0;
        let (s, c) = heading.sin_cos();
        let states = speeds
            .iter()
            .map(|&v| {
                let st = VehicleState::new(x0 + d * c, d * s, heading, v);
                d += v * dt;
                st
            })
            .collect();
        Trajectory::new(dt, 0.0, states).unwrap()
    }

    fn req(ego: Trajectory, lead: Trajectory, horizon: f64) -> ForecastRequest {
        ForecastRequest {
            ego_history: ego,
            lead_history: lead,
            horizon,
        }
    }

    #[test]
    fn stationary_stays_put() {
        let r = req(
            hist(&[0.0; 11], 0.0, 0.0, 0.1),
            hist(&[0.0; 11], 30.0, 0.0, 0.1),
            3.0,
        );
        let f = forecast_constant_velocity(&r).unwrap();
        assert_eq!(f.ego_future.len(), 31);
        assert!(f.ego_future.states.iter().all(|s| s.x == 0.0));
        assert!(f.lead_future.states.iter().all(|s| s.x == 30.0));
    }

    #[test]
    fn constant_velocity_thirty_meters() {
        let r = req(
            hist(&[10.0; 11], 0.0, 0.0, 0.1),
            hist(&[10.0; 11], 50.0, 0.0, 0.1),
            3.0,
        );
        let f = forecast_constant_velocity(&r).unwrap();
        let start = r.ego_history.last().x;
        assert!((f.ego_future.last().x - start - 30.0).abs() < 1e-9);
    }

    #[test]
    fn curved_history_goes_straight() {
        let states: Vec<_> = (0..11)
            .map(|i| {
                let h = 0.05 * i as f64;
                VehicleState::new(i as f64, 0.1 * (i * i) as f64, h, 10.0)
            })
            .collect();
        let ego = Trajectory::new(0.1, 0.0, states).unwrap();
        let r = req(ego.clone(), ego, 1.0);
        let f = forecast_constant_velocity(&r).unwrap();
        let h = 0.5f64;
        let last = r.ego_history.last();
        for (k, s) in f.ego_future.states.iter().enumerate() {
            let d = 10.0 * k as f64 * 0.1;
            assert!((s.x - (last.x + d * h.cos())).abs() < 1e-9);
            assert!((s.y - (last.y + d * h.sin())).abs() < 1e-9);
            assert_eq!(s.heading, h);
        }
    }

    #[test]
    fn constant_acceleration_matches_velocity_on_flat_history() {
        let r = req(
            hist(&[13.7; 11], 0.0, 0.3, 0.1),
            hist(&[9.1; 11], 40.0, 0.3, 0.1),
            3.0,
        );
        assert_eq!(
            forecast_constant_acceleration(&r).unwrap(),
            forecast_constant_velocity(&r).unwrap()
        );
    }

    #[test]
    fn constant_acceleration_brakes_to_stop() {
        let speeds: Vec<f64> = (0..11).map(|i| 15.0 - i as f64).collect();
        let r = req(
            hist(&speeds, 0.0, 0.0, 0.1),
            hist(&speeds, 30.0, 0.0, 0.1),
            3.0,
        );
        let f = forecast_constant_acceleration(&r).unwrap();
        // slope -10 m/s², final speed 5 m/s: stops after 0.5 s having gone 1.25 m
        let lead = &f.lead_future;
        assert!((lead.states[3].speed - 2.0).abs() < 1e-9);
        assert_eq!(lead.states[5].speed, 0.0);
        let x_last = r.lead_history.last().x;
        assert!((lead.last().x - x_last - 1.25).abs() < 1e-9);
        assert!(lead.states[10..].iter().all(|s| s.x == lead.last().x));
    }

    #[test]
    fn constant_acceleration_speeds_up_linearly() {
        let speeds: Vec<f64> = (0..11).map(|i| 10.0 + 0.2 * i as f64).collect();
        let r = req(
            hist(&speeds, 0.0, 0.0, 0.1),
            hist(&speeds, 30.0, 0.0, 0.1),
            2.0,
        );
        let f = forecast_constant_acceleration(&r).unwrap();
        for (k, s) in f.lead_future.states.iter().enumerate() {
            assert!((s.speed - (12.0 + 2.0 * k as f64 * 0.1)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_acceleration_needs_two_steps() {
        let r = req(
            hist(&[1.0], 0.0, 0.0, 0.1),
            hist(&[1.0], 9.0, 0.0, 0.1),
            1.0,
        );
        assert!(forecast_constant_acceleration(&r).is_err());
        assert!(forecast_constant_velocity(&r).is_ok());
    }

    #[test]
    fn worst_case_brake_examples() {
        let r = req(
            hist(&[20.0; 11], 0.0, 0.0, 0.1),
            hist(&[12.0; 11], 50.0, 0.0, 0.1),
            3.0,
        );
        let f = forecast_worst_case_brake(&r, 6.0).unwrap();
        let x0 = r.lead_history.last().x;
        assert_eq!(f.lead_future.states[20].speed, 0.0);
        assert!((f.lead_future.states[20].x - x0 - 12.0).abs() < 1e-9);
        assert!((f.lead_future.last().x - x0 - 12.0).abs() < 1e-9);
        let e0 = r.ego_history.last().x;
        assert!((f.ego_future.last().x - e0 - 60.0).abs() < 1e-9);
        assert_eq!(
            f.ego_future,
            forecast_worst_case_brake(&r, 1.0).unwrap().ego_future
        );

        let stopped = req(
            hist(&[20.0; 3], 0.0, 0.0, 0.1),
            hist(&[0.0; 3], 50.0, 0.0, 0.1),
            1.0,
        );
        let f = forecast_worst_case_brake(&stopped, 6.0).unwrap();
        assert!(f
            .lead_future
            .states
            .iter()
            .all(|s| s.x == 50.0 && s.speed == 0.0));
        assert!(forecast_worst_case_brake(&stopped, 0.0).is_err());
    }

    #[test]
    fn min_gap_examples() {
        let r = req(
            hist(&[15.0; 11], 0.0, 0.0, 0.1),
            hist(&[15.0; 11], 24.5, 0.0, 0.1),
            3.0,
        );
        let f = forecast_constant_velocity(&r).unwrap();
        assert!((min_future_gap(&f, 4.5, 4.5) - 20.0).abs() < 1e-9);

        let r = req(
            hist(&[20.0; 11], 0.0, 0.0, 0.1),
            hist(&[0.0; 11], 74.0, 0.0, 0.1),
            3.0,
        );
        // ego ends history at x=20, lead at 74: gap 54 - 4 = 50
        let f = forecast_constant_velocity(&r).unwrap();
        assert!((min_future_gap(&f, 4.0, 4.0) - -10.0).abs() < 1e-9);

        let r = req(
            hist(&[10.0; 11], 0.0, 0.0, 0.1),
            hist(&[14.0; 11], 30.0, 0.0, 0.1),
            3.0,
        );
        let f = forecast_constant_velocity(&r).unwrap();
        let initial = longitudinal_gap(r.ego_history.last(), r.lead_history.last(), 4.5, 4.5);
        assert_eq!(min_future_gap(&f, 4.5, 4.5), initial);
    }

    #[test]
    fn external_lookup() {
        assert!(parse_external_forecasts("", "empty").unwrap().is_empty());
        let r = req(
            hist(&[10.0; 3], 0.0, 0.0, 0.1),
            hist(&[10.0; 3], 30.0, 0.0, 0.1),
            0.3,
        );
        let f = forecast_constant_velocity(&r).unwrap();
        let line = serde_json::to_string(&ForecastRecord::new("ep1", 10, &f)).unwrap();
        let ext = parse_external_forecasts(&format!("{line}\n\n"), "one").unwrap();
        assert_eq!(ext.len(), 1);
        assert_eq!(ext.get("ep1", 10).unwrap(), &f);
        let err = ext.get("ep1", 11).unwrap_err().to_string();
        assert!(err.contains("ep1") && err.contains("11"), "{err}");

        let dup = format!("{line}\n{line}\n");
        assert!(matches!(
            parse_external_forecasts(&dup, "dup"),
            Err(FcwError::Data(_))
        ));
        assert!(matches!(
            parse_external_forecasts("{not json", "bad"),
            Err(FcwError::Json { .. })
        ));
    }
}
