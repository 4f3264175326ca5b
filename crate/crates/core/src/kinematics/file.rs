//! JSON episode files, one episode per file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    speeds_from_positions, Annotation, AttentionTrace, Episode, Trajectory, VehicleState,
    DEFAULT_DEPLOYED_FCW_TIME, DEFAULT_VEHICLE_LENGTH,
};
use crate::error::{FcwError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Wire form of a vehicle state. `speed_mps` may be omitted on input, in
/// which case speeds are recovered from positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub x_m: f64,
    pub y_m: f64,
    pub heading_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_mps: Option<f64>,
}

impl From<&VehicleState> for StateRecord {
    fn from(s: &VehicleState) -> Self {
        Self {
            x_m: s.x,
            y_m: s.y,
            heading_rad: s.heading,
            speed_mps: Some(s.speed),
        }
    }
}

/// Converts wire records into states, filling missing speeds by finite
/// differences of the positions.
pub fn states_from_records(records: &[StateRecord], dt: f64) -> Vec<VehicleState> {
    let fallback = if records.iter().any(|r| r.speed_mps.is_none()) {
        let pos: Vec<_> = records.iter().map(|r| (r.x_m, r.y_m)).collect();
        speeds_from_positions(&pos, dt)
    } else {
        Vec::new()
    };
    records
        .iter()
        .enumerate()
        .map(|(i, r)| VehicleState {
            x: r.x_m,
            y: r.y_m,
            heading: r.heading_rad,
            speed: r.speed_mps.unwrap_or_else(|| fallback[i]),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    t_s: f64,
    ego: StateRecord,
    lead: StateRecord,
    attended: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRecord {
    votes: Vec<bool>,
    preferred_times_s: Vec<Option<f64>>,
}

fn default_deployed() -> f64 {
    DEFAULT_DEPLOYED_FCW_TIME
}

fn default_length() -> f64 {
    DEFAULT_VEHICLE_LENGTH
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodeFile {
    schema_version: u32,
    id: String,
    dt_s: f64,
    #[serde(default = "default_deployed")]
    deployed_fcw_time_s: f64,
    #[serde(default = "default_length")]
    ego_length_m: f64,
    #[serde(default = "default_length")]
    lead_length_m: f64,
    frames: Vec<FrameRecord>,
    annotation: AnnotationRecord,
}

/// Serializes an episode in the schema-version-1 layout.
pub fn episode_to_json(e: &Episode) -> String {
    let frames = (0..e.len())
        .map(|i| FrameRecord {
            t_s: e.time_at(i),
            ego: (&e.ego.states[i]).into(),
            lead: (&e.lead.states[i]).into(),
            attended: e.attention.attended.get(i).copied().unwrap_or(true),
        })
        .collect();
    let file = EpisodeFile {
        schema_version: SCHEMA_VERSION,
        id: e.id.clone(),
        dt_s: e.dt,
        deployed_fcw_time_s: e.deployed_fcw_time,
        ego_length_m: e.ego_length,
        lead_length_m: e.lead_length,
        frames,
        annotation: AnnotationRecord {
            votes: e.annotation.votes.clone(),
            preferred_times_s: e.annotation.preferred_times.clone(),
        },
    };
    serde_json::to_string_pretty(&file).expect("episode serialization cannot fail")
}

/// Parses an episode file body. `origin` names the source in errors.
///
/// Timestamps must be strictly increasing and sit on the `dt_s` grid
/// starting at the first frame.
pub fn episode_from_json(text: &str, origin: &str) -> Result<Episode> {
    let file: EpisodeFile = serde_json::from_str(text).map_err(|source| FcwError::Json {
        path: origin.to_string(),
        source,
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(FcwError::Data(format!(
            "{origin}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if !(file.dt_s > 0.0) {
        return Err(FcwError::Data(format!("{origin}: dt_s must be positive")));
    }
    if file.frames.is_empty() {
        return Err(FcwError::Data(format!("{origin}: no frames")));
    }
    let start = file.frames[0].t_s;
    for (i, pair) in file.frames.windows(2).enumerate() {
        if !(pair[1].t_s > pair[0].t_s) {
            return Err(FcwError::Data(format!(
                "{origin}: timestamps not strictly increasing at frame {}",
                i + 1
            )));
        }
    }
    for (i, f) in file.frames.iter().enumerate() {
        let expected = start + i as f64 * file.dt_s;
        if (f.t_s - expected).abs() > 1e-6 * (1.0 + expected.abs()) {
            return Err(FcwError::Data(format!(
                "{origin}: frame {i} at t={} is off the {} s grid (expected {expected})",
                f.t_s, file.dt_s
            )));
        }
    }

    let ego: Vec<_> = file.frames.iter().map(|f| f.ego).collect();
    let lead: Vec<_> = file.frames.iter().map(|f| f.lead).collect();
    let attended = file.frames.iter().map(|f| f.attended).collect();
    Ok(Episode {
        id: file.id,
        dt: file.dt_s,
        deployed_fcw_time: file.deployed_fcw_time_s,
        ego: Trajectory {
            dt: file.dt_s,
            start_time: start,
            states: states_from_records(&ego, file.dt_s),
        },
        lead: Trajectory {
            dt: file.dt_s,
            start_time: start,
            states: states_from_records(&lead, file.dt_s),
        },
        attention: AttentionTrace::new(file.dt_s, start, attended),
        annotation: Annotation {
            votes: file.annotation.votes,
            preferred_times: file.annotation.preferred_times_s,
        },
        ego_length: file.ego_length_m,
        lead_length: file.lead_length_m,
    })
}

pub fn read_episode(path: &Path) -> Result<Episode> {
    let text = fs::read_to_string(path).map_err(|e| FcwError::io(path, e))?;
    episode_from_json(&text, &path.display().to_string())
}

pub fn write_episode(path: &Path, e: &Episode) -> Result<()> {
    let mut body = episode_to_json(e);
    body.push('\n');
    fs::write(path, body).map_err(|err| FcwError::io(path, err))
}

/// Reads every `*.json` file in `dir`, sorted by episode id.
pub fn read_episode_dir(dir: &Path) -> Result<Vec<Episode>> {
    let entries = fs::read_dir(dir).map_err(|e| FcwError::io(dir, e))?;
    let mut episodes = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FcwError::io(dir, e))?.path();
        if path.extension().is_some_and(|ext| ext == "json") {
            episodes.push(read_episode(&path)?);
        }
    }
    episodes.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(dup) = episodes.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(FcwError::Data(format!(
            "duplicate episode id `{}` in {}",
            dup[0].id,
            dir.display()
        )));
    }
    Ok(episodes)
}
