//! The six evaluated warning methods, named after the rows of the comparison
//! table they reproduce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FcwError, Result};
use crate::forecasting::{
    evaluate_forecast_fcw, ConstantAcceleration, ConstantVelocity, Forecaster, WorstCaseBrake,
};
use crate::kinematics::Episode;
use crate::warning::{
    evaluate_attend_gaze_only, evaluate_attend_gaze_scene, evaluate_attention_aware, evaluate_sda,
    FcwParams, WarningTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conventional FCW.
    Sda,
    /// Attention-aware FCW.
    AttentionAware,
    /// AttenD (gaze-only).
    AttendGaze,
    /// AttenD (gaze+scene).
    AttendGazeScene,
    /// Forecast rule on actual lead histories ("Learned (Full Attn)").
    ForecastFullAttn,
    /// Forecast rule on perceived lead histories ("Learned (Driver Attn)").
    ForecastDriverAttn,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::AttendGaze,
        Method::AttendGazeScene,
        Method::ForecastFullAttn,
        Method::ForecastDriverAttn,
        Method::Sda,
        Method::AttentionAware,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sda => "sda",
            Method::AttentionAware => "attention_aware",
            Method::AttendGaze => "attend_gaze",
            Method::AttendGazeScene => "attend_gaze_scene",
            Method::ForecastFullAttn => "forecast_full_attn",
            Method::ForecastDriverAttn => "forecast_driver_attn",
        }
    }

    /// Row label in the published comparison table.
    pub fn table_label(self) -> &'static str {
        match self {
            Method::Sda => "Conventional FCW",
            Method::AttentionAware => "Attention-aware FCW",
            Method::AttendGaze => "AttenD (gaze-only)",
            Method::AttendGazeScene => "AttenD (gaze+scene)",
            Method::ForecastFullAttn => "Learned (Full Attn)",
            Method::ForecastDriverAttn => "Learned (Driver Attn)",
        }
    }

    pub fn uses_forecaster(self) -> bool {
        matches!(self, Method::ForecastFullAttn | Method::ForecastDriverAttn)
    }

    /// Runs the method on one episode. `forecaster` is only consulted by the
    /// two forecast methods.
    pub fn run(
        self,
        e: &Episode,
        p: &FcwParams,
        forecaster: &dyn Forecaster,
    ) -> Result<WarningTrace> {
        match self {
            Method::Sda => evaluate_sda(e, p),
            Method::AttentionAware => evaluate_attention_aware(e, p),
            Method::AttendGaze => evaluate_attend_gaze_only(e, p),
            Method::AttendGazeScene => evaluate_attend_gaze_scene(e, p),
            Method::ForecastFullAttn => evaluate_forecast_fcw(e, forecaster, p, false),
            Method::ForecastDriverAttn => evaluate_forecast_fcw(e, forecaster, p, true),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = FcwError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| FcwError::invalid(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    #[default]
    ConstantVelocity,
    ConstantAcceleration,
    /// Lead brakes at `a_lead_max`.
    WorstCaseBrake,
    /// Precomputed forecasts loaded from a file.
    External,
}

impl ForecasterKind {
    pub const ALL: [ForecasterKind; 4] = [
        ForecasterKind::ConstantVelocity,
        ForecasterKind::ConstantAcceleration,
        ForecasterKind::WorstCaseBrake,
        ForecasterKind::External,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecasterKind::ConstantVelocity => "constant_velocity",
            ForecasterKind::ConstantAcceleration => "constant_acceleration",
            ForecasterKind::WorstCaseBrake => "worst_case_brake",
            ForecasterKind::External => "external",
        }
    }

    /// Builds an in-process forecaster. `External` has no in-process form
    /// and yields `None`.
    pub fn build(self, p: &FcwParams) -> Option<Box<dyn Forecaster>> {
        match self {
            ForecasterKind::ConstantVelocity => Some(Box::new(ConstantVelocity)),
            ForecasterKind::ConstantAcceleration => Some(Box::new(ConstantAcceleration)),
            ForecasterKind::WorstCaseBrake => Some(Box::new(WorstCaseBrake {
                decel: p.a_lead_max,
            })),
            ForecasterKind::External => None,
        }
    }
}

impl fmt::Display for ForecasterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForecasterKind {
    type Err = FcwError;

    fn from_str(s: &str) -> Result<Self> {
        ForecasterKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| FcwError::invalid(format!("unknown forecaster `{s}`")))
    }
}
