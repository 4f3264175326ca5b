//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys mirror the field names of [`RunConfig`] and [`FcwParams`]; unknown or
//! repeated keys are errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fcw_core::method::{ForecasterKind, Method};
use fcw_core::synthgen::ScenarioSpec;
use fcw_core::FcwParams;

use crate::CliError;

fn parse_pairs(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("{origin}:{}: expected `key = value`", n + 1))
        })?;
        let key = key.trim().to_string();
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!(
                "{origin}:{}: key `{key}` given twice",
                n + 1
            )));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{value}` as a number")))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Everything one `evaluate`, `sweep` or `trace` run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub forecaster: ForecasterKind,
    pub params: FcwParams,
    pub episode_dir: PathBuf,
    pub output: PathBuf,
    pub external_forecasts: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::AttentionAware,
            forecaster: ForecasterKind::ConstantVelocity,
            params: FcwParams::default(),
            episode_dir: PathBuf::from("episodes"),
            output: PathBuf::from("report.json"),
            external_forecasts: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (key, value) in parse_pairs(text, origin)? {
            match key.as_str() {
                "method" => cfg.method = value.parse().map_err(CliError::config)?,
                "forecaster" => cfg.forecaster = value.parse().map_err(CliError::config)?,
                "episode_dir" => cfg.episode_dir = PathBuf::from(value),
                "output" => cfg.output = PathBuf::from(value),
                "external_forecasts" => {
                    cfg.external_forecasts = (!value.is_empty()).then(|| PathBuf::from(value))
                }
                "seed" => cfg.seed = parse_num(&key, &value)?,
                name if FcwParams::FIELD_NAMES.contains(&name) => {
                    let v = parse_num(&key, &value)?;
                    cfg.params.set(name, v).map_err(CliError::config)?;
                }
                other => {
                    return Err(CliError::Config(format!("{origin}: unknown key `{other}`")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }

    /// Checks cross-field rules.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(CliError::config)?;
        if self.forecaster == ForecasterKind::External && self.external_forecasts.is_none() {
            return Err(CliError::Config(
                "forecaster `external` requires `external_forecasts` to name a file".into(),
            ));
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method = {}", self.method);
        let _ = writeln!(out, "forecaster = {}", self.forecaster);
        let _ = writeln!(out, "episode_dir = {}", self.episode_dir.display());
        let _ = writeln!(out, "output = {}", self.output.display());
        if let Some(p) = &self.external_forecasts {
            let _ = writeln!(out, "external_forecasts = {}", p.display());
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        for name in FcwParams::FIELD_NAMES {
            let v = self.params.get(name).unwrap_or_default();
            let _ = writeln!(out, "{name} = {v:?}");
        }
        out
    }
}

/// Suite description for `generate`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub n_per_kind: usize,
    pub base: ScenarioSpec,
    /// Driver model used by the generator.
    pub params: FcwParams,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            n_per_kind: 25,
            base: ScenarioSpec::default(),
            params: FcwParams::default(),
        }
    }
}

impl GenerateConfig {
    /// Keys: `n_per_kind`, the numeric [`ScenarioSpec`] fields,
    /// `inattention_window = start,end` (or `none`), and any parameter name.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut cfg = GenerateConfig::default();
        for (key, value) in parse_pairs(text, origin)? {
            let b = &mut cfg.base;
            match key.as_str() {
                "n_per_kind" => cfg.n_per_kind = parse_num(&key, &value)?,
                "ego_speed" => b.ego_speed = parse_num(&key, &value)?,
                "lead_speed" => b.lead_speed = parse_num(&key, &value)?,
                "initial_gap" => b.initial_gap = parse_num(&key, &value)?,
                "event_time" => b.event_time = parse_num(&key, &value)?,
                "event_magnitude" => b.event_magnitude = parse_num(&key, &value)?,
                "duration" => b.duration = parse_num(&key, &value)?,
                "dt" => b.dt = parse_num(&key, &value)?,
                "inattention_window" => {
                    b.inattention_window = if value == "none" {
                        None
                    } else {
                        let (a, z) = value.split_once(',').ok_or_else(|| {
                            CliError::Config(format!(
                                "`inattention_window`: expected `start,end` or `none`, got `{value}`"
                            ))
                        })?;
                        Some((parse_num(&key, a.trim())?, parse_num(&key, z.trim())?))
                    }
                }
                name if FcwParams::FIELD_NAMES.contains(&name) => {
                    let v = parse_num(&key, &value)?;
                    cfg.params.set(name, v).map_err(CliError::config)?;
                }
                other => {
                    return Err(CliError::Config(format!("{origin}: unknown key `{other}`")));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }
}
