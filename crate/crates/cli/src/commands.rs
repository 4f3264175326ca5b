//! The `generate`, `evaluate`, `sweep` and `trace` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fcw_core::evaluation::{evaluate_method, EvaluationReport};
use fcw_core::forecasting::{load_external_forecasts, min_future_gaps, Forecaster};
use fcw_core::kinematics::file::{read_episode_dir, write_episode};
use fcw_core::kinematics::Episode;
use fcw_core::method::Method;
use fcw_core::synthgen::generate_suite;
use fcw_core::warning::{attention_aware_distances, sda_distances};
use fcw_core::FcwParams;
use serde::{Deserialize, Serialize};

use crate::config::{GenerateConfig, RunConfig};
use crate::CliError;

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, body)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Writes a generated suite plus `manifest.csv` into `out_dir` and returns
/// the number of episodes written.
pub fn cmd_generate(cfg: &GenerateConfig, out_dir: &Path, seed: u64) -> Result<usize, CliError> {
    cfg.params.validate().map_err(CliError::config)?;
    let suite =
        generate_suite(cfg.n_per_kind, &cfg.base, seed, &cfg.params).map_err(CliError::config)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut manifest = String::from("id,kind,seed,label\n");
    for s in &suite {
        write_episode(&out_dir.join(format!("{}.json", s.episode.id)), &s.episode)?;
        let _ = writeln!(
            manifest,
            "{},{},{},{}",
            s.episode.id, s.spec.kind, s.spec.seed, s.label
        );
    }
    write_file(&out_dir.join("manifest.csv"), &manifest)?;
    Ok(suite.len())
}

/// Reads every episode in `dir` and resamples it to the canonical rate.
pub fn load_episodes(dir: &Path) -> Result<Vec<Episode>, CliError> {
    let episodes = read_episode_dir(dir).map_err(CliError::data)?;
    if episodes.is_empty() {
        return Err(CliError::Data(format!(
            "no episodes found in {}",
            dir.display()
        )));
    }
    episodes
        .into_iter()
        .map(|e| e.canonical().map_err(CliError::data))
        .collect()
}

/// Forecaster selected by the config. External forecasts are only loaded
/// when `needed` is set.
fn forecaster(
    cfg: &RunConfig,
    params: &FcwParams,
    needed: bool,
) -> Result<Box<dyn Forecaster>, CliError> {
    if let Some(f) = cfg.forecaster.build(params) {
        return Ok(f);
    }
    match (&cfg.external_forecasts, needed) {
        (Some(path), true) => Ok(Box::new(
            load_external_forecasts(path).map_err(CliError::data)?,
        )),
        (Some(_), false) => Ok(Box::new(fcw_core::forecasting::ConstantVelocity)),
        (None, _) => Err(CliError::Config(
            "forecaster `external` requires `external_forecasts` to name a file".into(),
        )),
    }
}

fn evaluate_with(
    episodes: &[Episode],
    cfg: &RunConfig,
    params: &FcwParams,
) -> Result<EvaluationReport, CliError> {
    let f = forecaster(cfg, params, cfg.method.uses_forecaster())?;
    evaluate_method(episodes, cfg.method, f.as_ref(), params).map_err(|e| match e {
        // Parameter problems were caught up front; anything left is about
        // the episodes themselves.
        fcw_core::FcwError::InvalidArgument(m) => CliError::Data(m),
        other => CliError::data(other),
    })
}

/// What `evaluate` writes: the report plus everything needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    /// The effective configuration in `key = value` form.
    pub config: String,
    pub seed: u64,
    pub report: EvaluationReport,
}

/// Path of the per-episode CSV written next to a report.
pub fn per_episode_path(output: &Path) -> PathBuf {
    output.with_extension("episodes.csv")
}

/// Runs the configured method over all episodes, writes the report JSON and
/// a per-episode CSV, and returns the report.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluationReport, CliError> {
    cfg.validate()?;
    let episodes = load_episodes(&cfg.episode_dir)?;
    let report = evaluate_with(&episodes, cfg, &cfg.params)?;
    let file = ReportFile {
        config: cfg.to_text(),
        seed: cfg.seed,
        report,
    };
    let json = serde_json::to_string_pretty(&file).map_err(CliError::data)?;
    write_file(&cfg.output, &(json + "\n"))?;
    write_file(
        &per_episode_path(&cfg.output),
        &file.report.per_episode_csv(),
    )?;
    Ok(file.report)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub report: EvaluationReport,
}

pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("cannot parse sweep value `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    Ok(values)
}

pub fn sweep_csv(param: &str, rows: &[SweepRow]) -> String {
    let mut out =
        String::from("param,value,method,uar,tpr,tnr,buffer_mean_s,buffer_n,tp,fp,tn,fn\n");
    for r in rows {
        let c = &r.report.counts;
        let buffer = r
            .report
            .buffer_mean
            .map(|b| b.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{param},{},{},{},{},{},{buffer},{},{},{},{},{}",
            r.value,
            r.report.method,
            r.report.uar,
            r.report.tpr,
            r.report.tnr,
            r.report.buffer_n,
            c.tp,
            c.fp,
            c.tn,
            c.fn_
        );
    }
    out
}

/// Evaluates the configured method once per value of `param` and writes the
/// table as CSV to the configured output.
pub fn cmd_sweep(cfg: &RunConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    if !FcwParams::FIELD_NAMES.contains(&param) {
        return Err(CliError::Config(format!(
            "unknown parameter `{param}`; expected one of {}",
            FcwParams::FIELD_NAMES.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    cfg.validate()?;
    let params = values
        .iter()
        .map(|&v| {
            let p = cfg.params.with(param, v).map_err(CliError::config)?;
            p.validate().map_err(CliError::config)?;
            Ok(p)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let episodes = load_episodes(&cfg.episode_dir)?;
    let rows = values
        .iter()
        .zip(&params)
        .map(|(&value, p)| {
            Ok(SweepRow {
                value,
                report: evaluate_with(&episodes, cfg, p)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_file(&cfg.output, &sweep_csv(param, &rows))?;
    Ok(rows)
}

/// Per-step diagnostics for one episode. The minimum future gap uses the
/// perceived lead for `attention_aware` and `forecast_driver_attn`, the
/// actual lead otherwise; it is blank before the history window fills.
pub fn trace_csv(e: &Episode, cfg: &RunConfig) -> Result<String, CliError> {
    let p = &cfg.params;
    let d_conv = sda_distances(e, p)?;
    let (d_att, v_hat) = attention_aware_distances(e, p)?;
    let use_cf = matches!(
        cfg.method,
        Method::AttentionAware | Method::ForecastDriverAttn
    );
    let f = forecaster(cfg, p, true)?;
    let min_gaps = min_future_gaps(e, f.as_ref(), p, use_cf).map_err(CliError::data)?;
    let warn = cfg.method.run(e, p, f.as_ref()).map_err(CliError::data)?;

    let mut out = String::from(
        "t_s,gap_m,d_w_conventional_m,d_w_attention_m,v_lead_mps,v_hat_lead_mps,attended,min_future_gap_m,warn\n",
    );
    for i in 0..e.len() {
        let mg = min_gaps[i].map(|g| g.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{mg},{}",
            e.time_at(i),
            e.gap_at(i),
            d_conv[i],
            d_att[i],
            e.lead.states[i].speed,
            v_hat[i],
            u8::from(e.attention.attended[i]),
            u8::from(warn.warn[i]),
        );
    }
    Ok(out)
}

/// Writes the diagnostic CSV for `episode_id` to the configured output and
/// returns it.
pub fn cmd_trace(cfg: &RunConfig, episode_id: &str) -> Result<String, CliError> {
    cfg.validate()?;
    let episodes = load_episodes(&cfg.episode_dir)?;
    let e = episodes
        .iter()
        .find(|e| e.id == episode_id)
        .ok_or_else(|| {
            CliError::Data(format!(
                "no episode `{episode_id}` in {}",
                cfg.episode_dir.display()
            ))
        })?;
    let csv = trace_csv(e, cfg)?;
    write_file(&cfg.output, &csv)?;
    Ok(csv)
}
