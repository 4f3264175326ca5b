//! Episode-level scoring: majority-vote labels, confusion counts,
//! TPR/TNR/UAR and the warning buffer time relative to the deployed alert.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{FcwError, Result};
use crate::forecasting::Forecaster;
use crate::kinematics::Episode;
use crate::method::Method;
use crate::warning::{FcwParams, WarningTrace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, label: bool, warned: bool) {
        match (label, warned) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub id: String,
    /// Majority-vote ground truth: was a warning needed.
    pub label: bool,
    pub warned: bool,
    pub first_warning_time: Option<f64>,
    /// Deployed time minus first warning time, for any episode that warned.
    pub buffer: Option<f64>,
    /// Carried through from the annotation, not scored.
    pub preferred_times: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub method: String,
    pub counts: ConfusionCounts,
    pub tpr: f64,
    pub tnr: f64,
    pub uar: f64,
    /// Mean buffer over true positives; absent when there are none.
    pub buffer_mean: Option<f64>,
    /// Number of true positives contributing to `buffer_mean`.
    pub buffer_n: usize,
    pub per_episode: Vec<EpisodeResult>,
}

impl EvaluationReport {
    /// `method  UAR  TPR  TNR  buffer (n)` in the comparison-table layout.
    pub fn summary_line(&self) -> String {
        let buffer = match self.buffer_mean {
            Some(b) => format!("{b:.3}"),
            None => "-".to_string(),
        };
        format!(
            "{:<22} UAR {:.3}  TPR {:.3}  TNR {:.3}  buffer {} ({})",
            self.method, self.uar, self.tpr, self.tnr, buffer, self.buffer_n
        )
    }

    pub fn per_episode_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from("id,label,warned,first_warning_time_s,buffer_s\n");
        for r in &self.per_episode {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.id,
                r.label,
                r.warned,
                opt(r.first_warning_time),
                opt(r.buffer)
            );
        }
        out
    }
}

/// True iff strictly more than half of the votes are true. Ties are not
/// valid.
pub fn majority_validity(votes: &[bool]) -> Result<bool> {
    if votes.is_empty() {
        return Err(FcwError::invalid("majority vote over an empty panel"));
    }
    let yes = votes.iter().filter(|&&v| v).count();
    Ok(2 * yes > votes.len())
}

/// An episode counts as warned if the trace warns at any step.
pub fn classify_episode(trace: &WarningTrace) -> bool {
    trace.warn.iter().any(|&w| w)
}

/// (TPR, TNR, UAR). Both classes must be present.
pub fn rates(c: &ConfusionCounts) -> Result<(f64, f64, f64)> {
    if c.tp + c.fn_ == 0 {
        return Err(FcwError::UndefinedRate("warning-needed"));
    }
    if c.tn + c.fp == 0 {
        return Err(FcwError::UndefinedRate("warning-not-needed"));
    }
    let tpr = c.tp as f64 / (c.tp + c.fn_) as f64;
    let tnr = c.tn as f64 / (c.tn + c.fp) as f64;
    Ok((tpr, tnr, unweighted_average_recall(tpr, tnr)))
}

pub fn unweighted_average_recall(tpr: f64, tnr: f64) -> f64 {
    (tpr + tnr) / 2.0
}

/// Seconds between the first warning and the deployed alert; positive when
/// the method warned earlier. Late warnings give negative values.
pub fn buffer_time(trace: &WarningTrace, deployed: f64) -> Option<f64> {
    trace.first_warning_time.map(|t| deployed - t)
}

/// Scores precomputed traces, one per episode in the same order.
pub fn report_from_traces(
    method: &str,
    episodes: &[Episode],
    traces: &[WarningTrace],
) -> Result<EvaluationReport> {
    if episodes.len() != traces.len() {
        return Err(FcwError::invalid(format!(
            "{} episodes but {} traces",
            episodes.len(),
            traces.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    let mut per_episode = Vec::with_capacity(episodes.len());
    for (e, trace) in episodes.iter().zip(traces) {
        let label = majority_validity(&e.annotation.votes)?;
        let warned = classify_episode(trace);
        counts.record(label, warned);
        per_episode.push(EpisodeResult {
            id: e.id.clone(),
            label,
            warned,
            first_warning_time: trace.first_warning_time,
            buffer: buffer_time(trace, e.deployed_fcw_time),
            preferred_times: e.annotation.preferred_times.clone(),
        });
    }
    per_episode.sort_by(|a, b| a.id.cmp(&b.id));

    let (tpr, tnr, uar) = rates(&counts)?;
    let tp_buffers: Vec<f64> = per_episode
        .iter()
        .filter(|r| r.label && r.warned)
        .filter_map(|r| r.buffer)
        .collect();
    let buffer_mean =
        (!tp_buffers.is_empty()).then(|| tp_buffers.iter().sum::<f64>() / tp_buffers.len() as f64);

    Ok(EvaluationReport {
        method: method.to_string(),
        counts,
        tpr,
        tnr,
        uar,
        buffer_mean,
        buffer_n: tp_buffers.len(),
        per_episode,
    })
}

/// Runs `method` over every episode and scores it.
pub fn evaluate_method(
    episodes: &[Episode],
    method: Method,
    forecaster: &dyn Forecaster,
    p: &FcwParams,
) -> Result<EvaluationReport> {
    let traces = episodes
        .iter()
        .map(|e| method.run(e, p, forecaster))
        .collect::<Result<Vec<_>>>()?;
    report_from_traces(method.name(), episodes, &traces)
}
