use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{EvalError, REPORT_VERSION};
use crate::backends::{CountingBackend, LargeModel};
use crate::collab::{infer_batch, DecisionLog, Inference, KcmConfig, RouteTarget};
use crate::data::{id_sequence_hash, Region, Sample};
use crate::models::ClassifierHandle;

/// Per-region accuracy in percent. A region without samples is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScores {
    pub accuracy: BTreeMap<Region, Option<f64>>,
    pub counts: BTreeMap<Region, usize>,
    pub overall: f64,
}

pub fn region_accuracy(samples: &[&Sample], predictions: &[usize]) -> Result<RegionScores, EvalError> {
    if samples.len() != predictions.len() {
        return Err(EvalError::InvalidInput("one prediction per sample required".into()));
    }
    if samples.is_empty() {
        return Err(EvalError::InvalidInput("no samples to score".into()));
    }
    let mut hits: BTreeMap<Region, (usize, usize)> = Region::ALL.iter().map(|r| (*r, (0, 0))).collect();
    for (s, &p) in samples.iter().zip(predictions) {
        let e = hits.get_mut(&s.region).expect("all regions present");
        e.1 += 1;
        e.0 += usize::from(p == s.label);
    }
    let total_hits: usize = hits.values().map(|h| h.0).sum();
    Ok(RegionScores {
        accuracy: hits
            .iter()
            .map(|(r, &(h, n))| (*r, (n > 0).then(|| 100.0 * h as f64 / n as f64)))
            .collect(),
        counts: hits.iter().map(|(r, &(_, n))| (*r, n)).collect(),
        overall: 100.0 * total_hits as f64 / samples.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub seed: u64,
    pub scores: RegionScores,
    /// Percent of samples routed to the large model, recounted from the log.
    pub lm_rate: f64,
    pub backend_calls: usize,
    pub cost_units: f64,
    pub degraded: usize,
    pub route_counts: BTreeMap<RouteTarget, usize>,
    pub stream_hash: String,
    pub config: KcmConfig,
}

pub struct CascadeRun {
    pub report: EvalReport,
    pub inferences: Vec<Inference>,
    pub log: DecisionLog,
}

/// Routes every sample through the cascade and scores the answers.
pub fn evaluate_cascade(
    samples: &[&Sample],
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
    seed: u64,
) -> Result<CascadeRun, EvalError> {
    let counting = CountingBackend::new(backend);
    let log = DecisionLog::new();
    let inferences = infer_batch(samples, judgment, small, &counting, labels, config, &log)?;
    let predictions: Vec<usize> = inferences.iter().map(|i| i.prediction).collect();
    let scores = region_accuracy(samples, &predictions)?;
    let records = log.snapshot();
    let mut route_counts: BTreeMap<RouteTarget, usize> = BTreeMap::new();
    for r in &records {
        *route_counts.entry(r.target).or_default() += 1;
    }
    let report = EvalReport {
        version: REPORT_VERSION,
        seed,
        scores,
        lm_rate: crate::collab::lm_rate(&records),
        backend_calls: counting.calls(),
        cost_units: counting.cost_units(),
        degraded: records.iter().filter(|r| r.degraded).count(),
        route_counts,
        stream_hash: id_sequence_hash(samples.iter().map(|s| &s.id)),
        config: config.clone(),
    };
    Ok(CascadeRun { report, inferences, log })
}

/// Judgment model alone, large model alone and the full cascade on the same
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnComparison {
    pub small: EvalReport,
    pub large: EvalReport,
    pub kcm: EvalReport,
}

/// The small-only and large-only columns are the cascade at `epsilon = 0`
/// (the judgment model always wins) and `epsilon = 1` (nothing passes a
/// strict gate).
pub fn compare_columns(
    samples: &[&Sample],
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
    seed: u64,
) -> Result<ColumnComparison, EvalError> {
    let at = |epsilon: f64| {
        let cfg = KcmConfig { epsilon, ..config.clone() };
        evaluate_cascade(samples, judgment, small, backend, labels, &cfg, seed).map(|r| r.report)
    };
    Ok(ColumnComparison { small: at(0.0)?, large: at(1.0)?, kcm: at(config.epsilon)? })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

/// Plain-text table with one column per report.
pub fn render_table(columns: &[(&str, &EvalReport)]) -> String {
    let mut out = format!("{:<10}", "");
    for (name, _) in columns {
        out += &format!("{name:>10}");
    }
    out.push('\n');
    for region in Region::ALL {
        out += &format!("{:<10}", region.as_str());
        for (_, r) in columns {
            out += &format!("{:>10}", cell(r.scores.accuracy[&region]));
        }
        out.push('\n');
    }
    let mut row = |label: &str, f: &dyn Fn(&EvalReport) -> f64| {
        out += &format!("{label:<10}");
        for (_, r) in columns {
            out += &format!("{:>10.2}", f(r));
        }
        out.push('\n');
    };
    row("overall", &|r| r.scores.overall);
    row("lm rate", &|r| r.lm_rate);
    out
}

/// One row per sample: id, region, label, prediction, target, confidences.
pub fn write_decisions_csv<W: Write>(samples: &[&Sample], inferences: &[Inference], w: W) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    let io = |e: csv::Error| EvalError::Data(e.into());
    out.write_record(["id", "region", "label", "prediction", "target", "c_x", "c_s", "c_l", "degraded"])
        .map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (s, inf) in samples.iter().zip(inferences) {
        let target = match inf.decision.target {
            RouteTarget::JudgmentModel => "judgment_model",
            RouteTarget::SmallModel => "small_model",
            RouteTarget::LargeModel => "large_model",
        };
        out.write_record([
            s.id.to_string(),
            s.region.as_str().to_string(),
            s.label.to_string(),
            inf.prediction.to_string(),
            target.to_string(),
            inf.record.c_x.to_string(),
            opt(inf.record.c_s),
            opt(inf.record.c_l),
            inf.degraded.to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(|e| EvalError::Data(e.into()))?;
    Ok(())
}
