use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_prompt, confidence, decide, now_ms, with_pool, CollabError, ConfidenceScore, ConfidenceSource,
    DecisionLog, DecisionRecord, KcmConfig, PromptAugmentation, RouteTarget, RoutingDecision, SecondGate,
};
use crate::backends::LargeModel;
use crate::data::Sample;
use crate::models::{argmax, ClassifierHandle};

/// Outcome of routed inference for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub sample_id: u64,
    pub prediction: usize,
    pub decision: RoutingDecision,
    /// The large model was chosen but failed; the small model answered.
    pub degraded: bool,
    pub prompt: Option<PromptAugmentation>,
    pub record: DecisionRecord,
}

fn infer_one(
    sample: &Sample,
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
) -> Result<Inference, CollabError> {
    let eps = config.epsilon;
    let (dist_j, c_x) = confidence(&judgment.logits(&sample.features)?, ConfidenceSource::Judgment)?;
    let mut record = DecisionRecord {
        sample_id: sample.id,
        target: RouteTarget::JudgmentModel,
        c_x: c_x.value,
        c_s: None,
        c_l: None,
        degraded: false,
        timestamp_ms: 0,
    };
    let finish = |prediction, decision: RoutingDecision, degraded, prompt, mut record: DecisionRecord| {
        record.target = decision.target;
        record.degraded = degraded;
        record.timestamp_ms = now_ms();
        Ok(Inference { sample_id: sample.id, prediction, decision, degraded, prompt, record })
    };

    if c_x.exceeds(eps) {
        return finish(argmax(&dist_j), decide(eps, c_x, None), false, None, record);
    }
    let (dist_s, c_s) = confidence(&small.logits(&sample.features)?, ConfidenceSource::Small)?;
    let prompt = build_prompt(sample.id, &dist_s, c_x.value, labels, config.prompt_top_k);

    match config.second_gate {
        SecondGate::SmallConfidence => {
            record.c_s = Some(c_s.value);
            let decision = decide(eps, c_x, Some(c_s));
            if decision.target == RouteTarget::SmallModel {
                return finish(argmax(&dist_s), decision, false, None, record);
            }
            match backend.predict(sample, &prompt, labels) {
                Ok(r) => {
                    record.c_l = Some(r.confidence);
                    finish(r.predicted_class(), decision, false, Some(prompt), record)
                }
                Err(e) => {
                    warn!("sample {}: large model failed ({e}); using small model", sample.id);
                    finish(argmax(&dist_s), decision, true, Some(prompt), record)
                }
            }
        }
        SecondGate::LargeConfidence => match backend.predict(sample, &prompt, labels) {
            Ok(r) => {
                record.c_l = Some(r.confidence);
                let c_l = ConfidenceScore { value: r.confidence, source: ConfidenceSource::Large };
                let decision = decide(eps, c_x, Some(c_l));
                let prediction =
                    if decision.target == RouteTarget::SmallModel { argmax(&dist_s) } else { r.predicted_class() };
                finish(prediction, decision, false, Some(prompt), record)
            }
            Err(e) => {
                warn!("sample {}: large model failed ({e}); using small model", sample.id);
                finish(argmax(&dist_s), decide(eps, c_x, None), true, Some(prompt), record)
            }
        },
    }
}

/// Routes one sample, answers it from the chosen model and appends the
/// decision to `log`.
pub fn infer(
    sample: &Sample,
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
    log: &DecisionLog,
) -> Result<Inference, CollabError> {
    config.validate_threshold()?;
    let out = infer_one(sample, judgment, small, backend, labels, config)?;
    log.append(out.record.clone());
    Ok(out)
}

/// Parallel [`infer`] over `samples` with at most `max_in_flight` workers.
/// Results and log records keep the input order.
pub fn infer_batch(
    samples: &[&Sample],
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
    log: &DecisionLog,
) -> Result<Vec<Inference>, CollabError> {
    config.validate_threshold()?;
    let out = with_pool(config.max_in_flight, || {
        samples
            .par_iter()
            .map(|s| infer_one(s, judgment, small, backend, labels, config))
            .collect::<Result<Vec<_>, _>>()
    })??;
    for r in &out {
        log.append(r.record.clone());
    }
    Ok(out)
}
