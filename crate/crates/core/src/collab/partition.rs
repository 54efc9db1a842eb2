use std::collections::{BTreeMap, BTreeSet};

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_prompt, confidence, with_pool, CollabError, ConfidenceSource, KcmConfig};
use crate::backends::LargeModel;
use crate::data::{id_sequence_hash, Sample};
use crate::models::ClassifierHandle;

/// Split of the distillation pool: `x1` judgment-confident, `x2`
/// large-model-confident (with its cached distributions), `x3` the rest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingPartition {
    pub x1: BTreeSet<u64>,
    pub x2: BTreeSet<u64>,
    pub x3: BTreeSet<u64>,
    pub teacher_targets: BTreeMap<u64, Vec<f64>>,
    pub backend_calls: usize,
    /// Samples diverted to `x3` because the backend failed.
    pub backend_failures: usize,
    /// Hash of the input sample-id sequence.
    pub stream_hash: String,
}

impl TrainingPartition {
    pub fn total(&self) -> usize {
        self.x1.len() + self.x2.len() + self.x3.len()
    }

    pub fn validate(&self, pool: &[&Sample]) -> Result<(), CollabError> {
        if !self.x1.is_disjoint(&self.x2) || !self.x1.is_disjoint(&self.x3) || !self.x2.is_disjoint(&self.x3) {
            return Err(CollabError::Partition("cells overlap".into()));
        }
        let ids: BTreeSet<u64> = pool.iter().map(|s| s.id).collect();
        let union: BTreeSet<u64> = self.x1.iter().chain(&self.x2).chain(&self.x3).copied().collect();
        if union != ids {
            return Err(CollabError::Partition("cells do not cover the pool".into()));
        }
        for id in &self.x2 {
            let t = self
                .teacher_targets
                .get(id)
                .ok_or_else(|| CollabError::Partition(format!("x2 sample {id} lacks a teacher distribution")))?;
            let s: f64 = t.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(CollabError::Partition(format!("teacher for {id} sums to {s}")));
            }
        }
        Ok(())
    }
}

enum Cell {
    Judgment,
    Teacher(Vec<f64>),
    Rest { failed: bool },
}

/// Splits `pool` by the judgment-model gate and then the large-model gate.
/// The backend is called once for every sample the judgment model declines
/// and never for the others. Backend failures divert the sample to `x3`.
pub fn partition_training(
    pool: &[&Sample],
    judgment: &ClassifierHandle,
    backend: &dyn LargeModel,
    labels: &[String],
    config: &KcmConfig,
) -> Result<TrainingPartition, CollabError> {
    config.validate_threshold()?;
    let cells: Vec<Cell> = with_pool(config.max_in_flight, || {
        pool.par_iter()
            .map(|s| -> Result<Cell, CollabError> {
                let (dist, c_x) = confidence(&judgment.logits(&s.features)?, ConfidenceSource::Judgment)?;
                if c_x.exceeds(config.epsilon) {
                    return Ok(Cell::Judgment);
                }
                let prompt = build_prompt(s.id, &dist, c_x.value, labels, config.prompt_top_k);
                Ok(match backend.predict(s, &prompt, labels) {
                    Ok(r) if r.confidence > config.epsilon => Cell::Teacher(r.distribution),
                    Ok(_) => Cell::Rest { failed: false },
                    Err(e) => {
                        debug!("sample {}: large model failed ({e}); assigning to x3", s.id);
                        Cell::Rest { failed: true }
                    }
                })
            })
            .collect::<Result<Vec<_>, _>>()
    })??;

    let mut part = TrainingPartition {
        stream_hash: id_sequence_hash(pool.iter().map(|s| &s.id)),
        ..Default::default()
    };
    for (s, cell) in pool.iter().zip(cells) {
        match cell {
            Cell::Judgment => {
                part.x1.insert(s.id);
            }
            Cell::Teacher(d) => {
                part.backend_calls += 1;
                part.x2.insert(s.id);
                part.teacher_targets.insert(s.id, d);
            }
            Cell::Rest { failed } => {
                part.backend_calls += 1;
                part.backend_failures += usize::from(failed);
                part.x3.insert(s.id);
            }
        }
    }
    Ok(part)
}
