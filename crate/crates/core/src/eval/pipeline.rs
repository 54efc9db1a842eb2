use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::backends::LargeModel;
use crate::collab::{partition_training, train_kcm, EpochLoss, KcmConfig, TrainingPartition};
use crate::data::{Dataset, Split};
use crate::models::{train_supervised, ArchSpec, ClassifierHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub x1: usize,
    pub x2: usize,
    pub x3: usize,
    pub backend_calls: usize,
    pub backend_failures: usize,
}

impl From<&TrainingPartition> for PartitionSummary {
    fn from(p: &TrainingPartition) -> Self {
        Self {
            x1: p.x1.len(),
            x2: p.x2.len(),
            x3: p.x3.len(),
            backend_calls: p.backend_calls,
            backend_failures: p.backend_failures,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedPipeline {
    pub judgment: ClassifierHandle,
    pub small: ClassifierHandle,
    pub partition: TrainingPartition,
    pub loss_curve: Vec<EpochLoss>,
}

/// Trains the judgment model on the train split, partitions the val split
/// through the gates and distills the small model from it.
pub fn train_pipeline(
    data: &Dataset,
    arch: &ArchSpec,
    config: &KcmConfig,
    backend: &dyn LargeModel,
    seed: u64,
) -> Result<TrainedPipeline, EvalError> {
    let train = data.split(Split::Train);
    let pool = data.split(Split::Val);
    if pool.is_empty() {
        return Err(EvalError::InvalidInput("val split is empty".into()));
    }
    let judgment = train_supervised(&train, data.num_classes(), arch, seed)?;
    let partition = partition_training(&pool, &judgment, backend, &data.label_names, config)?;
    let distilled = train_kcm(&partition, &pool, &judgment, config, seed.wrapping_add(1))?;
    Ok(TrainedPipeline { judgment, small: distilled.model, partition, loss_curve: distilled.loss_curve })
}
