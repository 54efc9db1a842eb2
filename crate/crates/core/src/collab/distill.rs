use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kl_logit_grad, softmax, CollabError, DistillSchedule, KcmConfig, TrainingPartition};
use crate::data::Sample;
use crate::kan::{Differentiable, KanError};
use crate::models::{clone_model, sgd_epoch, ClassifierHandle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillTerm {
    /// Divergence to the cached large-model distributions over `x2`.
    LargeTeacher,
    /// Divergence to the judgment model's distributions over `x1`.
    JudgmentTeacher,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub term: DistillTerm,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct DistilledModel {
    pub model: ClassifierHandle,
    pub loss_curve: Vec<EpochLoss>,
}

/// Starts the small model as a copy of the judgment model and fits it to
/// the large model on `x2` and to the frozen judgment model on `x1`.
pub fn train_kcm(
    partition: &TrainingPartition,
    pool: &[&Sample],
    judgment: &ClassifierHandle,
    config: &KcmConfig,
    seed: u64,
) -> Result<DistilledModel, CollabError> {
    config.validate()?;
    partition.validate(pool)?;
    let mut small = clone_model(judgment);
    let by_id: HashMap<u64, &Sample> = pool.iter().map(|s| (s.id, *s)).collect();

    // (normalized input, teacher distribution, is_large_teacher)
    let mut inputs = Vec::new();
    let mut teachers = Vec::new();
    let mut from_large = Vec::new();
    for id in &partition.x2 {
        inputs.push(small.normalizer.apply(&by_id[id].features)?);
        teachers.push(partition.teacher_targets[id].clone());
        from_large.push(true);
    }
    for id in &partition.x1 {
        let s = by_id[id];
        inputs.push(small.normalizer.apply(&s.features)?);
        teachers.push(judgment.distribution(&s.features)?);
        from_large.push(false);
    }
    let large_idx: Vec<usize> = (0..inputs.len()).filter(|&i| from_large[i]).collect();
    let judge_idx: Vec<usize> = (0..inputs.len()).filter(|&i| !from_large[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut loss_curve = Vec::new();
    let lambda = config.loss_mix;
    for epoch in 0..config.epochs {
        let (term, mut order, step, weights): (DistillTerm, Vec<usize>, f64, Option<(f64, f64)>) =
            match config.schedule {
                DistillSchedule::Alternating if epoch % 2 == 0 => {
                    (DistillTerm::LargeTeacher, large_idx.clone(), 2.0 * lambda, None)
                }
                DistillSchedule::Alternating => {
                    (DistillTerm::JudgmentTeacher, judge_idx.clone(), 2.0 * (1.0 - lambda), None)
                }
                DistillSchedule::Mixed => {
                    (DistillTerm::Mixed, (0..inputs.len()).collect(), 1.0, Some((lambda, 1.0 - lambda)))
                }
            };
        if order.is_empty() || step == 0.0 {
            continue;
        }
        order.shuffle(&mut rng);
        let loss = sgd_epoch(
            &mut small.network,
            &inputs,
            &order,
            config.batch_size,
            config.learning_rate * step,
            |i, logits| {
                let (l, mut g) = kl_logit_grad(&softmax(logits), &teachers[i], config.kl_direction);
                let w = match weights {
                    Some((wl, wj)) => if from_large[i] { wl } else { wj },
                    None => 1.0,
                };
                if w != 1.0 {
                    g.iter_mut().for_each(|v| *v *= w);
                }
                (w * l, g)
            },
        )
        .map_err(|e| match e {
            KanError::NonFinite(_) => CollabError::Diverged { epoch },
            e => e.into(),
        })?;
        if !loss.is_finite() || !small.network.params_finite() {
            return Err(CollabError::Diverged { epoch });
        }
        loss_curve.push(EpochLoss { epoch, term, mean_loss: loss });
    }
    small.final_loss = loss_curve.last().map(|l| l.mean_loss);
    Ok(DistilledModel { model: small, loss_curve })
}
