//! The collaboration engine: confidence gates, three-way routing, prompt
//! augmentation for large-model calls, KL distillation of the small model
//! from the large model and the judgment model, and routed inference.

mod config;
mod confidence;
mod distill;
mod infer;
mod log;
mod loss;
mod partition;
mod prompt;
mod routing;

pub use config::{DistillSchedule, KcmConfig, SecondGate};
pub use confidence::{confidence, score_of, softmax, ConfidenceScore, ConfidenceSource};
pub use distill::{train_kcm, DistillTerm, DistilledModel, EpochLoss};
pub use infer::{infer, infer_batch, Inference};
pub use log::{lm_rate, now_ms, DecisionLog, DecisionRecord};
pub use loss::{kl_logit_grad, kl_loss, KlDirection, Q_FLOOR};
pub use partition::{partition_training, TrainingPartition};
pub use prompt::{build_prompt, rank_classes, PromptAugmentation};
pub use routing::{decide, route, RouteTarget, RoutingDecision};

use thiserror::Error;

use crate::kan::KanError;

#[derive(Debug, Error)]
pub enum CollabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] KanError),
    #[error("distillation diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Runs `f` inside a pool of `threads` workers.
pub(crate) fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CollabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CollabError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}
