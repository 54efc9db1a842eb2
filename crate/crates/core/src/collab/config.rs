use serde::{Deserialize, Serialize};

use super::{CollabError, KlDirection};

/// Which confidence decides between the distilled small model and the
/// large model once the judgment model declines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondGate {
    /// Distilled small model's own confidence; the large model is only
    /// called for samples that end up routed to it.
    SmallConfidence,
    /// Large model's confidence, which costs one large-model call per
    /// sample past the first gate. Kept for audit runs.
    LargeConfidence,
}

/// How the two distillation terms share the epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistillSchedule {
    /// Even epochs fit the large-model targets, odd epochs the judgment
    /// targets; steps scaled by `2 * loss_mix` and `2 * (1 - loss_mix)`.
    Alternating,
    /// Every epoch sees both sets, weighted by `loss_mix` and `1 - loss_mix`.
    Mixed,
}

/// Routing threshold plus the distillation optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KcmConfig {
    pub epsilon: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub kl_direction: KlDirection,
    /// Weight on the large-model term; the judgment term gets `1 - loss_mix`.
    pub loss_mix: f64,
    pub schedule: DistillSchedule,
    pub second_gate: SecondGate,
    /// Ranked small-model classes included in large-model prompts.
    pub prompt_top_k: usize,
    /// Concurrent large-model calls.
    pub max_in_flight: usize,
}

impl Default for KcmConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.98,
            learning_rate: 1e-2,
            epochs: 20,
            batch_size: 32,
            kl_direction: KlDirection::StudentFirst,
            loss_mix: 0.5,
            schedule: DistillSchedule::Alternating,
            second_gate: SecondGate::SmallConfidence,
            prompt_top_k: 3,
            max_in_flight: 4,
        }
    }
}

impl KcmConfig {
    /// Training-time checks. `epsilon` may be 0 or 1 for inference-only
    /// degenerate gates, see [`validate_threshold`](Self::validate_threshold).
    pub fn validate(&self) -> Result<(), CollabError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(CollabError::Config(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        self.validate_threshold()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CollabError::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(CollabError::Config("epochs must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.loss_mix) {
            return Err(CollabError::Config(format!("loss_mix {} outside [0, 1]", self.loss_mix)));
        }
        if self.batch_size == 0 {
            return Err(CollabError::Config("batch_size must be positive".into()));
        }
        Ok(())
    }

    pub fn validate_threshold(&self) -> Result<(), CollabError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(CollabError::Config(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if self.max_in_flight == 0 {
            return Err(CollabError::Config("max_in_flight must be positive".into()));
        }
        Ok(())
    }
}
