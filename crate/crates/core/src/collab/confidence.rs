use serde::{Deserialize, Serialize};

use super::CollabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConfidenceSource {
    Judgment,
    Small,
    Large,
}

/// Maximum softmax probability of one model's output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceScore {
    pub value: f64,
    pub source: ConfidenceSource,
}

impl ConfidenceScore {
    pub fn exceeds(&self, epsilon: f64) -> bool {
        self.value > epsilon
    }
}

/// Max-subtracted softmax. Callers are expected to pass finite logits.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax distribution of `logits` and its maximum as the confidence.
pub fn confidence(
    logits: &[f64],
    source: ConfidenceSource,
) -> Result<(Vec<f64>, ConfidenceScore), CollabError> {
    if logits.is_empty() {
        return Err(CollabError::InvalidInput("empty logits".into()));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(CollabError::InvalidInput("non-finite logits".into()));
    }
    let dist = softmax(logits);
    let score = score_of(&dist, source);
    Ok((dist, score))
}

pub fn score_of(distribution: &[f64], source: ConfidenceSource) -> ConfidenceScore {
    let value = distribution.iter().copied().fold(0.0, f64::max).clamp(0.0, 1.0);
    ConfidenceScore { value, source }
}
