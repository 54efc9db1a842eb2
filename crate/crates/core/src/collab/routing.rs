use serde::{Deserialize, Serialize};

use super::{confidence, CollabError, ConfidenceScore, ConfidenceSource, KcmConfig};
use crate::models::ClassifierHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteTarget {
    JudgmentModel,
    SmallModel,
    LargeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub target: RouteTarget,
    /// Confidences inspected, in gate order.
    pub confidence_trace: Vec<ConfidenceScore>,
}

/// Three-way gate: judgment model if its confidence exceeds `epsilon`,
/// otherwise the small model if the second-gate confidence exceeds it,
/// otherwise the large model. Comparisons are strict.
pub fn decide(epsilon: f64, first: ConfidenceScore, second: Option<ConfidenceScore>) -> RoutingDecision {
    if first.exceeds(epsilon) {
        return RoutingDecision { target: RouteTarget::JudgmentModel, confidence_trace: vec![first] };
    }
    match second {
        Some(s) if s.exceeds(epsilon) => {
            RoutingDecision { target: RouteTarget::SmallModel, confidence_trace: vec![first, s] }
        }
        Some(s) => RoutingDecision { target: RouteTarget::LargeModel, confidence_trace: vec![first, s] },
        None => RoutingDecision { target: RouteTarget::LargeModel, confidence_trace: vec![first] },
    }
}

/// Routes one sample using the judgment confidence and then the distilled
/// small model's confidence. Never calls the large model.
pub fn route(
    features: &[f64],
    judgment: &ClassifierHandle,
    small: &ClassifierHandle,
    config: &KcmConfig,
) -> Result<RoutingDecision, CollabError> {
    let (_, c_x) = confidence(&judgment.logits(features)?, ConfidenceSource::Judgment)?;
    if c_x.exceeds(config.epsilon) {
        return Ok(decide(config.epsilon, c_x, None));
    }
    let (_, c_s) = confidence(&small.logits(features)?, ConfidenceSource::Small)?;
    Ok(decide(config.epsilon, c_x, Some(c_s)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(v: f64) -> ConfidenceScore {
        ConfidenceScore { value: v, source: ConfidenceSource::Judgment }
    }

    fn s(v: f64) -> ConfidenceScore {
        ConfidenceScore { value: v, source: ConfidenceSource::Small }
    }

    #[test]
    fn threshold_cases() {
        assert_eq!(decide(0.98, j(0.99), None).target, RouteTarget::JudgmentModel);
        assert_eq!(decide(0.98, j(0.50), Some(s(0.99))).target, RouteTarget::SmallModel);
        let d = decide(0.98, j(0.50), Some(s(0.50)));
        assert_eq!(d.target, RouteTarget::LargeModel);
        assert_eq!(d.confidence_trace, vec![j(0.5), s(0.5)]);
    }

    #[test]
    fn tie_goes_to_the_next_gate() {
        assert_eq!(decide(0.98, j(0.98), Some(s(0.98))).target, RouteTarget::LargeModel);
        assert_eq!(decide(1.0, j(1.0), Some(s(1.0))).target, RouteTarget::LargeModel);
    }
}
