use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BackendError, LargeModel, LargeModelResponse};
use crate::collab::PromptAugmentation;
use crate::data::{Region, Sample};

/// Synthetic large model: right with a per-region probability, decided by
/// a hash of `(seed, sample id)` so answers repeat across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleSpec {
    pub region_accuracy: BTreeMap<Region, f64>,
    /// Confidence drawn uniformly from `[lo, hi)` when the answer is right.
    pub confidence_when_correct: (f64, f64),
    /// Same, when the answer is wrong.
    pub confidence_when_wrong: (f64, f64),
    pub cost_per_call: f64,
    pub seed: u64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self::with_accuracies(0.60, 0.57, 0.57)
    }
}

impl OracleSpec {
    pub fn with_accuracies(head: f64, med: f64, tail: f64) -> Self {
        Self {
            region_accuracy: [(Region::Head, head), (Region::Med, med), (Region::Tail, tail)].into(),
            confidence_when_correct: (0.97, 1.0),
            confidence_when_wrong: (0.50, 0.99),
            cost_per_call: 1.0,
            seed: 0,
        }
    }

    pub fn uniform(accuracy: f64) -> Self {
        Self::with_accuracies(accuracy, accuracy, accuracy)
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.region_accuracy.values().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(BackendError::Config("region accuracies must lie in [0, 1]".into()));
        }
        for (lo, hi) in [self.confidence_when_correct, self.confidence_when_wrong] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(BackendError::Config(format!("bad confidence range [{lo}, {hi})")));
            }
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Response for `sample` given its true label.
pub fn oracle_predict(
    spec: &OracleSpec,
    sample: &Sample,
    num_classes: usize,
) -> Result<LargeModelResponse, BackendError> {
    let accuracy = *spec.region_accuracy.get(&sample.region).ok_or(BackendError::UnknownRegion(sample.region))?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(spec.seed ^ splitmix64(sample.id)));
    let correct = rng.random::<f64>() < accuracy;
    let predicted = if correct || num_classes < 2 {
        sample.label
    } else {
        let k = rng.random_range(0..num_classes - 1);
        if k >= sample.label { k + 1 } else { k }
    };
    let (lo, hi) = if correct { spec.confidence_when_correct } else { spec.confidence_when_wrong };
    let floor = 1.0 / num_classes as f64;
    let c = if hi > lo { rng.random_range(lo..hi) } else { lo }.max(floor);
    let rest = if num_classes > 1 { (1.0 - c) / (num_classes - 1) as f64 } else { 0.0 };
    let mut distribution = vec![rest; num_classes];
    distribution[predicted] = c;
    // renormalize so the sum is exactly representable within tolerance
    let total: f64 = distribution.iter().sum();
    distribution.iter_mut().for_each(|p| *p /= total);
    LargeModelResponse::new(distribution, num_classes, Duration::ZERO, spec.cost_per_call, "oracle")
}

#[derive(Debug, Clone)]
pub struct OracleBackend {
    spec: OracleSpec,
}

impl OracleBackend {
    pub fn new(spec: OracleSpec) -> Result<Self, BackendError> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }
}

impl LargeModel for OracleBackend {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(
        &self,
        sample: &Sample,
        _prompt: &PromptAugmentation,
        labels: &[String],
    ) -> Result<LargeModelResponse, BackendError> {
        oracle_predict(&self.spec, sample, labels.len())
    }
}
