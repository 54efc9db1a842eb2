use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{partition_regions, DataError, Dataset, Sample, Split};

/// Gaussian-cluster classification data with an exponential class-count
/// profile `n_c = n_max * rho^(-c / (C - 1))` on the train split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LongTailSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    pub max_per_class: usize,
    /// `n_max / n_min`.
    pub imbalance: f64,
    /// Distance scale of class centers, placed on a regular simplex.
    pub separation: f64,
    pub noise: f64,
    /// Balanced per-class count of the val split (the distillation pool).
    pub val_per_class: usize,
    /// Balanced per-class count of the test split.
    pub test_per_class: usize,
    pub seed: u64,
}

impl Default for LongTailSpec {
    fn default() -> Self {
        Self {
            num_classes: 10,
            feature_dim: 16,
            max_per_class: 500,
            imbalance: 100.0,
            separation: 3.0,
            noise: 1.0,
            val_per_class: 100,
            test_per_class: 100,
            seed: 0,
        }
    }
}

/// Written beside a generated dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub spec: LongTailSpec,
    pub labels: Vec<String>,
    pub feature_dim: usize,
    pub rows: usize,
    pub train_class_counts: Vec<usize>,
    pub sha256: String,
}

impl Manifest {
    pub fn for_dataset(spec: &LongTailSpec, data: &Dataset) -> Self {
        Self {
            version: 1,
            spec: spec.clone(),
            labels: data.label_names.clone(),
            feature_dim: data.feature_dim,
            rows: data.len(),
            train_class_counts: data.class_histogram(Some(Split::Train)),
            sha256: data.content_hash(),
        }
    }
}

/// Closed-form train-split count per class.
pub fn class_counts(spec: &LongTailSpec) -> Result<Vec<usize>, DataError> {
    if spec.num_classes < 3 {
        return Err(DataError::InfeasibleSpec("need at least 3 classes".into()));
    }
    if !spec.imbalance.is_finite() || spec.imbalance < 1.0 {
        return Err(DataError::InfeasibleSpec(format!("imbalance {} < 1", spec.imbalance)));
    }
    let n_min = spec.max_per_class as f64 / spec.imbalance;
    if n_min < 1.0 {
        return Err(DataError::InfeasibleSpec(format!(
            "smallest class would have {n_min:.3} samples"
        )));
    }
    let last = (spec.num_classes - 1) as f64;
    Ok((0..spec.num_classes)
        .map(|c| {
            let n = spec.max_per_class as f64 * spec.imbalance.powf(-(c as f64) / last);
            (n.round() as usize).max(1)
        })
        .collect())
}

fn class_centers(spec: &LongTailSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let c = spec.num_classes;
    let d = spec.feature_dim;
    // regular simplex in R^C: e_k - centroid, pairwise distance sqrt(2)
    let simplex: Vec<Vec<f64>> = (0..c)
        .map(|k| (0..c).map(|j| if j == k { 1.0 } else { 0.0 } - 1.0 / c as f64).collect())
        .collect();
    if d >= c {
        simplex
            .into_iter()
            .map(|v| {
                let mut out = vec![0.0; d];
                for (o, x) in out.iter_mut().zip(v) {
                    *o = spec.separation * x;
                }
                out
            })
            .collect()
    } else {
        let proj: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                (0..c)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z / (d as f64).sqrt()
                    })
                    .collect()
            })
            .collect();
        simplex
            .iter()
            .map(|v| {
                proj.iter()
                    .map(|row| spec.separation * row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
                    .collect()
            })
            .collect()
    }
}

pub fn generate_longtail(spec: &LongTailSpec) -> Result<Dataset, DataError> {
    if spec.feature_dim == 0 {
        return Err(DataError::InfeasibleSpec("feature_dim must be positive".into()));
    }
    let counts = class_counts(spec)?;
    let regions = partition_regions(&counts);
    let labels: Vec<String> =
        regions.iter().enumerate().map(|(c, r)| format!("{}_{c}", r.as_str())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = class_centers(spec, &mut rng);
    let mut samples = Vec::new();
    let mut next_id = 0u64;
    for split in [Split::Train, Split::Val, Split::Test] {
        for (class, center) in centers.iter().enumerate() {
            let n = match split {
                Split::Train => counts[class],
                Split::Val => spec.val_per_class,
                Split::Test => spec.test_per_class,
            };
            for _ in 0..n {
                let features = center
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + spec.noise * z
                    })
                    .collect();
                samples.push(Sample { id: next_id, features, label: class, region: regions[class], split });
                next_id += 1;
            }
        }
    }
    Dataset::new(samples, labels, spec.feature_dim)
}
