//! Labelled feature datasets, the synthetic long-tail generator, and
//! head/med/tail region tagging.

mod csv_io;
mod longtail;
mod regions;

pub use csv_io::{load_csv, read_csv, write_csv, CsvSchema};
pub use longtail::{class_counts, generate_longtail, LongTailSpec, Manifest};
pub use regions::{partition_regions, partition_regions_with, RegionSplit};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("infeasible long-tail spec: {0}")]
    InfeasibleSpec(String),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("header: {0}")]
    Header(String),
    #[error("label {label} out of range for {count} classes")]
    LabelOutOfRange { label: usize, count: usize },
    #[error("empty dataset")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Head,
    Med,
    Tail,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Head, Region::Med, Region::Tail];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Head => "head",
            Region::Med => "med",
            Region::Tail => "tail",
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: usize,
    pub region: Region,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub label_names: Vec<String>,
    pub feature_dim: usize,
}

impl Dataset {
    /// Builds a dataset and tags regions from the train-split class counts.
    pub fn new(
        mut samples: Vec<Sample>,
        label_names: Vec<String>,
        feature_dim: usize,
    ) -> Result<Self, DataError> {
        let count = label_names.len();
        if let Some(s) = samples.iter().find(|s| s.label >= count) {
            return Err(DataError::LabelOutOfRange { label: s.label, count });
        }
        let counts = {
            let mut c = vec![0usize; count];
            for s in samples.iter().filter(|s| s.split == Split::Train) {
                c[s.label] += 1;
            }
            c
        };
        let regions = partition_regions(&counts);
        for s in &mut samples {
            s.region = regions[s.label];
        }
        Ok(Self { samples, label_names, feature_dim })
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn split(&self, split: Split) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    /// Per-class sample counts within `split`.
    pub fn class_histogram(&self, split: Option<Split>) -> Vec<usize> {
        let mut c = vec![0usize; self.num_classes()];
        for s in self.samples.iter().filter(|s| split.is_none_or(|sp| s.split == sp)) {
            c[s.label] += 1;
        }
        c
    }

    pub fn class_regions(&self) -> Vec<Region> {
        partition_regions(&self.class_histogram(Some(Split::Train)))
    }

    /// SHA-256 of the canonical CSV encoding, hex.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        write_csv(self, &mut buf).expect("in-memory write");
        hex::encode(Sha256::digest(&buf))
    }
}

/// Hex SHA-256 over a sequence of sample ids, used to check that two
/// pipelines consumed identical sample streams.
pub fn id_sequence_hash<'a>(ids: impl IntoIterator<Item = &'a u64>) -> String {
    let mut h = Sha256::new();
    for id in ids {
        h.update(id.to_le_bytes());
    }
    hex::encode(h.finalize())
}
