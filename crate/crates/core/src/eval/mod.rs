//! Experiment drivers and reports: the end-to-end training pipeline,
//! cascade evaluation with per-region accuracy and large-model rate, the
//! KAN-versus-MLP ablation, and the sequential forgetting benchmark.

mod ablation;
mod cascade;
mod forgetting;
mod pipeline;

pub use ablation::{run_ablation, run_paired, AblationArm, AblationReport};
pub use cascade::{
    compare_columns, evaluate_cascade, region_accuracy, render_table, write_decisions_csv, CascadeRun,
    ColumnComparison, EvalReport, RegionScores,
};
pub use forgetting::{
    forgetting_score, peak_target, run_forgetting_benchmark, ForgettingReport, ForgettingSpec,
};
pub use pipeline::{train_pipeline, PartitionSummary, TrainedPipeline};

use thiserror::Error;

use crate::backends::BackendError;
use crate::collab::CollabError;
use crate::data::DataError;
use crate::kan::KanError;
use crate::models::ModelError;

/// Version stamped on every report file.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Collab(#[from] CollabError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Network(#[from] KanError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matched MLP has {mlp} parameters against {kan} for the KAN, outside ±10%")]
    CapacityMismatch { kan: usize, mlp: usize },
}
