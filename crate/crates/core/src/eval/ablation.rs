use serde::{Deserialize, Serialize};

use super::{evaluate_cascade, train_pipeline, EvalError, EvalReport, PartitionSummary, REPORT_VERSION};
use crate::backends::LargeModel;
use crate::collab::KcmConfig;
use crate::data::{Dataset, Split};
use crate::kan::ModelKind;
use crate::models::ArchSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub kind: ModelKind,
    pub hidden: Vec<usize>,
    pub params: usize,
    pub partition: PartitionSummary,
    /// Hash of the distillation-pool id sequence this arm consumed.
    pub pool_hash: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub version: u32,
    pub seed: u64,
    pub dataset_hash: String,
    pub kcm: AblationArm,
    pub mcm: AblationArm,
}

impl AblationReport {
    /// Parameter count of the second arm relative to the first.
    pub fn param_ratio(&self) -> f64 {
        self.mcm.params as f64 / self.kcm.params as f64
    }

    pub fn same_streams(&self) -> bool {
        self.kcm.pool_hash == self.mcm.pool_hash && self.kcm.report.stream_hash == self.mcm.report.stream_hash
    }
}

/// KAN small model against a capacity-matched MLP, same data, seeds and
/// backend.
pub fn run_ablation(
    data: &Dataset,
    arch: &ArchSpec,
    config: &KcmConfig,
    backend: &dyn LargeModel,
    seed: u64,
) -> Result<AblationReport, EvalError> {
    let (d, c) = (data.feature_dim, data.num_classes());
    let kan = arch.with_kind(ModelKind::Kan, d, c)?;
    let mlp = kan.with_kind(ModelKind::Mlp, d, c)?;
    run_paired(data, &kan, &mlp, config, backend, seed)
}

/// Runs the full pipeline twice, once per architecture, and evaluates both
/// on the test split. Fails if the parameter counts differ by more than 10%.
pub fn run_paired(
    data: &Dataset,
    first: &ArchSpec,
    second: &ArchSpec,
    config: &KcmConfig,
    backend: &dyn LargeModel,
    seed: u64,
) -> Result<AblationReport, EvalError> {
    let test = data.split(Split::Test);
    let arm = |arch: &ArchSpec| -> Result<AblationArm, EvalError> {
        let p = train_pipeline(data, arch, config, backend, seed)?;
        let run = evaluate_cascade(&test, &p.judgment, &p.small, backend, &data.label_names, config, seed)?;
        Ok(AblationArm {
            kind: arch.kind,
            hidden: arch.hidden.clone(),
            params: p.small.num_params(),
            partition: PartitionSummary::from(&p.partition),
            pool_hash: p.partition.stream_hash.clone(),
            report: run.report,
        })
    };
    let kcm = arm(first)?;
    let mcm = arm(second)?;
    let ratio = mcm.params as f64 / kcm.params as f64;
    if !(0.9..=1.1).contains(&ratio) {
        return Err(EvalError::CapacityMismatch { kan: kcm.params, mlp: mcm.params });
    }
    Ok(AblationReport { version: REPORT_VERSION, seed, dataset_hash: data.content_hash(), kcm, mcm })
}
