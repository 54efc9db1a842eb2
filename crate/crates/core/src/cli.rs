//! The `kcm` command line. All logic lives here so the binary stays a
//! one-line shim and tests can drive [`run`] directly.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::backends::{BackendError, HttpBackend, LargeModel, OracleBackend};
use crate::collab::{infer_batch, CollabError, DecisionLog, KcmConfig};
use crate::config::{BackendKind, ConfigError, RunConfig};
use crate::data::{generate_longtail, load_csv, write_csv, CsvSchema, DataError, Dataset, Manifest, Split};
use crate::eval::{
    evaluate_cascade, ColumnComparison, render_table, run_ablation, run_forgetting_benchmark, train_pipeline,
    write_decisions_csv, EvalError, ForgettingSpec, PartitionSummary,
};
use crate::kan::{KanError, ModelKind};
use crate::models::{ClassifierHandle, ModelError};

/// Bearer token for HTTP backends. Never read from config files or flags.
pub const TOKEN_ENV: &str = "KCM_BEARER_TOKEN";

pub const CONFIG_SNAPSHOT: &str = "config.resolved.toml";

#[derive(Debug, Parser)]
#[command(name = "kcm", version, about = "KAN small model with confidence-gated large-model collaboration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// `oracle`, or an http(s) endpoint of a model service.
    #[arg(long, global = true)]
    pub backend: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic long-tail dataset and its manifest.
    Generate,
    /// Train the judgment model, partition the pool and distill the small model.
    Train,
    /// Route the test split through trained models and log every decision.
    Infer,
    /// Small-only, large-only and cascade reports on the test split.
    Eval,
    /// KAN small model against a capacity-matched MLP.
    Ablate,
    /// Sequential-phase forgetting benchmark, KAN and MLP.
    Forget,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Eval(e.into())
    }
}

impl From<CollabError> for CliError {
    fn from(e: CollabError) -> Self {
        CliError::Eval(e.into())
    }
}

impl CliError {
    /// 1 I/O and other failures, 2 usage or configuration, 3 data,
    /// 4 backend, 5 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Backend(_) => 4,
            CliError::Io { .. } => 1,
            CliError::Eval(e) => match e {
                EvalError::Data(_) | EvalError::Model(ModelError::LabelOutOfRange { .. }) => 3,
                EvalError::Backend(_) => 4,
                EvalError::Collab(CollabError::Diverged { .. })
                | EvalError::Model(ModelError::NonFiniteLoss { .. })
                | EvalError::Network(KanError::NonFinite(_)) => 5,
                EvalError::Collab(CollabError::Config(_)) | EvalError::CapacityMismatch { .. } => 2,
                _ => 1,
            },
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Config file, then flag overrides.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    if let Some(e) = cli.epsilon {
        if !(0.0..=1.0).contains(&e) {
            return Err(CliError::Usage(format!("--epsilon {e} outside [0, 1]")));
        }
        cfg.kcm.epsilon = e;
    }
    if let Some(b) = &cli.backend {
        if b == "oracle" {
            cfg.backend.kind = BackendKind::Oracle;
        } else if b.starts_with("http://") || b.starts_with("https://") {
            cfg.backend.kind = BackendKind::Http;
            cfg.backend.http.endpoint = b.clone();
        } else {
            return Err(CliError::Usage(format!("--backend must be `oracle` or an http(s) URL, got `{b}`")));
        }
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve(cli)?;
    let needs_seed = matches!(cli.command, Command::Generate | Command::Train);
    if needs_seed && cfg.seed.is_none() {
        return Err(CliError::Usage("a seed is required: pass --seed or set `seed` in the config".into()));
    }
    let out = cfg.out.clone();
    fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    write_text(&out.join(CONFIG_SNAPSHOT), &cfg.to_toml()?)?;
    match cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Train => cmd_train(&cfg),
        Command::Infer => cmd_infer(&cfg),
        Command::Eval => cmd_eval(&cfg),
        Command::Ablate => cmd_ablate(&cfg),
        Command::Forget => cmd_forget(&cfg),
    }
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.into(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.into()))?;
    write_text(path, &(text + "\n"))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|source| CliError::Io { path: path.into(), source })
}

/// Feature count from a CSV header: every column between `id` and `label`.
fn csv_feature_dim(path: &Path) -> Result<usize, DataError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?;
    Ok(header.iter().filter(|c| c.starts_with('f') && c[1..].parse::<usize>().is_ok()).count())
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    match &cfg.data.path {
        Some(path) => {
            let schema = CsvSchema { feature_dim: csv_feature_dim(path)?, labels: cfg.data.labels.clone() };
            Ok(load_csv(path, &schema)?)
        }
        None => Ok(generate_longtail(&cfg.data.generate)?),
    }
}

fn build_backend(cfg: &RunConfig) -> Result<Box<dyn LargeModel>, CliError> {
    Ok(match cfg.backend.kind {
        BackendKind::Oracle => Box::new(OracleBackend::new(cfg.backend.oracle.clone())?),
        BackendKind::Http => {
            let mut http = cfg.backend.http.clone();
            http.bearer_token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
            Box::new(HttpBackend::new(http)?)
        }
    })
}

fn load_models(cfg: &RunConfig) -> Result<(ClassifierHandle, ClassifierHandle), CliError> {
    let dir = cfg.models_dir();
    Ok((ClassifierHandle::load(dir, "judgment")?, ClassifierHandle::load(dir, "small")?))
}

fn cmd_generate(cfg: &RunConfig) -> Result<(), CliError> {
    let mut spec = cfg.data.generate.clone();
    spec.seed = seed(cfg);
    let data = generate_longtail(&spec)?;
    write_csv(&data, create(&cfg.out.join("dataset.csv"))?)?;
    write_json(&cfg.out.join("manifest.json"), &Manifest::for_dataset(&spec, &data))?;
    println!("wrote {} rows to {}", data.len(), cfg.out.join("dataset.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    dataset_hash: String,
    seed: u64,
    judgment_kind: ModelKind,
    judgment_params: usize,
    judgment_final_loss: Option<f64>,
    partition: PartitionSummary,
    /// Pool samples diverted to x3 because the backend failed.
    warnings: usize,
}

fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let backend = build_backend(cfg)?;
    let p = train_pipeline(&data, &cfg.arch, &cfg.kcm, backend.as_ref(), seed(cfg))?;
    let out = &cfg.out;
    p.judgment.save(out, "judgment")?;
    p.small.save(out, "small")?;
    write_json(&out.join("partition.json"), &p.partition)?;
    write_json(&out.join("loss_curve.json"), &p.loss_curve)?;
    let summary = TrainSummary {
        dataset_hash: data.content_hash(),
        seed: seed(cfg),
        judgment_kind: p.judgment.kind(),
        judgment_params: p.judgment.num_params(),
        judgment_final_loss: p.judgment.final_loss,
        partition: PartitionSummary::from(&p.partition),
        warnings: p.partition.backend_failures,
    };
    write_json(&out.join("train_summary.json"), &summary)?;
    let s = summary.partition;
    println!("partition: x1 {} | x2 {} | x3 {} ({} backend calls)", s.x1, s.x2, s.x3, s.backend_calls);
    if summary.warnings > 0 {
        warn!("{} pool samples diverted to x3 after backend failures", summary.warnings);
        println!("warnings: {}", summary.warnings);
    }
    Ok(())
}

fn cmd_infer(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let (judgment, small) = load_models(cfg)?;
    let backend = build_backend(cfg)?;
    let test = data.split(Split::Test);
    let log = DecisionLog::new();
    let results = infer_batch(&test, &judgment, &small, backend.as_ref(), &data.label_names, &cfg.kcm, &log)?;
    write_decisions_csv(&test, &results, create(&cfg.out.join("predictions.csv"))?)?;
    let path = cfg.out.join("decisions.ndjson");
    log.write_ndjson(create(&path)?).map_err(|source| CliError::Io { path, source })?;
    println!("routed {} samples, lm rate {:.2}%", results.len(), log.lm_rate());
    Ok(())
}

fn cmd_eval(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let (judgment, small) = load_models(cfg)?;
    let backend = build_backend(cfg)?;
    let test = data.split(Split::Test);
    let s = seed(cfg);
    let at = |epsilon: f64| {
        let kcm = KcmConfig { epsilon, ..cfg.kcm.clone() };
        evaluate_cascade(&test, &judgment, &small, backend.as_ref(), &data.label_names, &kcm, s)
    };
    let run = at(cfg.kcm.epsilon)?;
    let cols = ColumnComparison { small: at(0.0)?.report, large: at(1.0)?.report, kcm: run.report.clone() };
    write_decisions_csv(&test, &run.inferences, create(&cfg.out.join("decisions.csv"))?)?;
    write_json(&cfg.out.join("report.json"), &cols)?;
    let table = render_table(&[("small", &cols.small), ("large", &cols.large), ("kcm", &cols.kcm)]);
    write_text(&cfg.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_ablate(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_dataset(cfg)?;
    let backend = build_backend(cfg)?;
    let report = run_ablation(&data, &cfg.arch, &cfg.kcm, backend.as_ref(), seed(cfg))?;
    write_json(&cfg.out.join("ablation.json"), &report)?;
    let table = render_table(&[("mcm", &report.mcm.report), ("kcm", &report.kcm.report)]);
    let text = format!(
        "{table}params    {:>10}{:>10}\ndataset {}\n",
        report.mcm.params, report.kcm.params, report.dataset_hash
    );
    write_text(&cfg.out.join("ablation.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_forget(cfg: &RunConfig) -> Result<(), CliError> {
    let base = ForgettingSpec { seed: seed(cfg), ..cfg.forgetting.clone() };
    let mut reports = Vec::new();
    for kind in [ModelKind::Kan, ModelKind::Mlp] {
        let r = run_forgetting_benchmark(&ForgettingSpec { kind, ..base.clone() })?;
        info!("{kind}: forgetting {:.4}", r.score);
        println!("{kind:<4} params {:>4}  forgetting {:.4}  final retention {:.4}", r.params, r.score, r.final_retention);
        reports.push(r);
    }
    write_json(&cfg.out.join("forgetting.json"), &reports)?;
    Ok(())
}
