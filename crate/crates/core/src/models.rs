//! Classifiers behind one interface: a KAN or MLP network plus frozen input
//! normalization, trained with cross-entropy and plain minibatch SGD.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collab::softmax;
use crate::data::Sample;
use crate::kan::{
    io, match_capacity_dims, AnyNetwork, Differentiable, KanConfig, KanError, KanNetwork,
    MlpNetwork, ModelKind,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Network(#[from] KanError),
    #[error("label {label} out of range for {count} classes")]
    LabelOutOfRange { label: usize, count: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("no training samples")]
    Empty,
    #[error("metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-feature standardization, divided by `spread` and clamped to the
/// grid range so `spread` standard deviations land on the grid edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub spread: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Normalizer {
    pub fn fit(samples: &[&Sample], spread: f64, lo: f64, hi: f64) -> Self {
        let d = samples[0].features.len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(&s.features) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(&s.features).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale, spread, lo, hi }
    }

    pub fn identity(d: usize) -> Self {
        Self { mean: vec![0.0; d], scale: vec![1.0; d], spread: 1.0, lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, KanError> {
        if x.len() != self.mean.len() {
            return Err(KanError::DimensionMismatch { expected: self.mean.len(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KanError::NonFinite("sample features"));
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| ((v - m) / s / self.spread).clamp(self.lo, self.hi))
            .collect())
    }
}

/// Architecture and optimizer settings for supervised training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchSpec {
    pub kind: ModelKind,
    pub hidden: Vec<usize>,
    pub order: usize,
    pub num_intervals: usize,
    pub lo: f64,
    pub hi: f64,
    pub spread: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Kan,
            hidden: vec![16, 16],
            order: 3,
            num_intervals: 5,
            lo: -1.0,
            hi: 1.0,
            spread: 3.0,
            epochs: 40,
            learning_rate: 0.1,
            batch_size: 32,
        }
    }
}

impl ArchSpec {
    pub fn kan_config(&self, input: usize, classes: usize) -> KanConfig {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(classes);
        KanConfig {
            dims,
            order: self.order,
            num_intervals: self.num_intervals,
            lo: self.lo,
            hi: self.hi,
            ..KanConfig::default()
        }
    }

    /// Same settings with an MLP whose size matches this spec's KAN
    /// within ±10% parameters.
    pub fn matched_mlp(&self, input: usize, classes: usize) -> Result<ArchSpec, KanError> {
        let kan = self.kan_config(input, classes);
        let dims = match_capacity_dims(&kan.dims, kan.param_count())?;
        Ok(ArchSpec { kind: ModelKind::Mlp, hidden: dims[1..dims.len() - 1].to_vec(), ..self.clone() })
    }

    pub fn with_kind(&self, kind: ModelKind, input: usize, classes: usize) -> Result<ArchSpec, KanError> {
        match kind {
            ModelKind::Kan => Ok(ArchSpec { kind, ..self.clone() }),
            ModelKind::Mlp if self.kind == ModelKind::Kan => self.matched_mlp(input, classes),
            ModelKind::Mlp => Ok(self.clone()),
        }
    }

    pub fn build(&self, input: usize, classes: usize, rng: &mut ChaCha8Rng) -> Result<AnyNetwork, KanError> {
        match self.kind {
            ModelKind::Kan => Ok(AnyNetwork::Kan(KanNetwork::new(&self.kan_config(input, classes), rng)?)),
            ModelKind::Mlp => {
                let mut dims = vec![input];
                dims.extend(&self.hidden);
                dims.push(classes);
                Ok(AnyNetwork::Mlp(MlpNetwork::new(&dims, rng)?))
            }
        }
    }
}

/// A trained classifier. Cloning yields a deep, independent copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHandle {
    pub network: AnyNetwork,
    pub label_count: usize,
    pub normalizer: Normalizer,
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    kind: ModelKind,
    label_count: usize,
    normalizer: Normalizer,
    final_loss: Option<f64>,
}

impl ClassifierHandle {
    pub fn kind(&self) -> ModelKind {
        self.network.kind()
    }

    pub fn input_dim(&self) -> usize {
        self.network.input_dim()
    }

    pub fn num_params(&self) -> usize {
        self.network.num_params()
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>, KanError> {
        self.network.forward(&self.normalizer.apply(features)?)
    }

    pub fn distribution(&self, features: &[f64]) -> Result<Vec<f64>, KanError> {
        Ok(softmax(&self.logits(features)?))
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize, KanError> {
        Ok(argmax(&self.logits(features)?))
    }

    pub fn accuracy<'a>(&self, samples: impl IntoIterator<Item = &'a Sample>) -> Result<f64, KanError> {
        let (mut hit, mut n) = (0usize, 0usize);
        for s in samples {
            n += 1;
            if self.predict(&s.features)? == s.label {
                hit += 1;
            }
        }
        Ok(if n == 0 { 0.0 } else { hit as f64 / n as f64 })
    }

    pub fn params_bits(&self) -> Vec<u64> {
        self.network.params().iter().map(|p| p.to_bits()).collect()
    }

    /// Writes `<stem>.kcm` (network) and `<stem>.meta.json` (sidecar).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(), ModelError> {
        std::fs::write(dir.join(format!("{stem}.kcm")), io::to_bytes(&self.network))?;
        let meta = Sidecar {
            version: 1,
            kind: self.kind(),
            label_count: self.label_count,
            normalizer: self.normalizer.clone(),
            final_loss: self.final_loss,
        };
        let text = serde_json::to_string_pretty(&meta).map_err(|e| ModelError::Metadata(e.to_string()))?;
        std::fs::write(dir.join(format!("{stem}.meta.json")), text + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self, ModelError> {
        let network = io::from_bytes(&std::fs::read(dir.join(format!("{stem}.kcm")))?)?;
        let text = std::fs::read_to_string(dir.join(format!("{stem}.meta.json")))?;
        let meta: Sidecar = serde_json::from_str(&text).map_err(|e| ModelError::Metadata(e.to_string()))?;
        if meta.kind != network.kind() {
            return Err(ModelError::Metadata(format!("sidecar says {}, file holds {}", meta.kind, network.kind())));
        }
        if meta.label_count != network.output_dim() {
            return Err(ModelError::Metadata("label_count does not match network output".into()));
        }
        Ok(Self { network, label_count: meta.label_count, normalizer: meta.normalizer, final_loss: meta.final_loss })
    }
}

/// Deep copy; training the copy never touches the original.
pub fn clone_model(handle: &ClassifierHandle) -> ClassifierHandle {
    handle.clone()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// One pass of minibatch SGD over `order`. `loss_grad(i, logits)` returns the
/// loss of example `i` and its gradient with respect to the logits. Returns
/// the mean loss.
pub(crate) fn sgd_epoch<F>(
    net: &mut AnyNetwork,
    inputs: &[Vec<f64>],
    order: &[usize],
    batch_size: usize,
    step: f64,
    loss_grad: F,
) -> Result<f64, KanError>
where
    F: Fn(usize, &[f64]) -> (f64, Vec<f64>),
{
    sgd_epoch_masked(net, inputs, order, batch_size, step, None, loss_grad)
}

/// [`sgd_epoch`] that only updates parameters whose `trainable` entry is true.
pub(crate) fn sgd_epoch_masked<F>(
    net: &mut AnyNetwork,
    inputs: &[Vec<f64>],
    order: &[usize],
    batch_size: usize,
    step: f64,
    trainable: Option<&[bool]>,
    loss_grad: F,
) -> Result<f64, KanError>
where
    F: Fn(usize, &[f64]) -> (f64, Vec<f64>),
{
    let mut total = 0.0;
    let mut grad = vec![0.0; net.num_params()];
    for batch in order.chunks(batch_size.max(1)) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &i in batch {
            let trace = net.forward_trace(&inputs[i])?;
            let (loss, upstream) = loss_grad(i, net.trace_output(&trace));
            total += loss;
            net.backward_into(&trace, &upstream, &mut grad)?;
        }
        if let Some(mask) = trainable {
            grad.iter_mut().zip(mask).filter(|(_, m)| !**m).for_each(|(g, _)| *g = 0.0);
        }
        net.descend(&grad, step / batch.len() as f64);
    }
    Ok(total / order.len().max(1) as f64)
}

/// Cross-entropy loss and logit gradient for one example.
pub fn cross_entropy(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let mut p = softmax(logits);
    let loss = -(p[label].max(1e-300)).ln();
    p[label] -= 1.0;
    (loss, p)
}

pub fn train_supervised(
    samples: &[&Sample],
    label_count: usize,
    arch: &ArchSpec,
    seed: u64,
) -> Result<ClassifierHandle, ModelError> {
    if samples.is_empty() {
        return Err(ModelError::Empty);
    }
    if let Some(s) = samples.iter().find(|s| s.label >= label_count) {
        return Err(ModelError::LabelOutOfRange { label: s.label, count: label_count });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = samples[0].features.len();
    let normalizer = Normalizer::fit(samples, arch.spread, arch.lo, arch.hi);
    let mut network = arch.build(input, label_count, &mut rng)?;
    let inputs = samples.iter().map(|s| normalizer.apply(&s.features)).collect::<Result<Vec<_>, _>>()?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut final_loss = None;
    for epoch in 0..arch.epochs {
        order.shuffle(&mut rng);
        let loss = sgd_epoch(&mut network, &inputs, &order, arch.batch_size, arch.learning_rate, |i, z| {
            cross_entropy(z, labels[i])
        })
        .map_err(|e| match e {
            KanError::NonFinite(_) => ModelError::NonFiniteLoss { epoch },
            e => e.into(),
        })?;
        if !loss.is_finite() || !network.params_finite() {
            return Err(ModelError::NonFiniteLoss { epoch });
        }
        final_loss = Some(loss);
    }
    Ok(ClassifierHandle { network, label_count, normalizer, final_loss })
}
