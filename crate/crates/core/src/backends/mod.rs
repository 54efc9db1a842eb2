//! Large-model backends: a seeded synthetic oracle and an HTTP client for a
//! real model service, both behind [`LargeModel`].

mod http;
mod oracle;

pub use http::{HttpBackend, HttpConfig, WireRequest, WireResponse, WIRE_VERSION};
pub use oracle::{OracleBackend, OracleSpec};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collab::PromptAugmentation;
use crate::data::{Region, Sample};

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: usize },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("HTTP status {status} after {attempts} attempt(s)")]
    Status { status: u16, attempts: usize },
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: usize },
    #[error("no accuracy configured for region `{0}`")]
    UnknownRegion(Region),
    #[error("backend configuration: {0}")]
    Config(String),
}

/// Teacher output: a class distribution and its maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeModelResponse {
    pub distribution: Vec<f64>,
    pub confidence: f64,
    pub latency: Duration,
    pub cost_units: f64,
    pub model_name: String,
}

impl LargeModelResponse {
    /// Validates the distribution and derives the confidence.
    pub fn new(
        distribution: Vec<f64>,
        expected_classes: usize,
        latency: Duration,
        cost_units: f64,
        model_name: impl Into<String>,
    ) -> Result<Self, BackendError> {
        if distribution.len() != expected_classes {
            return Err(BackendError::Malformed(format!(
                "distribution has {} entries, expected {expected_classes}",
                distribution.len()
            )));
        }
        if distribution.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BackendError::Malformed("negative or non-finite probability".into()));
        }
        let sum: f64 = distribution.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(BackendError::Malformed(format!("distribution sums to {sum}")));
        }
        let confidence = distribution.iter().copied().fold(0.0, f64::max);
        Ok(Self { distribution, confidence, latency, cost_units, model_name: model_name.into() })
    }

    pub fn predicted_class(&self) -> usize {
        crate::models::argmax(&self.distribution)
    }
}

/// The expensive model consulted for hard samples.
pub trait LargeModel: Send + Sync {
    fn name(&self) -> &str;

    fn predict(
        &self,
        sample: &Sample,
        prompt: &PromptAugmentation,
        labels: &[String],
    ) -> Result<LargeModelResponse, BackendError>;
}

impl<T: LargeModel + ?Sized> LargeModel for &T {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, s: &Sample, p: &PromptAugmentation, l: &[String]) -> Result<LargeModelResponse, BackendError> {
        (**self).predict(s, p, l)
    }
}

impl<T: LargeModel + ?Sized> LargeModel for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, s: &Sample, p: &PromptAugmentation, l: &[String]) -> Result<LargeModelResponse, BackendError> {
        (**self).predict(s, p, l)
    }
}

/// Wraps a backend and counts calls, failures, cost and the sample ids seen.
#[derive(Debug)]
pub struct CountingBackend<B> {
    inner: B,
    calls: AtomicUsize,
    failures: AtomicUsize,
    cost: Mutex<f64>,
    seen: Mutex<Vec<u64>>,
}

impl<B: LargeModel> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
            cost: Mutex::new(0.0),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::SeqCst)
    }

    pub fn cost_units(&self) -> f64 {
        *self.cost.lock().expect("cost lock")
    }

    /// Sample ids in call order (sorted, since calls may run concurrently).
    pub fn seen_ids(&self) -> Vec<u64> {
        let mut v = self.seen.lock().expect("seen lock").clone();
        v.sort_unstable();
        v
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: LargeModel> LargeModel for CountingBackend<B> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn predict(
        &self,
        sample: &Sample,
        prompt: &PromptAugmentation,
        labels: &[String],
    ) -> Result<LargeModelResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().expect("seen lock").push(sample.id);
        let out = self.inner.predict(sample, prompt, labels);
        match &out {
            Ok(r) => *self.cost.lock().expect("cost lock") += r.cost_units,
            Err(_) => {
                self.failures.fetch_add(1, Ordering::SeqCst);
            }
        }
        out
    }
}

/// Backend that always fails; stands in for an unreachable service.
#[derive(Debug, Clone)]
pub struct FailingBackend(pub BackendError);

impl LargeModel for FailingBackend {
    fn name(&self) -> &str {
        "failing"
    }

    fn predict(&self, _: &Sample, _: &PromptAugmentation, _: &[String]) -> Result<LargeModelResponse, BackendError> {
        Err(self.0.clone())
    }
}
