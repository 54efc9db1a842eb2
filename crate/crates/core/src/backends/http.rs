use std::time::{Duration, Instant};

use log::debug;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{BackendError, LargeModel, LargeModelResponse};
use crate::collab::PromptAugmentation;
use crate::data::Sample;

pub const WIRE_VERSION: u32 = 1;

/// Request body POSTed to the model service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub version: u32,
    pub sample_id: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub features: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub text: Option<String>,
    pub prompt: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub version: u32,
    pub distribution: Vec<f64>,
    pub model_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_retries: usize,
    /// First backoff delay; doubles per retry up to `max_backoff_ms`.
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub cost_per_call: f64,
    #[serde(skip)]
    pub bearer_token: Option<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            timeout_ms: 10_000,
            max_retries: 2,
            backoff_ms: 100,
            max_backoff_ms: 2_000,
            cost_per_call: 1.0,
            bearer_token: None,
        }
    }
}

impl HttpConfig {
    fn backoff(&self, retry: usize) -> Duration {
        let factor = 1u64.checked_shl(retry.min(30) as u32).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: Client,
}

enum Attempt {
    Done(Result<LargeModelResponse, BackendError>),
    Retry(BackendError),
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if !(config.endpoint.starts_with("http://") || config.endpoint.starts_with("https://")) {
            return Err(BackendError::Config(format!("endpoint `{}` is not an http(s) URL", config.endpoint)));
        }
        let client = Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn attempt(&self, body: &WireRequest, attempts: usize) -> Attempt {
        let start = Instant::now();
        let mut req = self.client.post(&self.config.endpoint).json(body);
        if let Some(token) = &self.config.bearer_token {
            req = req.bearer_auth(token);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => return Attempt::Retry(BackendError::Transport { message: e.to_string(), attempts }),
        };
        let status = resp.status();
        if !status.is_success() {
            let err = BackendError::Status { status: status.as_u16(), attempts };
            return if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
                Attempt::Retry(err)
            } else {
                Attempt::Done(Err(err))
            };
        }
        let bytes = match resp.bytes() {
            Ok(b) => b,
            Err(e) if e.is_timeout() => return Attempt::Retry(BackendError::Timeout { attempts }),
            Err(e) => return Attempt::Retry(BackendError::Transport { message: e.to_string(), attempts }),
        };
        let parsed: WireResponse = match serde_json::from_slice(&bytes) {
            Ok(p) => p,
            Err(e) => return Attempt::Done(Err(BackendError::Malformed(e.to_string()))),
        };
        if parsed.version != WIRE_VERSION {
            return Attempt::Done(Err(BackendError::Malformed(format!(
                "response version {} (expected {WIRE_VERSION})",
                parsed.version
            ))));
        }
        Attempt::Done(LargeModelResponse::new(
            parsed.distribution,
            body.labels.len(),
            start.elapsed(),
            self.config.cost_per_call,
            parsed.model_name,
        ))
    }

    /// Sends the request with bounded retries. Timeouts, transport errors,
    /// 5xx and 429 are retried; other statuses and malformed bodies are not.
    pub fn http_predict(
        &self,
        prompt: &PromptAugmentation,
        sample: &Sample,
        labels: &[String],
    ) -> Result<LargeModelResponse, BackendError> {
        let body = WireRequest {
            version: WIRE_VERSION,
            sample_id: sample.id,
            features: Some(sample.features.clone()),
            text: None,
            prompt: prompt.template_text.clone(),
            labels: labels.to_vec(),
        };
        let total = self.config.max_retries + 1;
        let mut last = BackendError::Timeout { attempts: 0 };
        for attempt in 1..=total {
            match self.attempt(&body, attempt) {
                Attempt::Done(r) => return r,
                Attempt::Retry(e) => {
                    if attempt < total {
                        debug!("sample {}: attempt {attempt}/{total} failed ({e}); retrying", sample.id);
                        std::thread::sleep(self.config.backoff(attempt - 1));
                    }
                    last = e;
                }
            }
        }
        Err(last)
    }
}

impl LargeModel for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn predict(
        &self,
        sample: &Sample,
        prompt: &PromptAugmentation,
        labels: &[String],
    ) -> Result<LargeModelResponse, BackendError> {
        self.http_predict(prompt, sample, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let c = HttpConfig { backoff_ms: 100, max_backoff_ms: 350, ..Default::default() };
        assert_eq!(c.backoff(0), Duration::from_millis(100));
        assert_eq!(c.backoff(1), Duration::from_millis(200));
        assert_eq!(c.backoff(2), Duration::from_millis(350));
        assert_eq!(c.backoff(60), Duration::from_millis(350));
    }

    #[test]
    fn request_wire_shape() {
        let r = WireRequest {
            version: 1,
            sample_id: 9,
            features: Some(vec![0.5]),
            text: None,
            prompt: "p".into(),
            labels: vec!["a".into()],
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["sample_id"], 9);
        assert!(v.get("text").is_none());
        assert_eq!(v["labels"][0], "a");
    }

    #[test]
    fn rejects_non_http_endpoint() {
        assert!(HttpBackend::new(HttpConfig { endpoint: "ftp://x".into(), ..Default::default() }).is_err());
    }
}
