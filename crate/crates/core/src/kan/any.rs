use serde::{Deserialize, Serialize};

use super::{Differentiable, KanError, KanNetwork, KanTrace, MlpNetwork, MlpTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Kan,
    Mlp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Kan => write!(f, "kan"),
            ModelKind::Mlp => write!(f, "mlp"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kan" => Ok(ModelKind::Kan),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(format!("unknown model kind `{other}`")),
        }
    }
}

/// Either network family behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyNetwork {
    Kan(KanNetwork),
    Mlp(MlpNetwork),
}

#[derive(Debug, Clone)]
pub enum AnyTrace {
    Kan(KanTrace),
    Mlp(MlpTrace),
}

impl AnyNetwork {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyNetwork::Kan(_) => ModelKind::Kan,
            AnyNetwork::Mlp(_) => ModelKind::Mlp,
        }
    }
}

macro_rules! dispatch {
    ($self:expr, $n:ident => $e:expr) => {
        match $self {
            AnyNetwork::Kan($n) => $e,
            AnyNetwork::Mlp($n) => $e,
        }
    };
}

impl Differentiable for AnyNetwork {
    type Trace = AnyTrace;

    fn input_dim(&self) -> usize {
        dispatch!(self, n => n.input_dim())
    }

    fn output_dim(&self) -> usize {
        dispatch!(self, n => n.output_dim())
    }

    fn num_params(&self) -> usize {
        dispatch!(self, n => n.num_params())
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>, KanError> {
        dispatch!(self, n => n.forward(x))
    }

    fn forward_trace(&self, x: &[f64]) -> Result<AnyTrace, KanError> {
        match self {
            AnyNetwork::Kan(n) => n.forward_trace(x).map(AnyTrace::Kan),
            AnyNetwork::Mlp(n) => n.forward_trace(x).map(AnyTrace::Mlp),
        }
    }

    fn trace_output<'a>(&self, trace: &'a AnyTrace) -> &'a [f64] {
        match trace {
            AnyTrace::Kan(t) => t.output(),
            AnyTrace::Mlp(t) => t.output(),
        }
    }

    fn backward_into(&self, trace: &AnyTrace, upstream: &[f64], grad: &mut [f64]) -> Result<(), KanError> {
        match (self, trace) {
            (AnyNetwork::Kan(n), AnyTrace::Kan(t)) => n.backward_into(t, upstream, grad),
            (AnyNetwork::Mlp(n), AnyTrace::Mlp(t)) => n.backward_into(t, upstream, grad),
            _ => Err(KanError::MissingForwardCache),
        }
    }

    fn params(&self) -> Vec<f64> {
        dispatch!(self, n => n.params())
    }

    fn set_params(&mut self, params: &[f64]) -> Result<(), KanError> {
        dispatch!(self, n => n.set_params(params))
    }

    fn descend(&mut self, grad: &[f64], step: f64) {
        dispatch!(self, n => n.descend(grad, step))
    }
}
