//! Kolmogorov-Arnold network primitives.
//!
//! Every edge of a [`KanLayer`] carries its own activation
//! `base_scale * silu(x) + spline_scale * sum_i c_i B_i(x)`; nodes only sum
//! their incoming edges. [`MlpNetwork`] is the node-activation baseline with
//! the same training interface.

mod any;
mod basis;
mod edge;
pub mod io;
mod layer;
mod mlp;
mod network;

pub use any::{AnyNetwork, AnyTrace, ModelKind};
pub use basis::{SparseBasis, SplineBasis};
pub use edge::{edge_forward, KanEdge};
pub use layer::KanLayer;
pub use mlp::{match_capacity, match_capacity_dims, MlpLayer, MlpNetwork, MlpTrace};
pub use network::{KanConfig, KanNetwork, KanTrace, ScaleInit};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KanError {
    #[error("invalid spline basis: {0}")]
    InvalidBasis(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backward called without a matching cached forward pass")]
    MissingForwardCache,
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("no MLP width within ±10% of {target} parameters")]
    CapacityMismatch { target: usize },
    #[error("model file: {0}")]
    Format(String),
}

/// Residual base activation applied on every edge.
#[inline]
pub fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

#[inline]
pub fn silu_deriv(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

/// A network trainable by first-order methods over a flat parameter vector.
///
/// The flat order of [`params`](Differentiable::params) is the order in
/// which [`backward_into`](Differentiable::backward_into) accumulates.
pub trait Differentiable: Clone + Send + Sync {
    type Trace: Send;

    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn num_params(&self) -> usize;

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>, KanError>;

    /// Forward pass keeping what the backward pass needs.
    fn forward_trace(&self, x: &[f64]) -> Result<Self::Trace, KanError>;

    fn trace_output<'a>(&self, trace: &'a Self::Trace) -> &'a [f64];

    /// Adds d(upstream . output)/d(params) into `grad`.
    fn backward_into(
        &self,
        trace: &Self::Trace,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<(), KanError>;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, params: &[f64]) -> Result<(), KanError>;

    /// `p -= step * g` for every parameter.
    fn descend(&mut self, grad: &[f64], step: f64);

    fn backward(&self, trace: &Self::Trace, upstream: &[f64]) -> Result<Vec<f64>, KanError> {
        let mut g = vec![0.0; self.num_params()];
        self.backward_into(trace, upstream, &mut g)?;
        Ok(g)
    }

    fn forward_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, KanError> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    fn params_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }
}
