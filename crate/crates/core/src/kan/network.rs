use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Differentiable, KanEdge, KanError, KanLayer, SplineBasis};

/// Architecture and initialization of a [`KanNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanConfig {
    /// Layer widths including input and output, e.g. `[2, 5, 3]`.
    pub dims: Vec<usize>,
    pub order: usize,
    pub num_intervals: usize,
    pub lo: f64,
    pub hi: f64,
    /// Standard deviation of the initial spline coefficients.
    pub coef_std: f64,
    pub base_scale: f64,
    pub spline_scale: f64,
    pub scale_init: ScaleInit,
}

/// How `base_scale` and `spline_scale` seed each edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleInit {
    /// Every edge gets exactly the configured scales.
    Constant,
    /// Base scale drawn from `base_scale * U(-1, 1) / sqrt(fan_in)`, spline
    /// scale `spline_scale / sqrt(fan_in)`. Keeps sums over wide layers
    /// inside the grid and breaks the symmetry between edges.
    #[default]
    FanIn,
}

impl Default for KanConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 5, 3],
            order: 3,
            num_intervals: 5,
            lo: -1.0,
            hi: 1.0,
            coef_std: 0.1,
            base_scale: 1.0,
            spline_scale: 1.0,
            scale_init: ScaleInit::FanIn,
        }
    }
}

impl KanConfig {
    pub fn with_dims(dims: Vec<usize>) -> Self {
        Self { dims, ..Self::default() }
    }

    /// `sum_l d_l * d_{l+1} * (G + k + 2)`.
    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1]).sum::<usize>()
            * (self.num_intervals + self.order + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
}

/// Per-layer inputs of one forward pass plus the final output.
#[derive(Debug, Clone, Default)]
pub struct KanTrace {
    inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl KanTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl KanNetwork {
    pub fn from_layers(layers: Vec<KanLayer>) -> Result<Self, KanError> {
        if layers.is_empty() {
            return Err(KanError::InvalidArchitecture("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(KanError::DimensionMismatch {
                    expected: w[0].out_dim(),
                    got: w[1].in_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn new<R: Rng + ?Sized>(config: &KanConfig, rng: &mut R) -> Result<Self, KanError> {
        if config.dims.len() < 2 {
            return Err(KanError::InvalidArchitecture("dims needs input and output widths".into()));
        }
        let basis = SplineBasis::new(config.order, config.num_intervals, config.lo, config.hi)?;
        let normal = Normal::new(0.0, config.coef_std)
            .map_err(|e| KanError::InvalidArchitecture(e.to_string()))?;
        let layers = config
            .dims
            .windows(2)
            .map(|w| {
                let root = (w[0] as f64).sqrt();
                let edges = (0..w[0] * w[1])
                    .map(|_| {
                        let coefficients = (0..basis.size()).map(|_| normal.sample(rng)).collect();
                        let (base_scale, spline_scale) = match config.scale_init {
                            ScaleInit::Constant => (config.base_scale, config.spline_scale),
                            ScaleInit::FanIn => (
                                config.base_scale * rng.random_range(-1.0..=1.0) / root,
                                config.spline_scale / root,
                            ),
                        };
                        KanEdge { coefficients, base_scale, spline_scale }
                    })
                    .collect();
                KanLayer::new(w[0], w[1], basis.clone(), edges)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim()));
        d
    }

    /// Architecture echo, used by capacity matching and serialization.
    pub fn config(&self) -> KanConfig {
        let b = self.layers[0].basis();
        let (lo, hi) = b.range();
        KanConfig {
            dims: self.dims(),
            order: b.order(),
            num_intervals: b.num_intervals(),
            lo,
            hi,
            ..KanConfig::default()
        }
    }
}

impl Differentiable for KanNetwork {
    type Trace = KanTrace;

    fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.num_params()).sum()
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>, KanError> {
        let mut h = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    fn forward_trace(&self, x: &[f64]) -> Result<KanTrace, KanError> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for layer in &self.layers {
            let next = layer.forward(&h)?;
            inputs.push(std::mem::replace(&mut h, next));
        }
        Ok(KanTrace { inputs, output: h })
    }

    fn trace_output<'a>(&self, trace: &'a KanTrace) -> &'a [f64] {
        &trace.output
    }

    fn backward_into(
        &self,
        trace: &KanTrace,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<(), KanError> {
        let consistent = trace.inputs.len() == self.layers.len()
            && trace.output.len() == self.output_dim()
            && self.layers.iter().zip(&trace.inputs).all(|(l, x)| l.in_dim() == x.len());
        if !consistent {
            return Err(KanError::MissingForwardCache);
        }
        if upstream.len() != self.output_dim() {
            return Err(KanError::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if grad.len() != self.num_params() {
            return Err(KanError::DimensionMismatch { expected: self.num_params(), got: grad.len() });
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offsets.push(acc);
            acc += l.num_params();
        }
        let mut g = upstream.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let slot = &mut grad[offsets[idx]..offsets[idx] + layer.num_params()];
            g = layer.backward_into(&trace.inputs[idx], &g, slot)?;
        }
        Ok(())
    }

    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for e in self.layers.iter().flat_map(|l| l.edges()) {
            p.extend_from_slice(&e.coefficients);
            p.push(e.base_scale);
            p.push(e.spline_scale);
        }
        p
    }

    fn set_params(&mut self, params: &[f64]) -> Result<(), KanError> {
        if params.len() != self.num_params() {
            return Err(KanError::DimensionMismatch {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        let mut it = params.iter();
        for e in self.layers.iter_mut().flat_map(|l| l.edges_mut()) {
            for c in e.coefficients.iter_mut() {
                *c = *it.next().unwrap();
            }
            e.base_scale = *it.next().unwrap();
            e.spline_scale = *it.next().unwrap();
        }
        Ok(())
    }

    fn descend(&mut self, grad: &[f64], step: f64) {
        let mut it = grad.iter();
        for e in self.layers.iter_mut().flat_map(|l| l.edges_mut()) {
            for c in e.coefficients.iter_mut() {
                *c -= step * it.next().unwrap();
            }
            e.base_scale -= step * it.next().unwrap();
            e.spline_scale -= step * it.next().unwrap();
        }
    }
}
