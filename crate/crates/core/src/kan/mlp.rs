use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::{Differentiable, KanError, KanNetwork};

/// Dense layer; `weights` is `out_dim x in_dim`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Multilayer perceptron with `tanh` on every hidden node and a linear
/// output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layers: Vec<MlpLayer>,
}

#[derive(Debug, Clone, Default)]
pub struct MlpTrace {
    /// Input to each layer (post-activation of the previous one).
    inputs: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl MlpNetwork {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, KanError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(KanError::InvalidArchitecture(format!("bad MLP dims {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                let u = Uniform::new(-limit, limit).expect("finite limit");
                MlpLayer {
                    in_dim: w[0],
                    out_dim: w[1],
                    weights: (0..w[0] * w[1]).map(|_| u.sample(rng)).collect(),
                    bias: vec![0.0; w[1]],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<MlpLayer>) -> Result<Self, KanError> {
        if layers.is_empty() {
            return Err(KanError::InvalidArchitecture("network needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.in_dim * l.out_dim || l.bias.len() != l.out_dim {
                return Err(KanError::InvalidArchitecture("weight shape mismatch".into()));
            }
        }
        for w in layers.windows(2) {
            if w[0].out_dim != w[1].in_dim {
                return Err(KanError::DimensionMismatch { expected: w[0].out_dim, got: w[1].in_dim });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[MlpLayer] {
        &self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].in_dim];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    /// Parameter count of an MLP with the given widths.
    pub fn count_params(dims: &[usize]) -> usize {
        dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn affine(layer: &MlpLayer, x: &[f64]) -> Vec<f64> {
        layer
            .weights
            .chunks(layer.in_dim)
            .zip(&layer.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

impl Differentiable for MlpNetwork {
    type Trace = MlpTrace;

    fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    fn num_params(&self) -> usize {
        Self::count_params(&self.dims())
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>, KanError> {
        Ok(self.forward_trace(x)?.output)
    }

    fn forward_trace(&self, x: &[f64]) -> Result<MlpTrace, KanError> {
        if x.len() != self.input_dim() {
            return Err(KanError::DimensionMismatch { expected: self.input_dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KanError::NonFinite("network input"));
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let mut z = Self::affine(layer, &h);
            if idx != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        Ok(MlpTrace { inputs, output: h })
    }

    fn trace_output<'a>(&self, trace: &'a MlpTrace) -> &'a [f64] {
        &trace.output
    }

    fn backward_into(
        &self,
        trace: &MlpTrace,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<(), KanError> {
        let consistent = trace.inputs.len() == self.layers.len()
            && trace.output.len() == self.output_dim()
            && self.layers.iter().zip(&trace.inputs).all(|(l, x)| l.in_dim == x.len());
        if !consistent {
            return Err(KanError::MissingForwardCache);
        }
        if upstream.len() != self.output_dim() || grad.len() != self.num_params() {
            return Err(KanError::DimensionMismatch {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut acc = 0;
        for l in &self.layers {
            offsets.push(acc);
            acc += l.weights.len() + l.bias.len();
        }
        // delta is dL/dz for the current layer's pre-activation
        let mut delta = upstream.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let x = &trace.inputs[idx];
            let slot = &mut grad[offsets[idx]..offsets[idx] + layer.weights.len() + layer.bias.len()];
            let (gw, gb) = slot.split_at_mut(layer.weights.len());
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                for (gwi, xi) in gw[o * layer.in_dim..(o + 1) * layer.in_dim].iter_mut().zip(x) {
                    *gwi += d * xi;
                }
            }
            if idx > 0 {
                // x is tanh of the previous pre-activation
                delta = (0..layer.in_dim)
                    .map(|i| {
                        let s: f64 = delta
                            .iter()
                            .enumerate()
                            .map(|(o, d)| d * layer.weights[o * layer.in_dim + i])
                            .sum();
                        s * (1.0 - x[i] * x[i])
                    })
                    .collect();
            }
        }
        Ok(())
    }

    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
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
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    fn descend(&mut self, grad: &[f64], step: f64) {
        let mut it = grad.iter();
        for l in &mut self.layers {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *p -= step * it.next().unwrap();
            }
        }
    }
}

/// Hidden widths for an MLP whose parameter count lands within ±10% of the
/// given KAN's. Keeps the KAN's depth (at least one hidden layer) and one
/// uniform hidden width; adds hidden layers only if no width fits.
pub fn match_capacity_dims(kan_dims: &[usize], kan_params: usize) -> Result<Vec<usize>, KanError> {
    let input = kan_dims[0];
    let output = kan_dims[kan_dims.len() - 1];
    let lo = kan_params as f64 * 0.9;
    let hi = kan_params as f64 * 1.1;
    let base_hidden = kan_dims.len().saturating_sub(2).max(1);
    for hidden_layers in base_hidden..base_hidden + 3 {
        let dims_for = |w: usize| {
            let mut d = vec![input];
            d.extend(std::iter::repeat_n(w, hidden_layers));
            d.push(output);
            d
        };
        let mut best: Option<(usize, Vec<usize>)> = None;
        let mut w = 1;
        loop {
            let dims = dims_for(w);
            let p = MlpNetwork::count_params(&dims);
            let gap = p.abs_diff(kan_params);
            if best.as_ref().is_none_or(|(g, _)| gap < *g) {
                best = Some((gap, dims));
            }
            if p > kan_params {
                break;
            }
            w += 1;
        }
        let (_, dims) = best.expect("at least one width tried");
        let p = MlpNetwork::count_params(&dims) as f64;
        if p >= lo && p <= hi {
            return Ok(dims);
        }
    }
    Err(KanError::CapacityMismatch { target: kan_params })
}

/// Fresh MLP of matched capacity for the KCM-vs-MCM comparison.
pub fn match_capacity<R: Rng + ?Sized>(kan: &KanNetwork, rng: &mut R) -> Result<MlpNetwork, KanError> {
    let dims = match_capacity_dims(&kan.dims(), kan.num_params())?;
    MlpNetwork::new(&dims, rng)
}

#[cfg(test)]
mod tests {
    use super::super::KanConfig;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Counts parameters by walking the constructed network.
    fn count_kan(net: &KanNetwork) -> usize {
        net.layers()
            .iter()
            .flat_map(|l| l.edges())
            .map(|e| e.coefficients.len() + 2)
            .sum()
    }

    #[test]
    fn kan_2_5_3_has_250_params_and_matched_mlp_in_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kan = KanNetwork::new(&KanConfig::with_dims(vec![2, 5, 3]), &mut rng).unwrap();
        assert_eq!(count_kan(&kan), 250);
        assert_eq!(kan.num_params(), 250);
        let mlp = match_capacity(&kan, &mut rng).unwrap();
        let p = mlp.num_params();
        assert!((225..=275).contains(&p), "{p}");
        assert_eq!(mlp.params().len(), p);
    }

    #[test]
    fn degenerate_one_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kan = KanNetwork::new(&KanConfig::with_dims(vec![1, 1]), &mut rng).unwrap();
        assert_eq!(kan.num_params(), 10);
        let dims = match_capacity_dims(&kan.dims(), 10).unwrap();
        assert_eq!(dims, vec![1, 3, 1]);
    }

    #[test]
    fn band_holds_for_many_architectures() {
        for dims in [vec![16, 16, 16, 10], vec![4, 8, 2], vec![1, 1, 1], vec![32, 10], vec![3, 7]] {
            let p = KanConfig::with_dims(dims.clone()).param_count();
            let m = match_capacity_dims(&dims, p).unwrap();
            let q = MlpNetwork::count_params(&m) as f64;
            assert!(q >= 0.9 * p as f64 && q <= 1.1 * p as f64, "{dims:?}: {p} vs {q}");
        }
    }

    #[test]
    fn forward_and_trace_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mlp = MlpNetwork::new(&[3, 5, 2], &mut rng).unwrap();
        let x = [0.3, -0.1, 0.8];
        let t = mlp.forward_trace(&x).unwrap();
        assert_eq!(mlp.trace_output(&t), mlp.forward(&x).unwrap().as_slice());
    }
}
