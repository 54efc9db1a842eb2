use serde::{Deserialize, Serialize};

use super::{silu, silu_deriv, KanEdge, KanError, SplineBasis};

/// `in_dim x out_dim` grid of edges sharing one basis. Edge `(i, j)` maps
/// input `i` into output node `j` and lives at `edges[i * out_dim + j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanLayer {
    in_dim: usize,
    out_dim: usize,
    basis: SplineBasis,
    edges: Vec<KanEdge>,
}

impl KanLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        basis: SplineBasis,
        edges: Vec<KanEdge>,
    ) -> Result<Self, KanError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(KanError::InvalidArchitecture("layer dims must be positive".into()));
        }
        if edges.len() != in_dim * out_dim {
            return Err(KanError::DimensionMismatch { expected: in_dim * out_dim, got: edges.len() });
        }
        if let Some(e) = edges.iter().find(|e| e.coefficients.len() != basis.size()) {
            return Err(KanError::DimensionMismatch {
                expected: basis.size(),
                got: e.coefficients.len(),
            });
        }
        Ok(Self { in_dim, out_dim, basis, edges })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn basis(&self) -> &SplineBasis {
        &self.basis
    }

    pub fn edges(&self) -> &[KanEdge] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [KanEdge] {
        &mut self.edges
    }

    pub fn edge(&self, i: usize, j: usize) -> &KanEdge {
        &self.edges[i * self.out_dim + j]
    }

    pub fn edge_mut(&mut self, i: usize, j: usize) -> &mut KanEdge {
        &mut self.edges[i * self.out_dim + j]
    }

    pub fn num_params(&self) -> usize {
        self.edges.len() * (self.basis.size() + 2)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, KanError> {
        if x.len() != self.in_dim {
            return Err(KanError::DimensionMismatch { expected: self.in_dim, got: x.len() });
        }
        let mut out = vec![0.0; self.out_dim];
        for (i, &xi) in x.iter().enumerate() {
            let b = self.basis.eval_sparse(xi)?;
            let base = silu(xi);
            let row = &self.edges[i * self.out_dim..(i + 1) * self.out_dim];
            for (o, e) in out.iter_mut().zip(row) {
                let spline: f64 =
                    b.values.iter().zip(&e.coefficients[b.first..]).map(|(v, c)| v * c).sum();
                *o += e.base_scale * base + e.spline_scale * spline;
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` (this layer's slice of the
    /// flat vector) and returns the gradient with respect to the input.
    pub(crate) fn backward_into(
        &self,
        x: &[f64],
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>, KanError> {
        let stride = self.basis.size() + 2;
        let mut dx = vec![0.0; self.in_dim];
        for (i, &xi) in x.iter().enumerate() {
            let b = self.basis.eval_sparse(xi)?;
            let base = silu(xi);
            let dbase = silu_deriv(xi);
            for (j, &g) in upstream.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let idx = i * self.out_dim + j;
                let e = &self.edges[idx];
                let slot = &mut grad[idx * stride..(idx + 1) * stride];
                let mut spline = 0.0;
                let mut dspline = 0.0;
                for (r, (&v, &d)) in b.values.iter().zip(&b.derivs).enumerate() {
                    let c = e.coefficients[b.first + r];
                    slot[b.first + r] += g * e.spline_scale * v;
                    spline += c * v;
                    dspline += c * d;
                }
                slot[stride - 2] += g * base;
                slot[stride - 1] += g * spline;
                dx[i] += g * (e.base_scale * dbase + e.spline_scale * dspline);
            }
        }
        Ok(dx)
    }
}
