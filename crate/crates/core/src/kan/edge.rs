use serde::{Deserialize, Serialize};

use super::{silu, KanError, SplineBasis};

/// Learnable univariate activation on one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KanEdge {
    pub coefficients: Vec<f64>,
    pub base_scale: f64,
    pub spline_scale: f64,
}

impl KanEdge {
    pub fn zeros(basis_size: usize) -> Self {
        Self { coefficients: vec![0.0; basis_size], base_scale: 0.0, spline_scale: 0.0 }
    }

    pub fn num_params(&self) -> usize {
        self.coefficients.len() + 2
    }

    pub fn is_finite(&self) -> bool {
        self.base_scale.is_finite()
            && self.spline_scale.is_finite()
            && self.coefficients.iter().all(|c| c.is_finite())
    }
}

/// `base_scale * silu(x) + spline_scale * sum_i c_i B_i(clamp(x))`.
pub fn edge_forward(edge: &KanEdge, basis: &SplineBasis, x: f64) -> Result<f64, KanError> {
    if edge.coefficients.len() != basis.size() {
        return Err(KanError::DimensionMismatch {
            expected: basis.size(),
            got: edge.coefficients.len(),
        });
    }
    let b = basis.eval_sparse(x)?;
    let spline: f64 = b
        .values
        .iter()
        .zip(&edge.coefficients[b.first..])
        .map(|(v, c)| v * c)
        .sum();
    Ok(edge.base_scale * silu(x) + edge.spline_scale * spline)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis() -> SplineBasis {
        SplineBasis::new(3, 5, -1.0, 1.0).unwrap()
    }

    #[test]
    fn zero_edge_is_zero() {
        let e = KanEdge::zeros(8);
        for x in [-2.0, -0.5, 0.0, 0.3, 1.0, 4.0] {
            assert_eq!(edge_forward(&e, &basis(), x).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_coefficients_give_one_in_range() {
        let e = KanEdge { coefficients: vec![1.0; 8], base_scale: 0.0, spline_scale: 1.0 };
        for x in [-1.0, -0.7, 0.0, 0.42, 1.0] {
            assert!((edge_forward(&e, &basis(), x).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = basis();
        let e = KanEdge {
            coefficients: (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
            base_scale: rng.random_range(-1.0..1.0),
            spline_scale: rng.random_range(-1.0..1.0),
        };
        let x = 0.5;
        let dense = b.eval(x).unwrap();
        let expect = e.base_scale * (x / (1.0 + (-x).exp()))
            + e.spline_scale * dense.iter().zip(&e.coefficients).map(|(v, c)| v * c).sum::<f64>();
        assert!((edge_forward(&e, &b, x).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn wrong_coefficient_length() {
        let e = KanEdge::zeros(7);
        assert!(matches!(
            edge_forward(&e, &basis(), 0.0),
            Err(KanError::DimensionMismatch { expected: 8, got: 7 })
        ));
    }
}
