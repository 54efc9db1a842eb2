//! Uniform B-spline bases on a closed interval.
//!
//! The knot vector is the uniform grid over `[lo, hi]` extended by `k`
//! knots of the same spacing on each side, giving `G + 2k + 1` strictly
//! increasing knots and `G + k` basis functions of degree `k`. On
//! `[lo, hi]` exactly `k + 1` of those functions are nonzero at any point
//! and they sum to one.

use serde::{Deserialize, Serialize};

use super::KanError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineBasis {
    order: usize,
    num_intervals: usize,
    lo: f64,
    hi: f64,
    knots: Vec<f64>,
}

/// Nonzero basis values at a point: `values[r]` belongs to basis function
/// `first + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBasis {
    pub first: usize,
    pub values: Vec<f64>,
    /// d B / d x at the clamped point; zero when the input was clamped.
    pub derivs: Vec<f64>,
    pub clamped: bool,
}

impl SplineBasis {
    pub fn new(order: usize, num_intervals: usize, lo: f64, hi: f64) -> Result<Self, KanError> {
        if order == 0 {
            return Err(KanError::InvalidBasis("spline order must be at least 1".into()));
        }
        if num_intervals == 0 {
            return Err(KanError::InvalidBasis("grid needs at least one interval".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(KanError::InvalidBasis(format!("invalid range [{lo}, {hi}]")));
        }
        let h = (hi - lo) / num_intervals as f64;
        let knots = (0..num_intervals + 2 * order + 1)
            .map(|i| {
                let offset = i as isize - order as isize;
                // pin the interior endpoints exactly
                if offset == 0 {
                    lo
                } else if offset == num_intervals as isize {
                    hi
                } else {
                    lo + offset as f64 * h
                }
            })
            .collect();
        Ok(Self { order, num_intervals, lo, hi, knots })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_intervals(&self) -> usize {
        self.num_intervals
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions, `G + k`.
    pub fn size(&self) -> usize {
        self.num_intervals + self.order
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Index `s` of the knot span `[t_s, t_{s+1})` containing `x`, with
    /// the right endpoint folded into the last interior span.
    fn span(&self, x: f64) -> usize {
        let k = self.order;
        let mut s = k + (((x - self.lo) / (self.hi - self.lo)) * self.num_intervals as f64).floor()
            as usize;
        s = s.min(k + self.num_intervals - 1);
        // floating point can put x just across a knot
        while s > k && x < self.knots[s] {
            s -= 1;
        }
        while s < k + self.num_intervals - 1 && x >= self.knots[s + 1] {
            s += 1;
        }
        s
    }

    /// Dense basis vector of length `G + k` at `x` (clamped to the range).
    pub fn eval(&self, x: f64) -> Result<Vec<f64>, KanError> {
        let sparse = self.eval_sparse(x)?;
        let mut out = vec![0.0; self.size()];
        out[sparse.first..sparse.first + sparse.values.len()].copy_from_slice(&sparse.values);
        Ok(out)
    }

    /// The `k + 1` possibly-nonzero basis values at `x` and their
    /// derivatives, computed with the triangular de Boor scheme.
    pub fn eval_sparse(&self, x: f64) -> Result<SparseBasis, KanError> {
        if !x.is_finite() {
            return Err(KanError::NonFinite("basis input"));
        }
        let clamped = x < self.lo || x > self.hi;
        let x = self.clamp(x);
        let k = self.order;
        let t = &self.knots;
        let s = self.span(x);

        // lower holds degree k-1 values for the derivative
        let mut n = vec![0.0; k + 1];
        let mut lower = vec![0.0; k];
        let mut left = vec![0.0; k + 1];
        let mut right = vec![0.0; k + 1];
        n[0] = 1.0;
        for j in 1..=k {
            if j == k {
                lower.copy_from_slice(&n[..k]);
            }
            left[j] = x - t[s + 1 - j];
            right[j] = t[s + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }

        // B'_{i,k} = k/(t_{i+k}-t_i) B_{i,k-1} - k/(t_{i+k+1}-t_{i+1}) B_{i+1,k-1}
        // lower[r] is B_{s-k+1+r, k-1}, r = 0..k
        let first = s - k;
        let mut derivs = vec![0.0; k + 1];
        if !clamped {
            let kf = k as f64;
            for (r, d) in derivs.iter_mut().enumerate() {
                let i = first + r;
                let a = if r >= 1 { lower[r - 1] } else { 0.0 };
                let b = if r < k { lower[r] } else { 0.0 };
                *d = kf * a / (t[i + k] - t[i]) - kf * b / (t[i + k + 1] - t[i + 1]);
            }
        }
        Ok(SparseBasis { first, values: n, derivs, clamped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook Cox-de Boor recursion, one basis function at a time.
    fn naive(t: &[f64], i: usize, k: usize, x: f64) -> f64 {
        if k == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let d1 = t[i + k] - t[i];
        if d1 > 0.0 {
            v += (x - t[i]) / d1 * naive(t, i, k - 1, x);
        }
        let d2 = t[i + k + 1] - t[i + 1];
        if d2 > 0.0 {
            v += (t[i + k + 1] - x) / d2 * naive(t, i + 1, k - 1, x);
        }
        v
    }

    #[test]
    fn knot_count_and_monotone() {
        let b = SplineBasis::new(3, 5, -1.0, 1.0).unwrap();
        assert_eq!(b.knots().len(), 5 + 2 * 3 + 1);
        assert!(b.knots().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.knots()[3], -1.0);
        assert_eq!(b.knots()[8], 1.0);
        assert_eq!(b.size(), 8);
    }

    #[test]
    fn linear_single_interval_sums_to_one() {
        let b = SplineBasis::new(1, 1, 0.0, 1.0).unwrap();
        let v = b.eval(0.0).unwrap();
        assert_eq!(v.len(), 2);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_naive_cox_de_boor() {
        let b = SplineBasis::new(3, 5, -1.0, 1.0).unwrap();
        let x = 0.37;
        let v = b.eval(x).unwrap();
        for (i, vi) in v.iter().enumerate() {
            let expect = naive(b.knots(), i, 3, x);
            assert!((vi - expect).abs() < 1e-14, "i={i}: {vi} vs {expect}");
        }
    }

    #[test]
    fn right_endpoint_is_finite() {
        for (k, g) in [(1, 1), (2, 3), (3, 5), (4, 7)] {
            let b = SplineBasis::new(k, g, -1.0, 1.0).unwrap();
            let v = b.eval(1.0).unwrap();
            assert!(v.iter().all(|x| x.is_finite() && *x >= 0.0));
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let b = SplineBasis::new(3, 5, -1.0, 1.0).unwrap();
        assert!(b.eval(f64::NAN).is_err());
        assert!(b.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn out_of_range_is_clamped() {
        let b = SplineBasis::new(3, 5, -1.0, 1.0).unwrap();
        assert_eq!(b.eval(7.0).unwrap(), b.eval(1.0).unwrap());
        assert_eq!(b.eval(-3.0).unwrap(), b.eval(-1.0).unwrap());
        assert!(b.eval_sparse(7.0).unwrap().derivs.iter().all(|d| *d == 0.0));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = SplineBasis::new(3, 5, -1.0, 1.0).unwrap();
        let h = 1e-6;
        for &x in &[-0.83, -0.2, 0.05, 0.37, 0.91] {
            let s = b.eval_sparse(x).unwrap();
            let up = b.eval(x + h).unwrap();
            let dn = b.eval(x - h).unwrap();
            for r in 0..s.values.len() {
                let i = s.first + r;
                let fd = (up[i] - dn[i]) / (2.0 * h);
                assert!((fd - s.derivs[r]).abs() < 1e-6, "x={x} i={i}");
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(k in 1usize..5, g in 1usize..12, x in -1.5f64..1.5) {
            let b = SplineBasis::new(k, g, -1.0, 1.0).unwrap();
            let v = b.eval(x).unwrap();
            prop_assert!(v.iter().all(|&e| e >= 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn local_support(k in 1usize..5, g in 1usize..12, x in -0.999f64..0.999) {
            let b = SplineBasis::new(k, g, -1.0, 1.0).unwrap();
            let nonzero = b.eval(x).unwrap().iter().filter(|&&e| e != 0.0).count();
            prop_assert!(nonzero <= k + 1);
        }
    }
}
