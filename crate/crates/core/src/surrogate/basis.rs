//! Orthonormal Legendre polynomials on a box.
//!
//! Inputs are mapped affinely onto `[-1, 1]` per dimension, and the
//! univariate polynomials are scaled by `√(2k+1)` so that they are
//! orthonormal under the uniform probability measure on the box.

use serde::{Deserialize, Serialize};

use crate::domain::DesignSpace;
use crate::error::{Error, Result};

/// Exponent vector of one multivariate basis function.
pub type MultiIndex = Vec<u32>;

/// `φ_0(u) … φ_max(u)` with `φ_k = √(2k+1)·P_k(u)`.
pub fn legendre_orthonormal(u: f64, max_degree: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(1.0);
    if max_degree >= 1 {
        p.push(u);
    }
    for k in 1..max_degree {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * u * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    for (k, v) in p.iter_mut().enumerate() {
        *v *= (2.0 * k as f64 + 1.0).sqrt();
    }
    p
}

/// All multi-indices in `dim` variables with total degree `<= max_degree`,
/// graded by total degree.
pub fn total_degree_indices(dim: usize, max_degree: u32) -> Vec<MultiIndex> {
    fn fill(dim: usize, remaining: u32, prefix: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if prefix.len() == dim - 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=remaining).rev() {
            prefix.push(first);
            fill(dim, remaining - first, prefix, out);
            prefix.pop();
        }
    }

    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    for degree in 0..=max_degree {
        fill(dim, degree, &mut Vec::with_capacity(dim), &mut out);
    }
    out
}

pub fn total_degree(index: &[u32]) -> u32 {
    index.iter().sum()
}

/// A list of multivariate Legendre polynomials over a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialBasis {
    space: DesignSpace,
    indices: Vec<MultiIndex>,
}

impl PolynomialBasis {
    pub fn new(space: DesignSpace, indices: Vec<MultiIndex>) -> Result<Self> {
        for a in &indices {
            if a.len() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    got: a.len(),
                });
            }
        }
        Ok(Self { space, indices })
    }

    pub fn constant(space: DesignSpace) -> Self {
        let dim = space.dim();
        Self {
            space,
            indices: vec![vec![0; dim]],
        }
    }

    pub fn total_degree(space: DesignSpace, max_degree: u32) -> Self {
        let indices = total_degree_indices(space.dim(), max_degree);
        Self { space, indices }
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn max_degree(&self) -> u32 {
        self.indices.iter().map(|a| total_degree(a)).max().unwrap_or(0)
    }

    pub fn subset(&self, keep: &[usize]) -> Self {
        Self {
            space: self.space.clone(),
            indices: keep.iter().map(|&k| self.indices[k].clone()).collect(),
        }
    }

    /// `x` mapped into `[-1, 1]^d`.
    pub fn reduced(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.space.lower().iter().zip(self.space.upper()))
            .map(|(v, (lo, hi))| 2.0 * (v - lo) / (hi - lo) - 1.0)
            .collect()
    }

    /// Values of every basis function at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let u = self.reduced(x);
        let max_deg = self
            .indices
            .iter()
            .flat_map(|a| a.iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let tables: Vec<Vec<f64>> = u.iter().map(|&ui| legendre_orthonormal(ui, max_deg)).collect();
        self.indices
            .iter()
            .map(|a| {
                a.iter()
                    .zip(&tables)
                    .map(|(&k, t)| t[k as usize])
                    .product::<f64>()
            })
            .collect()
    }

    /// Row-per-point design matrix.
    pub fn design_matrix(&self, points: &[Vec<f64>]) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(points.len(), self.len());
        for (r, x) in points.iter().enumerate() {
            for (c, v) in self.evaluate(x).into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_values() {
        let p = legendre_orthonormal(0.5, 3);
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 3f64.sqrt() * 0.5).abs() < 1e-15);
        // P2(0.5) = (3·0.25 − 1)/2 = −0.125
        assert!((p[2] - 5f64.sqrt() * -0.125).abs() < 1e-15);
        // P3(0.5) = (5·0.125 − 1.5)/2 = −0.4375
        assert!((p[3] - 7f64.sqrt() * -0.4375).abs() < 1e-15);
    }

    #[test]
    fn index_counts_match_binomials() {
        assert_eq!(total_degree_indices(1, 10).len(), 11);
        assert_eq!(total_degree_indices(2, 5).len(), 21);
        assert_eq!(total_degree_indices(3, 3).len(), 20);
        let idx = total_degree_indices(2, 2);
        assert_eq!(idx[0], vec![0, 0]);
        assert!(idx.windows(2).all(|w| total_degree(&w[0]) <= total_degree(&w[1])));
    }

    #[test]
    fn rescaling_maps_bounds() {
        let space = DesignSpace::new(vec![2.0], vec![6.0]).unwrap();
        let b = PolynomialBasis::total_degree(space, 1);
        assert_eq!(b.reduced(&[2.0]), vec![-1.0]);
        assert_eq!(b.reduced(&[6.0]), vec![1.0]);
        assert_eq!(b.evaluate(&[4.0]), vec![1.0, 0.0]);
    }
}
