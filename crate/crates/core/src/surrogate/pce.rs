//! Sparse polynomial chaos expansion on a Legendre basis.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::basis::{MultiIndex, PolynomialBasis};
use super::lars::hybrid_lars;
use crate::domain::{DesignSpace, SampleSet};
use crate::error::{Error, Result};

/// Fitted expansion `Σ y_a Φ_a(x)` over the selected multi-indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceModel {
    basis: PolynomialBasis,
    coefficients: Vec<f64>,
    /// Candidate multi-indices in LARS entry order (intercept excluded).
    #[serde(default)]
    selection_order: Vec<MultiIndex>,
    #[serde(default)]
    loo_error: f64,
}

impl PceModel {
    pub fn from_parts(basis: PolynomialBasis, coefficients: Vec<f64>) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::InvalidArgument(format!(
                "{} basis functions but {} coefficients",
                basis.len(),
                coefficients.len()
            )));
        }
        Ok(Self {
            basis,
            coefficients,
            selection_order: Vec::new(),
            loo_error: 0.0,
        })
    }

    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    pub fn multi_indices(&self) -> &[MultiIndex] {
        self.basis.indices()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn selection_order(&self) -> &[MultiIndex] {
        &self.selection_order
    }

    pub fn loo_error(&self) -> f64 {
        self.loo_error
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_flagged(x)?.0)
    }

    /// Prediction plus a flag set when `x` lies outside the training box.
    pub fn predict_flagged(&self, x: &[f64]) -> Result<(f64, bool)> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let extrapolated = !self.basis.space().contains(x);
        let value = self
            .basis
            .evaluate(x)
            .iter()
            .zip(&self.coefficients)
            .map(|(phi, c)| phi * c)
            .sum();
        Ok((value, extrapolated))
    }
}

/// Candidate basis of total degree `<= max_degree`, reduced to a sparse set
/// by hybrid LARS with leave-one-out model selection.
pub fn fit_pce(data: &SampleSet, space: &DesignSpace, max_degree: u32) -> Result<PceModel> {
    if max_degree == 0 {
        return Err(Error::InvalidArgument("max_degree must be >= 1".into()));
    }
    if data.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 points, got {}",
            data.len()
        )));
    }
    if data.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: data.dim(),
        });
    }
    let y = DVector::from_column_slice(data.responses());
    let mean = y.mean();
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let tie = 1e-12 * (var + mean * mean) + 1e-300;

    // Degree-adaptive: each total degree up to `max_degree` gets its own LARS
    // run and the lowest leave-one-out error wins, lower degree on ties.
    let mut best: Option<PceModel> = None;
    for degree in 1..=max_degree {
        let candidates = PolynomialBasis::total_degree(space.clone(), degree);
        let psi = candidates.design_matrix(data.points());
        let Some(selection) = hybrid_lars(&psi, &y) else {
            continue;
        };
        if best.as_ref().is_some_and(|b| selection.loo >= b.loo_error - tie) {
            continue;
        }
        let columns = selection.columns();
        let selection_order = selection
            .order
            .iter()
            .map(|&c| candidates.indices()[c].clone())
            .collect();
        best = Some(PceModel {
            basis: candidates.subset(&columns),
            coefficients: selection.coefficients,
            selection_order,
            loo_error: selection.loo,
        });
    }
    best.ok_or_else(|| Error::DegenerateData("no full-rank subset of the candidate basis".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_space() -> DesignSpace {
        DesignSpace::new(vec![-1.0], vec![1.0]).unwrap()
    }

    fn data_1d(xs: &[f64], f: impl Fn(f64) -> f64) -> SampleSet {
        SampleSet::from_parts(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|&x| f(x)).collect())
            .unwrap()
    }

    #[test]
    fn constant_data_recovers_constant() {
        let data = data_1d(&[-1.0, -0.3, 0.2, 0.9], |_| 3.0);
        let m = fit_pce(&data, &line_space(), 4).unwrap();
        assert_eq!(m.multi_indices()[0], vec![0]);
        assert!((m.coefficients()[0] - 3.0).abs() < 1e-10);
        for c in &m.coefficients()[1..] {
            assert!(c.abs() < 1e-10);
        }
        assert!((m.predict(&[0.77]).unwrap() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn reproduces_square() {
        let data = data_1d(&[-1.0, -0.5, 0.1, 1.0], |x| x * x);
        let m = fit_pce(&data, &line_space(), 2).unwrap();
        for k in 0..=200 {
            let x = -1.0 + 2.0 * k as f64 / 200.0;
            assert!((m.predict(&[x]).unwrap() - x * x).abs() < 1e-8);
        }
        assert!((m.predict(&[0.5]).unwrap() - 0.25).abs() < 1e-8);
    }

    #[test]
    fn bilinear_term_selected() {
        let space = DesignSpace::uniform(2, -1.0, 1.0).unwrap();
        let mut pts = Vec::new();
        for a in [-1.0, -0.3, 0.4, 1.0] {
            for b in [-1.0, 0.2, 1.0] {
                pts.push(vec![a, b]);
            }
        }
        let ys = pts.iter().map(|p| p[0] * p[1]).collect();
        let data = SampleSet::from_parts(pts, ys).unwrap();
        let m = fit_pce(&data, &space, 2).unwrap();
        assert!(m.multi_indices().contains(&vec![1, 1]));
        for a in [-0.9, -0.1, 0.55] {
            for b in [-0.7, 0.35, 0.8] {
                assert!((m.predict(&[a, b]).unwrap() - a * b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn empty_coefficients_predict_zero() {
        let basis = PolynomialBasis::new(line_space(), vec![]).unwrap();
        let m = PceModel::from_parts(basis, vec![]).unwrap();
        assert_eq!(m.predict(&[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn constant_basis_predicts_constant() {
        let m = PceModel::from_parts(PolynomialBasis::constant(line_space()), vec![3.0]).unwrap();
        assert_eq!(m.predict(&[-0.4]).unwrap(), 3.0);
        assert!(m.predict(&[0.0, 1.0]).is_err());
        let (_, flagged) = m.predict_flagged(&[1.5]).unwrap();
        assert!(flagged);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = data_1d(&[0.0], |x| x);
        assert!(fit_pce(&data, &line_space(), 2).is_err());
        let data = data_1d(&[0.0, 0.5], |x| x);
        assert!(fit_pce(&data, &line_space(), 0).is_err());
    }
}
