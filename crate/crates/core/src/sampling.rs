//! Sequential sampling rules: proportional insertion along an axis and
//! maximum-entropy selection on a plane.

use rayon::prelude::*;

use crate::domain::{euclidean, DUPLICATE_TOL};
use crate::error::{Error, Result};
use crate::surrogate::kriging::{factor_with_escalation, gauss, NUGGET_START};

/// Denominator floor of the relative convergence test.
pub const RELATIVE_FLOOR: f64 = 1e-8;

/// Axis coordinates in strictly increasing order with their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedAxisSamples {
    values: Vec<f64>,
    responses: Vec<f64>,
}

impl SortedAxisSamples {
    pub fn new(values: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if values.len() != responses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values but {} responses",
                values.len(),
                responses.len()
            )));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("axis values must be strictly increasing".into()));
        }
        Ok(Self { values, responses })
    }

    /// Sorts `(value, response)` pairs; repeated values are rejected.
    pub fn from_pairs(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, responses) = pairs.into_iter().unzip();
        Self::new(values, responses)
    }

    pub fn insert(&mut self, value: f64, response: f64) -> Result<()> {
        let pos = self.values.partition_point(|v| *v < value);
        let clash = |k: usize| self.values.get(k).is_some_and(|v| (v - value).abs() <= DUPLICATE_TOL);
        if clash(pos) || (pos > 0 && clash(pos - 1)) {
            return Err(Error::DuplicatePoint);
        }
        self.values.insert(pos, value);
        self.responses.insert(pos, response);
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Splits the interval with the largest response jump at `C : (1 − C)`.
/// Ties go to the leftmost interval.
pub fn proportional_insert(axis: &SortedAxisSamples, c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("C = {c} outside (0, 1)")));
    }
    if axis.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 axis samples".into()));
    }
    let r = axis.responses();
    let mut k = 0;
    let mut gap = (r[1] - r[0]).abs();
    for i in 1..r.len() - 1 {
        let g = (r[i + 1] - r[i]).abs();
        if g > gap {
            gap = g;
            k = i;
        }
    }
    let v = axis.values();
    Ok(c * v[k] + (1.0 - c) * v[k + 1])
}

/// `|f̂ − f| / max(|f|, 1e-8) <= epsilon`
pub fn converged(f_true: f64, f_hat: f64, epsilon: f64) -> bool {
    (f_hat - f_true).abs() / f_true.abs().max(RELATIVE_FLOOR) <= epsilon
}

/// Tensor-cell subdivision of a plane and the centers of its cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    /// `([lo_i, lo_j], [hi_i, hi_j])` per cell.
    pub cells: Vec<([f64; 2], [f64; 2])>,
    pub candidates: Vec<Vec<f64>>,
}

impl CandidateGrid {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

fn sorted_unique(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= DUPLICATE_TOL);
    v
}

/// Cells between consecutive distinct axis values on each dimension. Cells
/// are ordered with the first axis varying fastest.
pub fn build_candidate_grid(values_i: &[f64], values_j: &[f64]) -> Result<CandidateGrid> {
    let a = sorted_unique(values_i);
    let b = sorted_unique(values_j);
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "each axis needs at least 2 distinct values".into(),
        ));
    }
    let mut cells = Vec::with_capacity((a.len() - 1) * (b.len() - 1));
    let mut candidates = Vec::with_capacity(cells.capacity());
    for wj in b.windows(2) {
        for wi in a.windows(2) {
            cells.push(([wi[0], wj[0]], [wi[1], wj[1]]));
            candidates.push(vec![0.5 * (wi[0] + wi[1]), 0.5 * (wj[0] + wj[1])]);
        }
    }
    Ok(CandidateGrid { cells, candidates })
}

/// Outcome of [`max_entropy_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyChoice {
    pub index: usize,
    pub point: Vec<f64>,
    /// `σ²(1 − rᵀR⁻¹r)`, the factor by which the covariance determinant grows.
    pub score: f64,
}

/// Picks the candidate that maximizes the determinant of the augmented
/// covariance matrix. Coordinates are used as given, with Gaussian
/// correlation parameters `theta`.
pub fn max_entropy_select(
    existing: &[Vec<f64>],
    candidates: &[Vec<f64>],
    theta: &[f64],
    sigma2: f64,
) -> Result<EntropyChoice> {
    if existing.is_empty() {
        return Err(Error::InvalidArgument("no existing points".into()));
    }
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no candidates".into()));
    }
    let (chol, _) = factor_with_escalation(existing, theta, NUGGET_START)?;
    let gains: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|c| {
            if existing.iter().any(|e| euclidean(e, c) <= DUPLICATE_TOL) {
                return None;
            }
            let r = nalgebra::DVector::from_iterator(
                existing.len(),
                existing.iter().map(|e| gauss(c, e, theta)),
            );
            Some(1.0 - r.dot(&chol.solve(&r)))
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (k, g) in gains.iter().enumerate() {
        if let Some(g) = *g {
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((k, g));
            }
        }
    }
    let (index, gain) = best.ok_or_else(|| {
        Error::InvalidArgument("every candidate coincides with an existing point".into())
    })?;
    Ok(EntropyChoice {
        index,
        point: candidates[index].clone(),
        score: sigma2 * gain,
    })
}
