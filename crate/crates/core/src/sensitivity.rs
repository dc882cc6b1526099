//! Variance-based first-order and pairwise indices of a fitted expansion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{Distribution, RandomStream};
use crate::error::{Error, Result};
use crate::hdmr::HdmrModel;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 1000;
const BATCH: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// `S_i` per input.
    pub first_order: Vec<f64>,
    /// `((i, j), S_ij)` for every coupled pair of the model.
    pub pairwise: Vec<((usize, usize), f64)>,
    pub total_variance: f64,
    pub mc_samples: usize,
}

impl SensitivityReport {
    pub fn pair_index(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.pairwise
            .iter()
            .find(|(k, _)| *k == key)
            .map_or(0.0, |(_, v)| *v)
    }

    /// Inputs by decreasing first-order index; ties keep input order.
    pub fn ranked_first(&self) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.first_order.iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn ranked_pairs(&self) -> Vec<((usize, usize), f64)> {
        let mut v = self.pairwise.clone();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    /// `rank,variable,index` rows; `names` label the inputs.
    pub fn first_order_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("rank,variable,index\n");
        for (r, (i, s)) in self.ranked_first().into_iter().enumerate() {
            out.push_str(&format!("{},X{}({}),{}\n", r + 1, i + 1, label(names, i), s));
        }
        out
    }

    pub fn pairwise_csv(&self, names: &[&str]) -> String {
        let mut out = String::from("rank,variables,index\n");
        for (r, ((i, j), s)) in self.ranked_pairs().into_iter().enumerate() {
            out.push_str(&format!(
                "{},X{}({}) X{}({}),{}\n",
                r + 1,
                i + 1,
                label(names, i),
                j + 1,
                label(names, j),
                s
            ));
        }
        out
    }
}

fn label(names: &[&str], i: usize) -> String {
    names.get(i).map_or_else(|| format!("x{}", i + 1), |s| s.to_string())
}

/// Running sums for one scalar: `Σx` and `Σx²`.
#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    s: f64,
    ss: f64,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.n += 1.0;
        self.s += v;
        self.ss += v * v;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.s += o.s;
        self.ss += o.ss;
        self
    }

    fn variance(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let m = self.s / self.n;
        ((self.ss - self.n * m * m) / (self.n - 1.0)).max(0.0)
    }
}

/// Monte Carlo estimate of `Var f_i / Var f̂` and `Var f_ij / Var f̂` with
/// inputs drawn from `dists` and clipped to the model box. Batches use fixed
/// sub-streams, so the result does not depend on thread scheduling.
pub fn indices(
    m: &HdmrModel,
    dists: &[Distribution],
    n: usize,
    stream: &RandomStream,
) -> Result<SensitivityReport> {
    let p = m.dim();
    if dists.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: dists.len(),
        });
    }
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} Monte Carlo samples, got {n}"
        )));
    }
    let pairs = m.pairs();
    let slots = 1 + p + pairs.len();
    let batches = n.div_ceil(BATCH);

    let partial: Vec<Result<Vec<Moments>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut s = stream.substream(b as u64);
            let count = BATCH.min(n - b * BATCH);
            let mut acc = vec![Moments::default(); slots];
            let mut x = vec![0.0; p];
            for _ in 0..count {
                for (xi, d) in x.iter_mut().zip(dists) {
                    *xi = d.sample_one(&mut s);
                }
                m.space.clip(&mut x);
                acc[0].add(m.predict(&x)?);
                for i in 0..p {
                    acc[1 + i].add(m.first_order_value(i, x[i])?);
                }
                for (k, &(i, j)) in pairs.iter().enumerate() {
                    acc[1 + p + k].add(m.second_order_value(i, j, x[i], x[j])?);
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = vec![Moments::default(); slots];
    for batch in partial {
        for (t, b) in total.iter_mut().zip(batch?) {
            *t = t.merge(b);
        }
    }
    let var = total[0].variance();
    let ratio = |v: f64| if var > 0.0 { v / var } else { 0.0 };
    Ok(SensitivityReport {
        first_order: (0..p).map(|i| ratio(total[1 + i].variance())).collect(),
        pairwise: pairs
            .iter()
            .enumerate()
            .map(|(k, &pr)| (pr, ratio(total[1 + p + k].variance())))
            .collect(),
        total_variance: var,
        mc_samples: n,
    })
}

pub fn first_order_indices(
    m: &HdmrModel,
    dists: &[Distribution],
    n: usize,
    stream: &RandomStream,
) -> Result<Vec<f64>> {
    Ok(indices(m, dists, n, stream)?.first_order)
}

pub fn pairwise_indices(
    m: &HdmrModel,
    dists: &[Distribution],
    n: usize,
    stream: &RandomStream,
) -> Result<Vec<((usize, usize), f64)>> {
    Ok(indices(m, dists, n, stream)?.pairwise)
}
