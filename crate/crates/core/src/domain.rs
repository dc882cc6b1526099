//! Shared primitives: design boxes, the cut-center, counted black-box
//! functions, sample sets, input distributions and seeded random streams.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum Euclidean distance between two rows of a [`SampleSet`].
pub const DUPLICATE_TOL: f64 = 1e-12;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Axis-aligned box `[lower, upper]` in `p` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct DesignSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<RawSpace> for DesignSpace {
    type Error = Error;
    fn try_from(raw: RawSpace) -> Result<Self> {
        DesignSpace::new(raw.lower, raw.upper)
    }
}

impl From<DesignSpace> for RawSpace {
    fn from(s: DesignSpace) -> Self {
        RawSpace {
            lower: s.lower,
            upper: s.upper,
        }
    }
}

impl DesignSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSpace("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::InvalidSpace(format!(
                "{} lower bounds but {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpace(format!(
                    "dimension {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval repeated `dim` times.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn bounds(&self, i: usize) -> (f64, f64) {
        (self.lower[i], self.upper[i])
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn check_value(&self, i: usize, value: f64) -> Result<()> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.dim(),
            });
        }
        let (lower, upper) = self.bounds(i);
        if !(value >= lower && value <= upper) {
            return Err(Error::OutOfBounds {
                index: i,
                value,
                lower,
                upper,
            });
        }
        Ok(())
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Restriction to the listed dimensions, in the listed order.
    pub fn project(&self, dims: &[usize]) -> Result<DesignSpace> {
        let mut lower = Vec::with_capacity(dims.len());
        let mut upper = Vec::with_capacity(dims.len());
        for &d in dims {
            if d >= self.dim() {
                return Err(Error::IndexOutOfRange {
                    index: d,
                    dim: self.dim(),
                });
            }
            lower.push(self.lower[d]);
            upper.push(self.upper[d]);
        }
        DesignSpace::new(lower, upper)
    }

    /// Affine map of `x` into `[0, 1]^p`.
    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Uniform draw inside the box.
    pub fn sample_uniform(&self, stream: &mut RandomStream) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo + (hi - lo) * stream.next_f64())
            .collect()
    }
}

/// Anchor point of the cut decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutCenter {
    coords: Vec<f64>,
}

impl CutCenter {
    pub fn new(space: &DesignSpace, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: coords.len(),
            });
        }
        for (i, &c) in coords.iter().enumerate() {
            space.check_value(i, c)?;
        }
        Ok(Self { coords })
    }

    pub fn midpoint(space: &DesignSpace) -> Self {
        Self {
            coords: space.midpoint(),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The center with coordinate `i` replaced by `value`.
    pub fn axis_point(&self, space: &DesignSpace, i: usize, value: f64) -> Result<Vec<f64>> {
        space.check_value(i, value)?;
        let mut x = self.coords.clone();
        x[i] = value;
        Ok(x)
    }

    /// The center with coordinates `i` and `j` replaced.
    pub fn plane_point(
        &self,
        space: &DesignSpace,
        i: usize,
        j: usize,
        vi: f64,
        vj: f64,
    ) -> Result<Vec<f64>> {
        if i == j {
            return Err(Error::InvalidArgument(format!(
                "plane point needs two distinct dimensions, got {i} twice"
            )));
        }
        space.check_value(i, vi)?;
        space.check_value(j, vj)?;
        let mut x = self.coords.clone();
        x[i] = vi;
        x[j] = vj;
        Ok(x)
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Black-box objective with an exact evaluation counter and an optional hard
/// budget. The counter is atomic so a shared reference may be evaluated from
/// several threads.
pub struct BudgetedFunction {
    arity: usize,
    evaluator: Evaluator,
    count: AtomicU64,
    budget: Option<u64>,
}

impl fmt::Debug for BudgetedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BudgetedFunction")
            .field("arity", &self.arity)
            .field("count", &self.count())
            .field("budget", &self.budget)
            .finish()
    }
}

impl BudgetedFunction {
    pub fn new<F>(arity: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::from_evaluator(arity, Arc::new(f))
    }

    pub fn from_evaluator(arity: usize, evaluator: Evaluator) -> Self {
        Self {
            arity,
            evaluator,
            count: AtomicU64::new(0),
            budget: None,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn remaining(&self) -> Option<u64> {
        self.budget.map(|b| b.saturating_sub(self.count()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity {
            return Err(Error::DimensionMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        let budget = self.budget;
        self.count
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |c| match budget {
                Some(b) if c >= b => None,
                _ => Some(c + 1),
            })
            .map_err(|_| Error::BudgetExhausted(budget.unwrap_or(0)))?;
        Ok((self.evaluator)(x))
    }
}

/// Paired points and responses; rows are pairwise distinct.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    responses: Vec<f64>,
}

impl SampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(points: Vec<Vec<f64>>, responses: Vec<f64>) -> Result<Self> {
        if points.len() != responses.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} responses",
                points.len(),
                responses.len()
            )));
        }
        let mut set = SampleSet::new();
        for (x, y) in points.into_iter().zip(responses) {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: x.len(),
                });
            }
        }
        if self.contains_near(&x, DUPLICATE_TOL) {
            return Err(Error::DuplicatePoint);
        }
        self.points.push(x);
        self.responses.push(y);
        Ok(())
    }

    pub fn contains_near(&self, x: &[f64], tol: f64) -> bool {
        self.points.iter().any(|p| euclidean(p, x) <= tol)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Independent marginal input distribution. Normal and Gumbel are given by
/// mean and standard deviation; Uniform by its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Distribution {
    Normal { mean: f64, std: f64 },
    Uniform { lower: f64, upper: f64 },
    Gumbel { mean: f64, std: f64 },
}

impl Distribution {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        Self::Normal { mean, std }.validated()
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        Self::Uniform { lower, upper }.validated()
    }

    pub fn gumbel(mean: f64, std: f64) -> Result<Self> {
        Self::Gumbel { mean, std }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Normal { mean, std } | Self::Gumbel { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && std > 0.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "need finite mean and std > 0, got mean {mean}, std {std}"
                    )));
                }
            }
            Self::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(Error::InvalidDistribution(format!(
                        "need finite lower < upper, got [{lower}, {upper}]"
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Gumbel (location, scale) matched to the stated mean and std:
    /// `scale = std·√6/π`, `location = mean − γ·scale`.
    pub fn gumbel_location_scale(mean: f64, std: f64) -> (f64, f64) {
        let scale = std * 6f64.sqrt() / std::f64::consts::PI;
        (mean - EULER_GAMMA * scale, scale)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mean, .. } | Self::Gumbel { mean, .. } => mean,
            Self::Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Self::Normal { std, .. } | Self::Gumbel { std, .. } => std,
            Self::Uniform { lower, upper } => (upper - lower) / 12f64.sqrt(),
        }
    }

    /// Modeling interval: the bounds for Uniform, `mean ± 3·std` otherwise.
    pub fn design_interval(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lower, upper } => (lower, upper),
            Self::Normal { mean, std } | Self::Gumbel { mean, std } => {
                (mean - 3.0 * std, mean + 3.0 * std)
            }
        }
    }

    pub fn sample_one(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            Self::Normal { mean, std } => rand_distr::Normal::new(mean, std)
                .expect("validated normal")
                .sample(stream),
            Self::Uniform { lower, upper } => lower + (upper - lower) * stream.next_f64(),
            Self::Gumbel { mean, std } => {
                let (loc, scale) = Self::gumbel_location_scale(mean, std);
                rand_distr::Gumbel::new(loc, scale)
                    .expect("validated gumbel")
                    .sample(stream)
            }
        }
    }

    pub fn sample(&self, stream: &mut RandomStream, n: usize) -> Result<Vec<f64>> {
        self.validated()?;
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        Ok((0..n).map(|_| self.sample_one(stream)).collect())
    }
}

/// Seeded, reproducible random stream. Sub-streams share the seed but use
/// disjoint ChaCha stream ids, so work split across threads stays
/// deterministic.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream number `k` derived from the same seed.
    pub fn substream(&self, k: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k.wrapping_add(1));
        Self {
            seed: self.seed,
            rng,
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_f64() * n as f64) as usize % n
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(p: usize, lo: f64, hi: f64) -> DesignSpace {
        DesignSpace::uniform(p, lo, hi).unwrap()
    }

    #[test]
    fn space_rejects_inverted_bounds() {
        assert!(DesignSpace::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DesignSpace::new(vec![], vec![]).is_err());
        assert!(DesignSpace::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn evaluate_counts_and_respects_budget() {
        let f = BudgetedFunction::new(2, |_| 3.0);
        assert_eq!(f.count(), 0);
        assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(f.count(), 1);

        let g = BudgetedFunction::new(2, |_| 3.0).with_budget(1);
        g.evaluate(&[0.0, 0.0]).unwrap();
        assert!(matches!(
            g.evaluate(&[0.0, 0.0]),
            Err(Error::BudgetExhausted(1))
        ));
        assert_eq!(g.count(), 1);
        assert!(matches!(
            f.evaluate(&[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn evaluate_rosenbrock_minimum() {
        let f = BudgetedFunction::new(9, |x| crate::bench::rosenbrock9(x).unwrap());
        assert_eq!(f.evaluate(&[1.0; 9]).unwrap(), 0.0);
    }

    #[test]
    fn concurrent_counting_is_exact() {
        let f = BudgetedFunction::new(1, |x| x[0]);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..250 {
                        f.evaluate(&[0.5]).unwrap();
                    }
                });
            }
        });
        assert_eq!(f.count(), 1000);
    }

    #[test]
    fn axis_and_plane_points() {
        let space = cube(3, -10.0, 10.0);
        let c = CutCenter::new(&space, vec![0.0, 0.0, 0.0]).unwrap();
        // dimension "2" in one-based numbering is index 1
        assert_eq!(c.axis_point(&space, 1, 5.0).unwrap(), vec![0.0, 5.0, 0.0]);
        assert_eq!(
            c.plane_point(&space, 0, 2, 2.0, 4.0).unwrap(),
            vec![2.0, 0.0, 4.0]
        );
        assert_eq!(
            c.plane_point(&space, 2, 0, 4.0, 2.0).unwrap(),
            c.plane_point(&space, 0, 2, 2.0, 4.0).unwrap()
        );
        assert_eq!(c.plane_point(&space, 0, 1, 0.0, 0.0).unwrap(), c.coords());
        assert!(c.plane_point(&space, 1, 1, 0.0, 0.0).is_err());
        assert!(c.axis_point(&space, 3, 0.0).is_err());
        assert!(c.axis_point(&space, 0, 11.0).is_err());

        let c2 = CutCenter::new(&space, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c2.axis_point(&space, 0, 1.0).unwrap(), vec![1.0, 2.0, 3.0]);

        let wide = cube(10, -1.0, 1.0);
        let c3 = CutCenter::new(&wide, (0..10).map(|k| k as f64 * 0.05).collect()).unwrap();
        let x = c3.axis_point(&wide, 6, 1.0).unwrap();
        for k in 0..10 {
            if k == 6 {
                assert_eq!(x[k], 1.0);
            } else {
                assert_eq!(x[k], c3.coords()[k]);
            }
        }
    }

    #[test]
    fn center_must_lie_in_space() {
        let space = cube(2, 0.0, 1.0);
        assert!(CutCenter::new(&space, vec![0.5, 1.5]).is_err());
        assert!(CutCenter::new(&space, vec![0.5]).is_err());
    }

    #[test]
    fn sample_set_rejects_duplicates() {
        let mut s = SampleSet::new();
        s.push(vec![0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            s.push(vec![0.0, 5e-13], 2.0),
            Err(Error::DuplicatePoint)
        ));
        s.push(vec![0.0, 1e-6], 2.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.push(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn uniform_draws_respect_bounds() {
        let d = Distribution::uniform(119.75, 120.25).unwrap();
        let mut s = RandomStream::new(7);
        for v in d.sample(&mut s, 10_000).unwrap() {
            assert!((119.75..=120.25).contains(&v));
        }
    }

    #[test]
    fn normal_sample_mean_converges() {
        let d = Distribution::normal(5.0, 0.1).unwrap();
        let mut s = RandomStream::new(11);
        let xs = d.sample(&mut s, 100_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 5.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn gumbel_moment_matching() {
        let (loc, scale) = Distribution::gumbel_location_scale(12.0, 1.2);
        assert!((scale - 0.9357).abs() < 1e-4, "scale {scale}");
        assert!((loc - 11.4599).abs() < 1e-4, "loc {loc}");

        let d = Distribution::gumbel(12.0, 1.2).unwrap();
        let mut s = RandomStream::new(3);
        let xs = d.sample(&mut s, 1_000_000).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 12.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn invalid_distributions_rejected() {
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::gumbel(0.0, -1.0).is_err());
        assert!(Distribution::uniform(1.0, 1.0).is_err());
        let bad = Distribution::Normal {
            mean: 0.0,
            std: -1.0,
        };
        assert!(bad.sample(&mut RandomStream::new(0), 3).is_err());
    }

    #[test]
    fn streams_are_reproducible() {
        let d = Distribution::gumbel(12.0, 1.2).unwrap();
        let a = d.sample(&mut RandomStream::new(42), 100).unwrap();
        let b = d.sample(&mut RandomStream::new(42), 100).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let s = RandomStream::new(42);
        let mut s1 = s.substream(1);
        let mut s2 = s.substream(2);
        assert_ne!(s1.next_u64(), s2.next_u64());
    }
}
