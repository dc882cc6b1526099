//! Cut-HDMR expansion truncated at second order, built adaptively.
//!
//! `f(x) ≈ f0 + Σ f_i(x_i) + Σ f_ij(x_i, x_j)` with every component anchored
//! at the cut-center, so all terms vanish there.

use serde::{Deserialize, Serialize};

use crate::domain::{BudgetedFunction, CutCenter, DesignSpace, RandomStream, SampleSet, DUPLICATE_TOL};
use crate::error::{Error, Result};
use crate::sampling::{
    build_candidate_grid, converged, max_entropy_select, proportional_insert, SortedAxisSamples,
};
use crate::surrogate::{fit_kriging, Backend, ComponentModel, PolynomialBasis, SurrogateConfig};

/// First-order `(i)` or second-order `(i, j)` with `i < j`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKey {
    First(usize),
    Second(usize, usize),
}

impl ComponentKey {
    /// Second-order key with the indices in either order.
    pub fn pair(i: usize, j: usize) -> Self {
        ComponentKey::Second(i.min(j), i.max(j))
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            ComponentKey::First(i) => vec![i],
            ComponentKey::Second(i, j) => vec![i, j],
        }
    }
}

impl std::fmt::Display for ComponentKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ComponentKey::First(i) => write!(f, "f{}", i + 1),
            ComponentKey::Second(i, j) => write!(f, "f{},{}", i + 1, j + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Zero,
    Linear,
    Surrogate,
}

/// One component function of the expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentTerm {
    pub key: ComponentKey,
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ComponentModel>,
    /// `[a, f_i(a), b, f_i(b)]` for a linear term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<[f64; 4]>,
    /// Training data in component coordinates, targets are component values.
    pub samples: SampleSet,
    /// True-function evaluations spent on this term.
    pub sample_count: u64,
    #[serde(default)]
    pub converged: bool,
}

impl ComponentTerm {
    fn zero(key: ComponentKey) -> Self {
        Self {
            key,
            kind: TermKind::Zero,
            model: None,
            line: None,
            samples: SampleSet::new(),
            sample_count: 0,
            converged: false,
        }
    }

    /// Component value at its own coordinates, ignoring the cut-center rule.
    pub fn raw_value(&self, z: &[f64]) -> Result<f64> {
        match self.kind {
            TermKind::Zero => Ok(0.0),
            TermKind::Linear => {
                let [a, fa, b, fb] = self.line.ok_or_else(|| {
                    Error::InvalidArgument(format!("linear term {} without a line", self.key))
                })?;
                Ok(fa + (fb - fa) * (z[0] - a) / (b - a))
            }
            TermKind::Surrogate => self
                .model
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument(format!("term {} has no model", self.key)))?
                .predict_mean(z),
        }
    }
}

/// `true` when the line through the two seeds already hits 0 at the center.
pub fn linearity_test(a: f64, fa: f64, b: f64, fb: f64, center: f64, tol: f64) -> bool {
    let at_center = fa + (fb - fa) * (center - a) / (b - a);
    at_center.abs() <= tol * (1.0 + fa.abs().max(fb.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    /// Proportional split coefficient of the first stage.
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    pub linearity_tol: f64,
    /// Evaluation cap per axis, seeds included.
    pub stage1_max: usize,
    /// Evaluation cap per coupled pair.
    pub stage2_max: usize,
    pub probe_count: usize,
    /// Axis seeds are drawn within this fraction of the range from each
    /// bound; 0 puts them on the bounds.
    pub seed_radius: f64,
    pub seed: u64,
    pub surrogate: SurrogateConfig,
    /// Soft limit on true-function evaluations; the build stops early and
    /// returns what it has.
    pub max_evals: Option<u64>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            c: 0.5,
            epsilon: 1e-3,
            linearity_tol: 1e-6,
            stage1_max: 20,
            stage2_max: 30,
            probe_count: 3,
            seed_radius: 0.01,
            seed: 0,
            surrogate: SurrogateConfig::default(),
            max_evals: None,
        }
    }
}

impl BuildConfig {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            surrogate: SurrogateConfig::new(backend),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::InvalidArgument(format!("C = {} outside (0, 1)", self.c)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if !(self.linearity_tol >= 0.0) {
            return Err(Error::InvalidArgument("linearity_tol must be >= 0".into()));
        }
        if !(0.0..0.5).contains(&self.seed_radius) {
            return Err(Error::InvalidArgument("seed_radius must lie in [0, 0.5)".into()));
        }
        if self.stage1_max < 2 {
            return Err(Error::InvalidArgument("stage1_max must be >= 2".into()));
        }
        Ok(())
    }
}

/// Fitted second-order Cut-HDMR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdmrModel {
    pub space: DesignSpace,
    pub center: CutCenter,
    pub f0: f64,
    /// One entry per input, in order.
    pub first: Vec<ComponentTerm>,
    /// Coupled pairs sorted by key.
    pub second: Vec<ComponentTerm>,
    pub coupling: Vec<Vec<bool>>,
    pub backend: Backend,
    pub total_evals: u64,
    /// Evaluations spent on coupling probes.
    pub probe_evals: u64,
    /// `false` when an evaluation limit cut the build short.
    #[serde(default = "yes")]
    pub complete: bool,
}

fn yes() -> bool {
    true
}

impl HdmrModel {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn term(&self, key: ComponentKey) -> Option<&ComponentTerm> {
        match key {
            ComponentKey::First(i) => self.first.get(i),
            ComponentKey::Second(i, j) => {
                let k = ComponentKey::pair(i, j);
                self.second.iter().find(|t| t.key == k)
            }
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.second
            .iter()
            .filter_map(|t| match t.key {
                ComponentKey::Second(i, j) => Some((i, j)),
                _ => None,
            })
            .collect()
    }

    /// `f_i(x_i)`, exactly zero at the center coordinate.
    pub fn first_order_value(&self, i: usize, xi: f64) -> Result<f64> {
        if xi == self.center.coords()[i] {
            return Ok(0.0);
        }
        self.first[i].raw_value(&[xi])
    }

    fn second_value(&self, term: &ComponentTerm, x: &[f64]) -> Result<f64> {
        let ComponentKey::Second(i, j) = term.key else {
            return Ok(0.0);
        };
        let c = self.center.coords();
        if x[i] == c[i] || x[j] == c[j] {
            return Ok(0.0);
        }
        term.raw_value(&[x[i], x[j]])
    }

    /// `f_ij(x_i, x_j)`; zero when either coordinate sits at the center or
    /// the pair is not coupled.
    pub fn second_order_value(&self, i: usize, j: usize, xi: f64, xj: f64) -> Result<f64> {
        let key = ComponentKey::pair(i, j);
        let Some(term) = self.term(key) else {
            return Ok(0.0);
        };
        let mut x = self.center.coords().to_vec();
        x[i] = xi;
        x[j] = xj;
        self.second_value(term, &x)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut total = self.f0;
        for (i, xi) in x.iter().enumerate() {
            total += self.first_order_value(i, *xi)?;
        }
        for term in &self.second {
            total += self.second_value(term, x)?;
        }
        Ok(total)
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: HdmrModel = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let p = self.dim();
        if self.center.dim() != p || self.first.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: self.first.len(),
            });
        }
        if self.coupling.len() != p || self.coupling.iter().any(|r| r.len() != p) {
            return Err(Error::InvalidArgument("coupling matrix is not p×p".into()));
        }
        for t in self.first.iter().chain(&self.second) {
            if (t.kind == TermKind::Surrogate) != t.model.is_some() {
                return Err(Error::InvalidArgument(format!("term {} kind/model mismatch", t.key)));
            }
        }
        Ok(())
    }
}

fn coupling_matrix(p: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; p]; p];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(i, j) in pairs {
        m[i][j] = true;
        m[j][i] = true;
    }
    m
}

enum Halt {
    /// Soft evaluation cap reached.
    Stop,
    Fail(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Fail(e)
    }
}

type Step<T> = std::result::Result<T, Halt>;

struct AxisState {
    samples: SortedAxisSamples,
    done: bool,
}

struct PairState {
    i: usize,
    j: usize,
    space: DesignSpace,
    data: SampleSet,
    candidates: Vec<Vec<f64>>,
    done: bool,
}

struct Builder<'a> {
    f: &'a BudgetedFunction,
    cfg: &'a BuildConfig,
    space: &'a DesignSpace,
    center: CutCenter,
    start_count: u64,
    stream: RandomStream,
    f0: f64,
    first: Vec<ComponentTerm>,
    axes: Vec<Option<AxisState>>,
    second: Vec<ComponentTerm>,
    pairs: Vec<PairState>,
    probe_evals: u64,
}

/// Builds the expansion around `center` (the box midpoint when `None`).
/// A hard budget on `f` running out yields [`Error::PartialBuild`].
pub fn build(
    f: &BudgetedFunction,
    space: &DesignSpace,
    center: Option<&CutCenter>,
    cfg: &BuildConfig,
) -> Result<HdmrModel> {
    cfg.validate()?;
    if f.arity() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: f.arity(),
        });
    }
    let center = match center {
        Some(c) => c.clone(),
        None => CutCenter::midpoint(space),
    };
    if center.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: center.dim(),
        });
    }
    for (i, c) in center.coords().iter().enumerate() {
        let (lo, hi) = space.bounds(i);
        if !(*c > lo && *c < hi) {
            return Err(Error::OutOfBounds {
                index: i,
                value: *c,
                lower: lo,
                upper: hi,
            });
        }
    }

    let p = space.dim();
    let mut b = Builder {
        f,
        cfg,
        space,
        center,
        start_count: f.count(),
        stream: RandomStream::new(cfg.seed),
        f0: 0.0,
        first: (0..p).map(|i| ComponentTerm::zero(ComponentKey::First(i))).collect(),
        axes: (0..p).map(|_| None).collect(),
        second: Vec::new(),
        pairs: Vec::new(),
        probe_evals: 0,
    };
    match b.run() {
        Ok(()) => Ok(b.finish(true)),
        Err(Halt::Stop) => Ok(b.finish(false)),
        Err(Halt::Fail(Error::BudgetExhausted(_))) => {
            let partial = b.finish(false);
            Err(Error::PartialBuild {
                evals: partial.total_evals,
                partial: Box::new(partial),
            })
        }
        Err(Halt::Fail(e)) => Err(e),
    }
}

impl Builder<'_> {
    fn eval(&mut self, x: &[f64]) -> Step<f64> {
        if let Some(cap) = self.cfg.max_evals {
            if self.f.count() - self.start_count >= cap {
                return Err(Halt::Stop);
            }
        }
        Ok(self.f.evaluate(x)?)
    }

    fn run(&mut self) -> Step<()> {
        let x0 = self.center.coords().to_vec();
        self.f0 = self.eval(&x0)?;
        self.seed_axes()?;
        self.stage_one()?;
        let flagged = self.coupling_test()?;
        self.start_pairs(&flagged)?;
        self.stage_two()?;
        Ok(())
    }

    fn axis_space(&self, i: usize) -> Result<DesignSpace> {
        self.space.project(&[i])
    }

    fn fit_component(&self, key: ComponentKey, data: &SampleSet, space: &DesignSpace) -> Result<ComponentModel> {
        ComponentModel::fit(data, space, &self.cfg.surrogate).map_err(|e| Error::ComponentFit {
            key: key.to_string(),
            source: Box::new(e),
        })
    }

    fn axis_sample_set(&self, axis: &SortedAxisSamples) -> SampleSet {
        SampleSet::from_parts(
            axis.values().iter().map(|v| vec![*v]).collect(),
            axis.responses().to_vec(),
        )
        .expect("axis values are distinct")
    }

    fn seed_axes(&mut self) -> Step<()> {
        let p = self.space.dim();
        let tol = self.cfg.linearity_tol;
        for i in 0..p {
            let (lo, hi) = self.space.bounds(i);
            let c = self.center.coords()[i];
            let r = self.cfg.seed_radius * (hi - lo);
            let (a, bnd) = if r > 0.0 {
                let mut s = RandomStream::new(self.cfg.seed).substream(1000 + i as u64);
                let left = (r * s.next_f64()).min(0.5 * (c - lo));
                let right = (r * s.next_f64()).min(0.5 * (hi - c));
                (lo + left, hi - right)
            } else {
                (lo, hi)
            };
            let fa = self.eval(&self.center.axis_point(self.space, i, a)?)? - self.f0;
            self.first[i].sample_count += 1;
            let fb = match self.eval(&self.center.axis_point(self.space, i, bnd)?) {
                Ok(v) => v - self.f0,
                Err(h) => {
                    self.first[i].samples =
                        SampleSet::from_parts(vec![vec![a], vec![c]], vec![fa, 0.0])?;
                    return Err(h);
                }
            };
            self.first[i].sample_count += 1;

            let axis = SortedAxisSamples::new(vec![a, c, bnd], vec![fa, 0.0, fb])?;
            let term = &mut self.first[i];
            term.samples = SampleSet::from_parts(
                axis.values().iter().map(|v| vec![*v]).collect(),
                axis.responses().to_vec(),
            )?;
            let zero_tol = tol * (1.0 + self.f0.abs());
            if fa.abs() <= zero_tol && fb.abs() <= zero_tol {
                term.kind = TermKind::Zero;
                term.converged = true;
                self.axes[i] = Some(AxisState { samples: axis, done: true });
            } else if linearity_test(a, fa, bnd, fb, c, tol) {
                term.kind = TermKind::Linear;
                term.line = Some([a, fa, bnd, fb]);
                term.converged = true;
                self.axes[i] = Some(AxisState { samples: axis, done: true });
            } else {
                let data = self.axis_sample_set(&axis);
                let model = self.fit_component(ComponentKey::First(i), &data, &self.axis_space(i)?)?;
                let term = &mut self.first[i];
                term.kind = TermKind::Surrogate;
                term.model = Some(model);
                self.axes[i] = Some(AxisState { samples: axis, done: false });
            }
        }
        Ok(())
    }

    fn stage_one(&mut self) -> Step<()> {
        let p = self.space.dim();
        loop {
            let mut active = false;
            for i in 0..p {
                let Some(state) = &self.axes[i] else { continue };
                if state.done {
                    continue;
                }
                if self.first[i].sample_count as usize >= self.cfg.stage1_max {
                    self.axes[i].as_mut().unwrap().done = true;
                    continue;
                }
                let x_new = proportional_insert(&state.samples, self.cfg.c)?;
                if state
                    .samples
                    .values()
                    .iter()
                    .any(|v| (v - x_new).abs() <= DUPLICATE_TOL)
                {
                    self.axes[i].as_mut().unwrap().done = true;
                    continue;
                }
                active = true;
                let y = self.eval(&self.center.axis_point(self.space, i, x_new)?)?;
                self.first[i].sample_count += 1;
                let f_hat = self.f0 + self.first[i].raw_value(&[x_new])?;
                let ok = converged(y, f_hat, self.cfg.epsilon);

                let state = self.axes[i].as_mut().unwrap();
                state.samples.insert(x_new, y - self.f0)?;
                let data = self.axis_sample_set(&self.axes[i].as_ref().unwrap().samples);
                let model = self.fit_component(ComponentKey::First(i), &data, &self.axis_space(i)?)?;
                let term = &mut self.first[i];
                term.samples = data;
                term.model = Some(model);
                if ok {
                    term.converged = true;
                    self.axes[i].as_mut().unwrap().done = true;
                }
            }
            if !active {
                return Ok(());
            }
        }
    }

    /// Axis coordinates already sampled on dimension `i`, the center excluded.
    fn off_center_values(&self, i: usize) -> Vec<f64> {
        let c = self.center.coords()[i];
        self.first[i]
            .samples
            .points()
            .iter()
            .map(|v| v[0])
            .filter(|v| *v != c)
            .collect()
    }

    fn additive(&self, x: &[f64]) -> Result<f64> {
        let c = self.center.coords();
        let mut total = self.f0;
        for (i, xi) in x.iter().enumerate() {
            if *xi != c[i] {
                total += self.first[i].raw_value(&[*xi])?;
            }
        }
        Ok(total)
    }

    fn pick(&mut self, values: &[f64]) -> f64 {
        values[self.stream.index(values.len())]
    }

    fn coupling_test(&mut self) -> Step<Vec<((usize, usize), Vec<f64>, f64)>> {
        let p = self.space.dim();
        if p < 2 {
            return Ok(Vec::new());
        }
        let off: Vec<Vec<f64>> = (0..p).map(|i| self.off_center_values(i)).collect();
        if off.iter().any(Vec::is_empty) {
            return Ok(Vec::new());
        }

        let mut all_additive = true;
        for _ in 0..self.cfg.probe_count {
            let x: Vec<f64> = (0..p).map(|i| self.pick(&off[i])).collect();
            let y = self.eval(&x)?;
            self.probe_evals += 1;
            if !converged(y, self.additive(&x)?, self.cfg.epsilon) {
                all_additive = false;
                break;
            }
        }
        if all_additive && self.cfg.probe_count > 0 {
            return Ok(Vec::new());
        }

        let mut flagged = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                let vi = self.pick(&off[i]);
                let vj = self.pick(&off[j]);
                let x = self.center.plane_point(self.space, i, j, vi, vj)?;
                let y = self.eval(&x)?;
                self.probe_evals += 1;
                let residual = y - self.additive(&x)?;
                if residual.abs() > self.cfg.epsilon * (1.0 + y.abs()) {
                    flagged.push(((i, j), vec![vi, vj], residual));
                }
            }
        }
        Ok(flagged)
    }

    /// Values of `f_i + f_j` at a plane point, used to turn true responses
    /// into second-order targets.
    fn first_pair(&self, i: usize, j: usize, z: &[f64]) -> Result<f64> {
        let c = self.center.coords();
        let mut s = 0.0;
        if z[0] != c[i] {
            s += self.first[i].raw_value(&[z[0]])?;
        }
        if z[1] != c[j] {
            s += self.first[j].raw_value(&[z[1]])?;
        }
        Ok(s)
    }

    fn start_pairs(&mut self, flagged: &[((usize, usize), Vec<f64>, f64)]) -> Step<()> {
        let c = self.center.coords().to_vec();
        for ((i, j), probe, residual) in flagged {
            let (i, j) = (*i, *j);
            let space = self.space.project(&[i, j])?;
            let mut data = SampleSet::new();
            let vi: Vec<f64> = self.first[i].samples.points().iter().map(|v| v[0]).collect();
            let vj: Vec<f64> = self.first[j].samples.points().iter().map(|v| v[0]).collect();
            for v in &vi {
                data.push(vec![*v, c[j]], 0.0)?;
            }
            for v in &vj {
                let pt = vec![c[i], *v];
                if !data.contains_near(&pt, DUPLICATE_TOL) {
                    data.push(pt, 0.0)?;
                }
            }
            data.push(probe.clone(), *residual)?;
            let grid = build_candidate_grid(&vi, &vj)?;
            let candidates = grid
                .candidates
                .into_iter()
                .filter(|p| !data.contains_near(p, DUPLICATE_TOL))
                .collect();
            let key = ComponentKey::Second(i, j);
            let model = self.fit_component(key, &data, &space)?;
            self.second.push(ComponentTerm {
                key,
                kind: TermKind::Surrogate,
                model: Some(model),
                line: None,
                samples: data.clone(),
                sample_count: 0,
                converged: false,
            });
            self.pairs.push(PairState {
                i,
                j,
                space,
                data,
                candidates,
                done: false,
            });
        }
        Ok(())
    }

    /// `θ` on the unit box and `σ²` for entropy scoring of pair `k`.
    fn entropy_params(&self, k: usize) -> Result<(Vec<f64>, f64)> {
        let model = self.second[k].model.as_ref().expect("pair terms are surrogates");
        if let Some(kr) = model.kriging() {
            return Ok((kr.unit_theta().to_vec(), kr.sigma2()));
        }
        let st = &self.pairs[k];
        let aux = fit_kriging(
            &st.data,
            &st.space,
            &PolynomialBasis::constant(st.space.clone()),
            &self.cfg.surrogate.kriging,
        )?;
        Ok((aux.unit_theta().to_vec(), aux.sigma2()))
    }

    fn refill_candidates(&mut self, k: usize) -> Result<()> {
        let st = &self.pairs[k];
        let xs: Vec<f64> = st.data.points().iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = st.data.points().iter().map(|p| p[1]).collect();
        let grid = build_candidate_grid(&xs, &ys)?;
        let fresh = grid
            .candidates
            .into_iter()
            .filter(|p| !st.data.contains_near(p, DUPLICATE_TOL))
            .collect();
        self.pairs[k].candidates = fresh;
        Ok(())
    }

    fn stage_two(&mut self) -> Step<()> {
        loop {
            let mut active = false;
            for k in 0..self.pairs.len() {
                if self.pairs[k].done {
                    continue;
                }
                if self.second[k].sample_count as usize >= self.cfg.stage2_max {
                    self.pairs[k].done = true;
                    continue;
                }
                if self.pairs[k].candidates.is_empty() {
                    self.refill_candidates(k)?;
                    if self.pairs[k].candidates.is_empty() {
                        self.pairs[k].done = true;
                        continue;
                    }
                }
                active = true;
                let (theta, sigma2) = self.entropy_params(k)?;
                let st = &self.pairs[k];
                let existing: Vec<Vec<f64>> = st.data.points().iter().map(|p| st.space.to_unit(p)).collect();
                let cand_units: Vec<Vec<f64>> = st.candidates.iter().map(|p| st.space.to_unit(p)).collect();
                let choice = max_entropy_select(&existing, &cand_units, &theta, sigma2)?;
                let z = self.pairs[k].candidates.remove(choice.index);
                let (i, j) = (self.pairs[k].i, self.pairs[k].j);

                let x = self.center.plane_point(self.space, i, j, z[0], z[1])?;
                let y = self.eval(&x)?;
                self.second[k].sample_count += 1;
                let base = self.f0 + self.first_pair(i, j, &z)?;
                let f_hat = base + self.second[k].raw_value(&z)?;
                let ok = converged(y, f_hat, self.cfg.epsilon);

                self.pairs[k].data.push(z, y - base)?;
                let key = self.second[k].key;
                let data = self.pairs[k].data.clone();
                let model = self.fit_component(key, &data, &self.pairs[k].space)?;
                let term = &mut self.second[k];
                term.model = Some(model);
                term.samples = data;
                if ok {
                    term.converged = true;
                    self.pairs[k].done = true;
                }
            }
            if !active {
                return Ok(());
            }
        }
    }

    fn finish(&mut self, complete: bool) -> HdmrModel {
        let p = self.space.dim();
        let mut second = std::mem::take(&mut self.second);
        second.sort_by_key(|t| t.key);
        let pairs: Vec<(usize, usize)> = second
            .iter()
            .filter_map(|t| match t.key {
                ComponentKey::Second(i, j) => Some((i, j)),
                _ => None,
            })
            .collect();
        let term_evals: u64 = self.first.iter().chain(&second).map(|t| t.sample_count).sum();
        let f0_evals = u64::from(self.f.count() > self.start_count);
        HdmrModel {
            space: self.space.clone(),
            center: self.center.clone(),
            f0: self.f0,
            first: std::mem::take(&mut self.first),
            second,
            coupling: coupling_matrix(p, &pairs),
            backend: self.cfg.surrogate.backend,
            total_evals: f0_evals + term_evals + self.probe_evals,
            probe_evals: self.probe_evals,
            complete,
        }
    }
}
