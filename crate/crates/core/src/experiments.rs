//! Experiment drivers behind the command-line tool: coupling detection, the
//! `C` sweep, accuracy comparison, cost growth, the cantilever study and its
//! sensitivity ranking.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{self, BenchmarkFunction};
use crate::domain::{RandomStream, SampleSet};
use crate::error::{Error, Result};
use crate::hdmr::{build, BuildConfig, HdmrModel};
use crate::metrics::{self, MetricReport};
use crate::sensitivity::{self, SensitivityReport};
use crate::surrogate::{fit_kriging, Backend, KrigingModel, KrigingOptions, PolynomialBasis};

/// Modeling method compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PcKrigingHdmr,
    KrigingHdmr,
    PceHdmr,
    KrigingFull,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::PcKrigingHdmr,
        Method::KrigingHdmr,
        Method::PceHdmr,
        Method::KrigingFull,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::PcKrigingHdmr => "pc-kriging-hdmr",
            Method::KrigingHdmr => "kriging-hdmr",
            Method::PceHdmr => "pce-hdmr",
            Method::KrigingFull => "kriging-full",
        }
    }

    pub fn backend(&self) -> Option<Backend> {
        match self {
            Method::PcKrigingHdmr => Some(Backend::PcKriging),
            Method::KrigingHdmr => Some(Backend::Kriging),
            Method::PceHdmr => Some(Backend::Pce),
            Method::KrigingFull => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// A fitted predictor of either kind.
#[derive(Debug, Clone)]
pub enum Fitted {
    Hdmr(HdmrModel),
    Full(KrigingModel),
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            Fitted::Hdmr(m) => m.predict(x),
            Fitted::Full(m) => m.predict_mean(x),
        }
    }
}

/// Latin hypercube design of `n` points in the box.
pub fn latin_hypercube(space: &crate::domain::DesignSpace, n: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    let p = space.dim();
    let mut pts = vec![vec![0.0; p]; n];
    for d in 0..p {
        let mut perm: Vec<usize> = (0..n).collect();
        for k in (1..n).rev() {
            perm.swap(k, stream.index(k + 1));
        }
        let (lo, hi) = space.bounds(d);
        for (row, &cell) in pts.iter_mut().zip(&perm) {
            let u = (cell as f64 + stream.next_f64()) / n as f64;
            row[d] = lo + (hi - lo) * u;
        }
    }
    pts
}

/// Ordinary Kriging on a Latin hypercube of `n` points over the whole box.
pub fn fit_full_kriging(func: &BenchmarkFunction, n: usize, seed: u64) -> Result<KrigingModel> {
    let mut stream = RandomStream::new(seed).substream(7);
    let f = func.budgeted();
    let mut data = SampleSet::new();
    for x in latin_hypercube(&func.space, n, &mut stream) {
        let y = f.evaluate(&x)?;
        data.push(x, y)?;
    }
    fit_kriging(&data, &func.space, &PolynomialBasis::constant(func.space.clone()), &KrigingOptions::default())
}

/// Builds an HDMR model of `func` with the given settings.
pub fn fit_hdmr(func: &BenchmarkFunction, cfg: &BuildConfig) -> Result<HdmrModel> {
    build(&func.budgeted(), &func.space, None, cfg)
}

/// Shared settings of an experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    pub methods: Vec<Method>,
    /// Replicate count; each experiment has its own default.
    pub replicates: Option<usize>,
    pub seed: u64,
    pub build: BuildConfig,
    pub validation: usize,
    /// Evaluation caps for the cantilever study.
    pub budgets: Vec<u64>,
    /// Proportional coefficients for the sweep.
    pub c_values: Vec<f64>,
    /// Dimensions of the cost study.
    pub dims: Vec<usize>,
    pub mc_samples: usize,
    /// Record wall times; turned off for byte-identical reruns.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            functions: Vec::new(),
            methods: Vec::new(),
            replicates: None,
            seed: 0,
            build: BuildConfig::default(),
            validation: metrics::DEFAULT_VALIDATION,
            budgets: vec![101, 1001],
            c_values: (1..=9).map(|k| k as f64 / 10.0).collect(),
            dims: vec![10, 15, 20, 25, 30, 35],
            mc_samples: sensitivity::DEFAULT_SAMPLES,
            timing: true,
        }
    }
}

impl ExperimentConfig {
    /// Hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Rejects unknown function names before anything is evaluated.
    pub fn check_functions(&self) -> Result<Vec<BenchmarkFunction>> {
        self.functions.iter().map(|n| bench::lookup(n)).collect()
    }

    fn seed_for(&self, replicate: usize) -> u64 {
        self.seed.wrapping_add(replicate as u64)
    }
}

/// One accuracy measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub row: String,
    pub function: String,
    pub method: String,
    pub p: usize,
    pub c: f64,
    pub budget: Option<u64>,
    pub samples: u64,
    pub r2: f64,
    pub raae: f64,
    pub rmae: f64,
    pub seed: u64,
    pub wall_ms: f64,
    pub config_hash: String,
}

impl MetricRow {
    pub const HEADER: &'static str = "row,function,method,p,C,budget,samples,r2,raae,rmae,seed,wall_ms,config_hash";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.row,
            self.function,
            self.method,
            self.p,
            self.c,
            self.budget.map_or(String::new(), |b| b.to_string()),
            self.samples,
            self.r2,
            self.raae,
            self.rmae,
            self.seed,
            self.wall_ms,
            self.config_hash
        )
    }

    fn sort_key(&self) -> (String, String, String, u64, u64, u64) {
        (
            self.row.clone(),
            self.function.clone(),
            self.method.clone(),
            (self.c * 1e6).round() as u64,
            self.budget.unwrap_or(0),
            self.seed,
        )
    }
}

pub fn sort_rows(rows: &mut [MetricRow]) {
    rows.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

fn elapsed_ms(start: Instant, timing: bool) -> f64 {
    if timing {
        (start.elapsed().as_secs_f64() * 1e3 * 1000.0).round() / 1000.0
    } else {
        0.0
    }
}

/// Builds with `method`, scores on uniform validation points, and reports
/// the cost in true-function evaluations. `full_n` fixes the design size
/// of the full Kriging baseline.
pub fn measure(
    func: &BenchmarkFunction,
    method: Method,
    build_cfg: &BuildConfig,
    full_n: Option<usize>,
    validation: &[Vec<f64>],
) -> Result<(MetricReport, u64, Fitted)> {
    let fitted = match method.backend() {
        Some(backend) => {
            let mut cfg = *build_cfg;
            cfg.surrogate.backend = backend;
            Fitted::Hdmr(fit_hdmr(func, &cfg)?)
        }
        None => {
            let n = full_n.ok_or_else(|| {
                Error::InvalidArgument("kriging-full needs a design size".into())
            })?;
            Fitted::Full(fit_full_kriging(func, n, build_cfg.seed)?)
        }
    };
    let samples = match &fitted {
        Fitted::Hdmr(m) => m.total_evals,
        Fitted::Full(m) => m.training().len() as u64,
    };
    let report = metrics::evaluate_on(|x| fitted.predict(x), |x| (func.evaluator)(x), validation)?;
    Ok((report, samples, fitted))
}

fn metric_row(
    row: &str,
    func: &BenchmarkFunction,
    method: Method,
    c: f64,
    budget: Option<u64>,
    samples: u64,
    r: &MetricReport,
    seed: u64,
    wall_ms: f64,
    hash: &str,
) -> MetricRow {
    MetricRow {
        row: row.into(),
        function: func.name.clone(),
        method: method.as_str().into(),
        p: func.dim(),
        c,
        budget,
        samples,
        r2: r.r2,
        raae: r.raae,
        rmae: r.rmae,
        seed,
        wall_ms,
        config_hash: hash.into(),
    }
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Coupling matrix of the first configured function (Rosenbrock by default).
pub fn run_coupling(cfg: &ExperimentConfig) -> Result<(String, Vec<Vec<bool>>)> {
    let name = cfg.functions.first().map_or("rosenbrock9", String::as_str);
    let func = bench::lookup(name)?;
    let mut b = cfg.build;
    b.seed = cfg.seed;
    let m = fit_hdmr(&func, &b)?;
    Ok((func.name, m.coupling))
}

/// `replicates` builds per `C` value, each validated on its own seeded
/// uniform sample; returns replicate rows followed by per-`C` medians.
pub fn run_c_sweep(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let name = cfg.functions.first().map_or("rosenbrock9", String::as_str);
    let func = bench::lookup(name)?;
    let hash = cfg.hash();
    let jobs: Vec<(f64, usize)> = cfg
        .c_values
        .iter()
        .flat_map(|&c| (0..cfg.replicates.unwrap_or(10)).map(move |r| (c, r)))
        .collect();
    let mut rows: Vec<MetricRow> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let seed = cfg.seed_for(r);
            let mut b = cfg.build;
            b.c = c;
            b.seed = seed;
            let validation = metrics::uniform_draws(&func.space, cfg.validation, &mut RandomStream::new(seed).substream(1));
            let start = Instant::now();
            let (rep, samples, _) = measure(&func, Method::PcKrigingHdmr, &b, None, &validation)?;
            Ok(metric_row("replicate", &func, Method::PcKrigingHdmr, c, None, samples, &rep, seed, elapsed_ms(start, cfg.timing), &hash))
        })
        .collect::<Result<_>>()?;
    sort_rows(&mut rows);

    for &c in &cfg.c_values {
        let of_c: Vec<&MetricRow> = rows.iter().filter(|r| r.row == "replicate" && r.c == c).collect();
        let pick = |f: fn(&MetricRow) -> f64| median(&mut of_c.iter().map(|r| f(r)).collect::<Vec<_>>());
        let rep = MetricReport {
            r2: pick(|r| r.r2),
            raae: pick(|r| r.raae),
            rmae: pick(|r| r.rmae),
            n_validation: cfg.validation,
            std: 0.0,
        };
        let samples = pick(|r| r.samples as f64).round() as u64;
        let wall = pick(|r| r.wall_ms);
        rows.push(metric_row("median", &func, Method::PcKrigingHdmr, c, None, samples, &rep, cfg.seed, wall, &hash));
    }
    Ok(rows)
}

/// Every configured function against every configured method. The full
/// Kriging baseline gets as many points as the PC-Kriging-HDMR build used.
pub fn run_accuracy(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let funcs = cfg.check_functions()?;
    let hash = cfg.hash();
    let methods = if cfg.methods.is_empty() { Method::ALL.to_vec() } else { cfg.methods.clone() };
    let mut rows = Vec::new();
    for func in &funcs {
        let per_rep: Vec<Vec<MetricRow>> = (0..cfg.replicates.unwrap_or(1))
            .into_par_iter()
            .map(|r| {
                let seed = cfg.seed_for(r);
                let mut b = cfg.build;
                b.seed = seed;
                let validation = metrics::uniform_draws(&func.space, cfg.validation, &mut RandomStream::new(seed).substream(1));
                let mut out = Vec::new();
                let mut reference: Option<u64> = None;
                let mut order = methods.clone();
                order.sort();
                for method in order {
                    if method == Method::KrigingFull && reference.is_none() {
                        let (_, n, _) = measure(func, Method::PcKrigingHdmr, &b, None, &validation)?;
                        reference = Some(n);
                    }
                    let start = Instant::now();
                    let (rep, samples, _) = measure(func, method, &b, reference.map(|n| n as usize), &validation)?;
                    if method == Method::PcKrigingHdmr {
                        reference = Some(samples);
                    }
                    out.push(metric_row("result", func, method, b.c, None, samples, &rep, seed, elapsed_ms(start, cfg.timing), &hash));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        rows.extend(per_rep.into_iter().flatten());
    }
    sort_rows(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub p: usize,
    pub method: String,
    pub measured: u64,
    pub reference: Option<u64>,
    pub full_expansion: u64,
    pub seed: u64,
    pub config_hash: String,
}

impl CostRow {
    pub const HEADER: &'static str = "p,method,measured,reference,full_expansion,seed,config_hash";

    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.p,
            self.method,
            self.measured,
            self.reference.map_or(String::new(), |r| r.to_string()),
            self.full_expansion,
            self.seed,
            self.config_hash
        )
    }
}

/// Evaluation counts on the cost function for each dimension.
pub fn run_cost(cfg: &ExperimentConfig) -> Result<Vec<CostRow>> {
    let hash = cfg.hash();
    let methods: Vec<Method> = if cfg.methods.is_empty() {
        vec![Method::PcKrigingHdmr]
    } else {
        cfg.methods.iter().copied().filter(|m| m.backend().is_some()).collect()
    };
    let jobs: Vec<(usize, Method)> = cfg
        .dims
        .iter()
        .flat_map(|&p| methods.iter().map(move |&m| (p, m)))
        .collect();
    let mut rows: Vec<CostRow> = jobs
        .par_iter()
        .map(|&(p, method)| {
            let func = bench::cost_function(p)?;
            let mut b = cfg.build;
            b.seed = cfg.seed;
            b.surrogate.backend = method.backend().expect("HDMR method");
            let m = fit_hdmr(&func, &b)?;
            let reference = bench::REFERENCE_COSTS.iter().find(|r| r.0 as usize == p).and_then(|r| match method {
                Method::PcKrigingHdmr => Some(r.1),
                Method::KrigingHdmr => Some(r.2),
                _ => None,
            });
            Ok(CostRow {
                p,
                method: method.as_str().into(),
                measured: m.total_evals,
                reference,
                full_expansion: bench::sample_count_formula(p as u64, 8),
                seed: cfg.seed,
                config_hash: hash.clone(),
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| (a.p, &a.method).cmp(&(b.p, &b.method)));
    Ok(rows)
}

/// HDMR backends on the cantilever at each evaluation cap, validated on
/// points drawn from the input distributions.
pub fn run_cantilever(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    let func = bench::cantilever();
    let dists = func.distributions.clone().expect("cantilever has distributions");
    let hash = cfg.hash();
    let methods: Vec<Method> = if cfg.methods.is_empty() {
        vec![Method::PceHdmr, Method::KrigingHdmr, Method::PcKrigingHdmr]
    } else {
        cfg.methods.iter().copied().filter(|m| m.backend().is_some()).collect()
    };
    let mut jobs = Vec::new();
    for r in 0..cfg.replicates.unwrap_or(5) {
        for &budget in &cfg.budgets {
            for &m in &methods {
                jobs.push((r, budget, m));
            }
        }
    }
    let mut rows: Vec<MetricRow> = jobs
        .par_iter()
        .map(|&(r, budget, method)| {
            let seed = cfg.seed_for(r);
            let validation = metrics::distribution_draws(&dists, &func.space, cfg.validation, &mut RandomStream::new(seed).substream(1))?;
            let mut b = cfg.build;
            b.seed = seed;
            b.max_evals = Some(budget);
            let start = Instant::now();
            let (rep, samples, _) = measure(&func, method, &b, None, &validation)?;
            Ok(metric_row("result", &func, method, b.c, Some(budget), samples, &rep, seed, elapsed_ms(start, cfg.timing), &hash))
        })
        .collect::<Result<_>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

/// Sensitivity indices of a PC-Kriging-HDMR cantilever model built under the
/// largest configured cap.
pub fn run_sensitivity(cfg: &ExperimentConfig) -> Result<(HdmrModel, SensitivityReport)> {
    let func = bench::cantilever();
    let dists = func.distributions.clone().expect("cantilever has distributions");
    let mut b = cfg.build;
    b.seed = cfg.seed;
    b.surrogate.backend = Backend::PcKriging;
    b.max_evals = cfg.budgets.iter().copied().max();
    let m = fit_hdmr(&func, &b)?;
    let report = sensitivity::indices(&m, &dists, cfg.mc_samples, &RandomStream::new(cfg.seed).substream(2))?;
    Ok((m, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!(matches!("svr-hdmr".parse::<Method>(), Err(Error::UnknownMethod(_))));
    }

    #[test]
    fn lhs_stratifies_each_axis() {
        let space = crate::domain::DesignSpace::uniform(3, 0.0, 1.0).unwrap();
        let pts = latin_hypercube(&space, 10, &mut RandomStream::new(4));
        for d in 0..3 {
            let mut cells: Vec<usize> = pts.iter().map(|x| (x[d] * 10.0) as usize).collect();
            cells.sort();
            assert_eq!(cells, (0..10).collect::<Vec<_>>());
        }
    }

    #[test]
    fn hash_changes_with_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed = 9;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash(), a.clone().hash());
    }
}
