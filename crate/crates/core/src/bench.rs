//! Benchmark functions: Rosenbrock, the six accuracy test functions, the
//! cost-growth function and the cantilever limit state.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{BudgetedFunction, DesignSpace, Distribution, Evaluator};
use crate::error::{Error, Result};

/// A named test function on its box.
#[derive(Clone)]
pub struct BenchmarkFunction {
    pub name: String,
    pub space: DesignSpace,
    pub evaluator: Evaluator,
    pub known_minimum: Option<f64>,
    /// Input distributions, when the function comes with them.
    pub distributions: Option<Vec<Distribution>>,
}

impl std::fmt::Debug for BenchmarkFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchmarkFunction")
            .field("name", &self.name)
            .field("dim", &self.space.dim())
            .finish()
    }
}

impl BenchmarkFunction {
    fn new(name: impl Into<String>, space: DesignSpace, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            space,
            evaluator: Arc::new(f),
            known_minimum: None,
            distributions: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok((self.evaluator)(x))
    }

    /// Fresh counted wrapper around the evaluator.
    pub fn budgeted(&self) -> BudgetedFunction {
        BudgetedFunction::from_evaluator(self.dim(), self.evaluator.clone())
    }
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    Ok(())
}

fn rosenbrock_sum(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

/// `Σ_{i=1}^{8} 100(x_{i+1} − x_i²)² + (x_i − 1)²`
pub fn rosenbrock9(x: &[f64]) -> Result<f64> {
    check_len(x, 9)?;
    Ok(rosenbrock_sum(x))
}

pub fn rosenbrock9_function() -> BenchmarkFunction {
    let mut f = BenchmarkFunction::new(
        "rosenbrock9",
        DesignSpace::uniform(9, -2.0, 2.0).expect("valid box"),
        rosenbrock_sum,
    );
    f.known_minimum = Some(0.0);
    f
}

pub const TABLE3_C: [f64; 10] = [
    -6.089, -17.164, -34.054, -5.914, -24.721, -14.986, -24.100, -10.708, -26.662, -22.179,
];

fn t3_no1(x: &[f64]) -> f64 {
    (x[0] + x[1]).sin() + (x[0] - x[1]).powi(2) - 1.5 * x[0] + 2.5 * x[1] + 1.0
}

fn t3_no2(x: &[f64]) -> f64 {
    let a = x[0] / PI;
    (x[1] - 1.275 * a * a - 5.0 * a - 6.0).powi(2) + 10.0 * (1.0 - 0.125 / PI) * x[0].cos()
}

fn t3_no3(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| (w[1] * w[1] - w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

fn t3_no4(x: &[f64]) -> f64 {
    x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - 14.0 * x[0] - 16.0 * x[1]
        + (x[2] - 10.0).powi(2)
        + 4.0 * (x[3] - 5.0).powi(2)
        + (x[4] - 3.0).powi(2)
        + 2.0 * (x[5] - 1.0).powi(2)
        + 5.0 * x[6] * x[6]
        + 7.0 * (x[7] - 11.0).powi(2)
        + 2.0 * (x[8] - 10.0).powi(2)
        + (x[9] - 7.0).powi(2)
        + 45.0
}

fn t3_no5(x: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    x.iter()
        .zip(TABLE3_C)
        .map(|(xi, ci)| xi * (ci + (xi / total).ln()))
        .sum()
}

fn t3_no6(x: &[f64]) -> f64 {
    let mut s = (x[0] - 1.0).powi(2);
    for i in 1..x.len() {
        s += (i + 1) as f64 * (2.0 * x[i] * x[i] - x[i - 1]).powi(2);
    }
    s
}

/// Test function `no` (1 to 6) of the accuracy study on its printed box.
pub fn table3_function(no: usize) -> Result<BenchmarkFunction> {
    let name = format!("table3/{no}");
    let f = match no {
        1 => BenchmarkFunction::new(name, DesignSpace::uniform(2, -3.0, 3.0)?, t3_no1),
        2 => BenchmarkFunction::new(name, DesignSpace::new(vec![-5.0, 0.0], vec![10.0, 15.0])?, t3_no2),
        3 => BenchmarkFunction::new(name, DesignSpace::uniform(8, -3.0, 3.0)?, t3_no3),
        4 => BenchmarkFunction::new(name, DesignSpace::uniform(10, -10.0, 11.0)?, t3_no4),
        5 => BenchmarkFunction::new(name, DesignSpace::uniform(10, 2.1, 9.9)?, t3_no5),
        6 => BenchmarkFunction::new(name, DesignSpace::uniform(16, -5.0, 5.0)?, t3_no6),
        _ => return Err(Error::UnknownFunction(name)),
    };
    Ok(f)
}

fn cost_sum(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| {
            let (a, b) = (w[0] * w[0], w[1] * w[1]);
            a.powf(b + 1.0) + b.powf(a + 1.0)
        })
        .sum()
}

/// `Σ (x_i²)^(x_{i+1}²+1) + (x_{i+1}²)^(x_i²+1)` on `[0, 1]^p`.
pub fn cost_function(p: usize) -> Result<BenchmarkFunction> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("cost function needs p >= 2, got {p}")));
    }
    Ok(BenchmarkFunction::new(format!("cost/{p}"), DesignSpace::uniform(p, 0.0, 1.0)?, cost_sum))
}

/// `1 + p(s−1) + p(p−1)/2·(s−1)²`
pub fn sample_count_formula(p: u64, s: u64) -> u64 {
    let m = s.saturating_sub(1);
    1 + p * m + p * p.saturating_sub(1) * m * m / 2
}

/// Dimensions and evaluation counts reported for the cost study:
/// `(p, PC-Kriging-HDMR, Kriging-HDMR, full expansion)`.
pub const REFERENCE_COSTS: [(u64, u64, u64, u64); 6] = [
    (10, 125, 129, 2276),
    (15, 215, 224, 5251),
    (20, 346, 355, 9451),
    (25, 482, 495, 14876),
    (30, 633, 649, 21526),
    (35, 831, 868, 29401),
];

/// Force inputs are in kN.
pub const NEWTON_PER_KN: f64 = 1e3;
/// The torque input is read in kN·m and converted to N·mm.
pub const NMM_PER_TORQUE_UNIT: f64 = 1e6;

pub const CANTILEVER_NAMES: [&str; 11] = ["t", "d", "L1", "L2", "F1", "F2", "P", "T", "theta1", "theta2", "Sy"];

/// Inputs of the tube cantilever. Lengths in mm, forces in kN, torque in
/// kN·m, angles in rad, strength in MPa.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantileverInputs {
    pub t: f64,
    pub d: f64,
    pub l1: f64,
    pub l2: f64,
    pub f1: f64,
    pub f2: f64,
    pub p: f64,
    pub torque: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sy: f64,
}

impl CantileverInputs {
    pub fn from_slice(x: &[f64]) -> Result<Self> {
        check_len(x, 11)?;
        Ok(Self {
            t: x[0],
            d: x[1],
            l1: x[2],
            l2: x[3],
            f1: x[4],
            f2: x[5],
            p: x[6],
            torque: x[7],
            theta1: x[8],
            theta2: x[9],
            sy: x[10],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.t, self.d, self.l1, self.l2, self.f1, self.f2, self.p, self.torque, self.theta1,
            self.theta2, self.sy,
        ]
    }

    /// Every input at its distribution mean.
    pub fn means() -> Self {
        let m: Vec<f64> = cantilever_distributions().iter().map(Distribution::mean).collect();
        Self::from_slice(&m).expect("11 distributions")
    }
}

/// `G = S_y − √(σ_x² + 3τ_zx²)` in MPa.
pub fn cantilever_g(x: &CantileverInputs) -> Result<f64> {
    if !(x.t > 0.0) || x.d <= 2.0 * x.t {
        return Err(Error::InvalidArgument(format!(
            "tube needs t > 0 and d > 2t (t = {}, d = {})",
            x.t, x.d
        )));
    }
    Ok(g_unchecked(x))
}

fn g_unchecked(x: &CantileverInputs) -> f64 {
    let inner = x.d - 2.0 * x.t;
    let area = PI / 4.0 * (x.d * x.d - inner * inner);
    let inertia = PI / 64.0 * (x.d.powi(4) - inner.powi(4));
    let polar = 2.0 * inertia;
    let moment = (x.f1 * x.l1 * x.theta1.cos() + x.f2 * x.l2 * x.theta2.cos()) * NEWTON_PER_KN;
    let axial = (x.p + x.f1 * x.theta1.sin() + x.f2 * x.theta2.sin()) * NEWTON_PER_KN;
    let sigma = axial / area + moment * x.d / (2.0 * inertia);
    let tau = x.torque * NMM_PER_TORQUE_UNIT * x.d / (2.0 * polar);
    x.sy - (sigma * sigma + 3.0 * tau * tau).sqrt()
}

pub fn cantilever_distributions() -> Vec<Distribution> {
    use Distribution::*;
    vec![
        Normal { mean: 5.0, std: 0.1 },
        Normal { mean: 42.0, std: 0.5 },
        Uniform { lower: 119.75, upper: 120.25 },
        Uniform { lower: 59.75, upper: 60.25 },
        Normal { mean: 3.0, std: 0.3 },
        Normal { mean: 3.0, std: 0.3 },
        Gumbel { mean: 12.0, std: 1.2 },
        Normal { mean: 90.0, std: 9.0 },
        Uniform { lower: -PI / 3.0, upper: PI / 3.0 },
        Uniform { lower: -4.0 * PI / 5.0, upper: 2.0 * PI / 5.0 },
        Normal { mean: 220.0, std: 22.0 },
    ]
}

/// Uniform inputs keep their bounds, the others span mean ± 3 std.
pub fn cantilever_space() -> DesignSpace {
    let (lo, hi): (Vec<f64>, Vec<f64>) = cantilever_distributions()
        .iter()
        .map(Distribution::design_interval)
        .unzip();
    DesignSpace::new(lo, hi).expect("valid box")
}

pub fn cantilever() -> BenchmarkFunction {
    let mut f = BenchmarkFunction::new("cantilever", cantilever_space(), |x| match CantileverInputs::from_slice(x) {
        Ok(v) => cantilever_g(&v).unwrap_or(f64::NAN),
        Err(_) => f64::NAN,
    });
    f.distributions = Some(cantilever_distributions());
    f
}

/// Looks a function up by registry name: `rosenbrock9`, `table3/<1-6>`,
/// `cost/<p>` or `cantilever`.
pub fn lookup(name: &str) -> Result<BenchmarkFunction> {
    if name == "rosenbrock9" {
        return Ok(rosenbrock9_function());
    }
    if name == "cantilever" {
        return Ok(cantilever());
    }
    if let Some(rest) = name.strip_prefix("table3/") {
        let no: usize = rest.parse().map_err(|_| Error::UnknownFunction(name.to_string()))?;
        return table3_function(no);
    }
    if let Some(rest) = name.strip_prefix("cost/") {
        let p: usize = rest.parse().map_err(|_| Error::UnknownFunction(name.to_string()))?;
        return cost_function(p).map_err(|_| Error::UnknownFunction(name.to_string()));
    }
    Err(Error::UnknownFunction(name.to_string()))
}
