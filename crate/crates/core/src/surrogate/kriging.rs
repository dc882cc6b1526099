//! Universal Kriging with a Gaussian correlation kernel.
//!
//! Inputs are mapped onto the unit box before distances are taken, so the
//! correlation lengths `θ` are comparable across components. Hyperparameters
//! maximize the concentrated log-likelihood `-½[N ln σ̂² + ln|R|]`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::PolynomialBasis;
use super::lars::ols_with_loo;
use crate::domain::{DesignSpace, SampleSet};
use crate::error::{Error, Result};

pub const NUGGET_START: f64 = 1e-10;
pub const NUGGET_MAX: f64 = 1e-4;

/// Squared unit-box distance below which two points count as coincident.
const COINCIDENT_SQ: f64 = 1e-28;

/// Bounds and effort of the `θ` search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrigingOptions {
    pub theta_lower: f64,
    pub theta_upper: f64,
    /// Log-spaced starting values per dimension.
    pub starts: usize,
    /// Coordinate-wise golden-section sweeps after the grid.
    pub sweeps: usize,
}

impl Default for KrigingOptions {
    fn default() -> Self {
        Self {
            theta_lower: 1e-3,
            theta_upper: 1e3,
            starts: 10,
            sweeps: 2,
        }
    }
}

impl KrigingOptions {
    fn validate(&self) -> Result<()> {
        if !(self.theta_lower > 0.0 && self.theta_upper > self.theta_lower) {
            return Err(Error::InvalidArgument(format!(
                "theta bounds [{}, {}]",
                self.theta_lower, self.theta_upper
            )));
        }
        if self.starts == 0 {
            return Err(Error::InvalidArgument("starts must be >= 1".into()));
        }
        Ok(())
    }

    /// Starting points in log10 space: the full tensor grid for one or two
    /// dimensions, the isotropic diagonal beyond that.
    pub fn start_grid(&self, dim: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = (self.theta_lower.log10(), self.theta_upper.log10());
        let n = self.starts;
        let axis: Vec<f64> = (0..n)
            .map(|k| if n == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect();
        if dim <= 2 {
            let mut grid = vec![Vec::new()];
            for _ in 0..dim {
                grid = grid
                    .into_iter()
                    .flat_map(|g| {
                        axis.iter().map(move |&a| {
                            let mut next = g.clone();
                            next.push(a);
                            next
                        })
                    })
                    .collect();
            }
            grid
        } else {
            axis.iter().map(|&a| vec![a; dim]).collect()
        }
    }
}

/// The immutable description of a fitted model; everything else is derived
/// from it deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingDoc {
    pub space: DesignSpace,
    pub trend: PolynomialBasis,
    pub training: SampleSet,
    pub theta: Vec<f64>,
    pub nugget: f64,
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub log_likelihood: Option<f64>,
}

#[derive(Debug, Clone)]
struct Factors {
    chol: Cholesky<f64, Dyn>,
    /// Cholesky factor of `FᵀR⁻¹F`.
    gram: Cholesky<f64, Dyn>,
    /// `R⁻¹F`
    rinv_f: DMatrix<f64>,
    /// `R⁻¹(y − Fβ)`
    alpha: DVector<f64>,
}

/// Fitted Kriging predictor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KrigingDoc", into = "KrigingDoc")]
pub struct KrigingModel {
    doc: KrigingDoc,
    units: Vec<Vec<f64>>,
    factors: Option<Factors>,
}

impl From<KrigingModel> for KrigingDoc {
    fn from(m: KrigingModel) -> Self {
        m.doc
    }
}

impl TryFrom<KrigingDoc> for KrigingModel {
    type Error = Error;
    fn try_from(doc: KrigingDoc) -> Result<Self> {
        KrigingModel::assemble(doc)
    }
}

impl PartialEq for KrigingModel {
    fn eq(&self, other: &Self) -> bool {
        self.doc == other.doc
    }
}

pub(crate) fn correlation_matrix(units: &[Vec<f64>], theta: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = units.len();
    let mut r = DMatrix::identity(n, n);
    for i in 0..n {
        r[(i, i)] = 1.0 + nugget;
        for j in 0..i {
            let v = gauss(&units[i], &units[j], theta);
            r[(i, j)] = v;
            r[(j, i)] = v;
        }
    }
    r
}

/// `exp(-Σ θ_k (a_k − b_k)²)`
pub fn gauss(a: &[f64], b: &[f64], theta: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(theta)
        .map(|((x, y), t)| t * (x - y) * (x - y))
        .sum();
    (-s).exp()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cholesky of `R + nugget·I`, escalating the nugget tenfold from
/// `start` on failure.
pub(crate) fn factor_with_escalation(
    units: &[Vec<f64>],
    theta: &[f64],
    start: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut nugget = start;
    loop {
        if let Some(c) = correlation_matrix(units, theta, nugget).cholesky() {
            if c.l_dirty().diagonal().iter().all(|d| d.is_finite() && *d > 0.0) {
                return Ok((c, nugget));
            }
        }
        if nugget >= NUGGET_MAX {
            return Err(Error::SingularCorrelation(nugget));
        }
        nugget = (nugget * 10.0).min(NUGGET_MAX);
    }
}

struct Gls {
    beta: DVector<f64>,
    sigma2: f64,
    log_det: f64,
    factors: Factors,
}

fn gls(chol: Cholesky<f64, Dyn>, f: &DMatrix<f64>, y: &DVector<f64>) -> Option<Gls> {
    let n = y.len();
    let rinv_f = chol.solve(f);
    let gram = (f.transpose() * &rinv_f).cholesky()?;
    let rinv_y = chol.solve(y);
    let beta = gram.solve(&(f.transpose() * rinv_y));
    let resid = y - f * &beta;
    let alpha = chol.solve(&resid);
    let sigma2 = (resid.dot(&alpha) / n as f64).max(0.0);
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Some(Gls {
        beta,
        sigma2,
        log_det,
        factors: Factors {
            chol,
            gram,
            rinv_f,
            alpha,
        },
    })
}

fn likelihood(n: usize, sigma2: f64, log_det: f64) -> f64 {
    -0.5 * (n as f64 * sigma2.max(1e-300).ln() + log_det)
}

struct Prepared {
    units: Vec<Vec<f64>>,
    f: DMatrix<f64>,
    y: DVector<f64>,
}

fn prepare(space: &DesignSpace, trend: &PolynomialBasis, data: &SampleSet) -> Result<Prepared> {
    if data.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: data.dim(),
        });
    }
    if trend.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: trend.dim(),
        });
    }
    Ok(Prepared {
        units: data.points().iter().map(|x| space.to_unit(x)).collect(),
        f: trend.design_matrix(data.points()),
        y: DVector::from_column_slice(data.responses()),
    })
}

/// The objective maximized over `θ`, with the same nugget handling as the fit.
/// `None` when the correlation matrix cannot be factorized or the trend is
/// rank deficient.
pub fn concentrated_log_likelihood(
    space: &DesignSpace,
    trend: &PolynomialBasis,
    data: &SampleSet,
    theta: &[f64],
) -> Option<f64> {
    let p = prepare(space, trend, data).ok()?;
    ll_at(&p, theta)
}

fn ll_at(p: &Prepared, theta: &[f64]) -> Option<f64> {
    let (chol, _) = factor_with_escalation(&p.units, theta, NUGGET_START).ok()?;
    let g = gls(chol, &p.f, &p.y)?;
    Some(likelihood(p.y.len(), g.sigma2, g.log_det))
}

fn ll_log10(p: &Prepared, log_theta: &[f64]) -> f64 {
    let theta: Vec<f64> = log_theta.iter().map(|v| 10f64.powf(*v)).collect();
    ll_at(p, &theta).filter(|v| v.is_finite()).unwrap_or(f64::NEG_INFINITY)
}

/// Fits a Kriging model whose trend is spanned by `trend`.
pub fn fit_kriging(
    data: &SampleSet,
    space: &DesignSpace,
    trend: &PolynomialBasis,
    opts: &KrigingOptions,
) -> Result<KrigingModel> {
    opts.validate()?;
    let n = data.len();
    if n < 2 {
        return Err(Error::DegenerateData(format!("need at least 2 points, got {n}")));
    }
    if trend.is_empty() {
        return Err(Error::InvalidArgument("empty trend basis".into()));
    }
    if n < trend.len() {
        return Err(Error::DegenerateData(format!(
            "{n} points for {} trend functions",
            trend.len()
        )));
    }
    let p = prepare(space, trend, data)?;
    let dim = space.dim();

    // The trend alone reproduces the data: no stochastic part left to fit.
    if let Some(ols) = ols_with_loo(&p.f, &p.y) {
        let fitted = &p.f * DVector::from_vec(ols.coefficients.clone());
        let scale = 1.0 + p.y.amax();
        if (&p.y - fitted).amax() <= 1e-10 * scale {
            return KrigingModel::assemble(KrigingDoc {
                space: space.clone(),
                trend: trend.clone(),
                training: data.clone(),
                theta: vec![opts.theta_upper; dim],
                nugget: NUGGET_START,
                degenerate: true,
                beta: ols.coefficients,
                sigma2: 0.0,
                log_likelihood: None,
            });
        }
    }

    let grid = opts.start_grid(dim);
    let scores: Vec<f64> = grid.par_iter().map(|g| ll_log10(&p, g)).collect();
    let mut best_idx = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s > scores[best_idx] {
            best_idx = k;
        }
    }
    let mut best = grid[best_idx].clone();
    let mut best_ll = scores[best_idx];
    if !best_ll.is_finite() {
        return Err(Error::SingularCorrelation(NUGGET_MAX));
    }

    let (lo, hi) = (opts.theta_lower.log10(), opts.theta_upper.log10());
    let step = if opts.starts > 1 { (hi - lo) / (opts.starts - 1) as f64 } else { hi - lo };
    for _ in 0..opts.sweeps {
        for k in 0..dim {
            let a = (best[k] - step).max(lo);
            let b = (best[k] + step).min(hi);
            let (x, v) = golden_section(a, b, |t| {
                let mut trial = best.clone();
                trial[k] = t;
                ll_log10(&p, &trial)
            });
            if v > best_ll {
                best[k] = x;
                best_ll = v;
            }
        }
    }

    let theta: Vec<f64> = best.iter().map(|v| 10f64.powf(*v)).collect();
    let (_, nugget) = factor_with_escalation(&p.units, &theta, NUGGET_START)?;
    KrigingModel::assemble(KrigingDoc {
        space: space.clone(),
        trend: trend.clone(),
        training: data.clone(),
        theta,
        nugget,
        degenerate: false,
        beta: Vec::new(),
        sigma2: 0.0,
        log_likelihood: Some(best_ll),
    })
}

/// Maximizes `f` on `[a, b]`; returns the best abscissa seen and its value.
fn golden_section(mut a: f64, mut b: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..14 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

impl KrigingModel {
    /// Rebuilds every derived quantity from `doc`.
    pub fn assemble(mut doc: KrigingDoc) -> Result<Self> {
        let p = prepare(&doc.space, &doc.trend, &doc.training)?;
        if doc.theta.len() != doc.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: doc.space.dim(),
                got: doc.theta.len(),
            });
        }
        if doc.theta.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("theta must be positive".into()));
        }
        if doc.degenerate {
            if doc.beta.len() != doc.trend.len() {
                let ols = ols_with_loo(&p.f, &p.y)
                    .ok_or_else(|| Error::DegenerateData("rank-deficient trend".into()))?;
                doc.beta = ols.coefficients;
            }
            doc.sigma2 = 0.0;
            return Ok(Self {
                doc,
                units: p.units,
                factors: None,
            });
        }
        let chol = correlation_matrix(&p.units, &doc.theta, doc.nugget)
            .cholesky()
            .ok_or(Error::SingularCorrelation(doc.nugget))?;
        let g = gls(chol, &p.f, &p.y)
            .ok_or_else(|| Error::DegenerateData("rank-deficient trend".into()))?;
        doc.beta = g.beta.iter().copied().collect();
        doc.sigma2 = g.sigma2;
        doc.log_likelihood = Some(likelihood(p.y.len(), g.sigma2, g.log_det));
        Ok(Self {
            doc,
            units: p.units,
            factors: Some(g.factors),
        })
    }

    pub fn doc(&self) -> &KrigingDoc {
        &self.doc
    }

    pub fn dim(&self) -> usize {
        self.doc.space.dim()
    }

    pub fn space(&self) -> &DesignSpace {
        &self.doc.space
    }

    pub fn trend(&self) -> &PolynomialBasis {
        &self.doc.trend
    }

    pub fn training(&self) -> &SampleSet {
        &self.doc.training
    }

    pub fn theta(&self) -> &[f64] {
        &self.doc.theta
    }

    pub fn beta(&self) -> &[f64] {
        &self.doc.beta
    }

    pub fn sigma2(&self) -> f64 {
        self.doc.sigma2
    }

    pub fn nugget(&self) -> f64 {
        self.doc.nugget
    }

    pub fn is_degenerate(&self) -> bool {
        self.doc.degenerate
    }

    /// Objective value at the fitted `θ`; `None` for a degenerate fit.
    pub fn log_likelihood(&self) -> Option<f64> {
        if self.doc.degenerate {
            None
        } else {
            self.doc.log_likelihood
        }
    }

    /// `θ` expressed on the unit box.
    pub fn unit_theta(&self) -> &[f64] {
        &self.doc.theta
    }

    /// Training points mapped onto the unit box.
    pub fn unit_points(&self) -> &[Vec<f64>] {
        &self.units
    }

    fn trend_value(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let f = self.doc.trend.evaluate(x);
        let t = f.iter().zip(&self.doc.beta).map(|(a, b)| a * b).sum();
        (f, t)
    }

    fn corr_vector(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.units.len(),
            self.units.iter().map(|v| {
                if sq_dist(u, v) <= COINCIDENT_SQ {
                    1.0 + self.doc.nugget
                } else {
                    gauss(u, v, &self.doc.theta)
                }
            }),
        )
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let (_, t) = self.trend_value(x);
        Ok(match &self.factors {
            None => t,
            Some(fac) => t + self.corr_vector(&self.doc.space.to_unit(x)).dot(&fac.alpha),
        })
    }

    /// BLUP mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let (f, t) = self.trend_value(x);
        let Some(fac) = &self.factors else {
            return Ok((t, 0.0));
        };
        let r = self.corr_vector(&self.doc.space.to_unit(x));
        let mean = t + r.dot(&fac.alpha);
        let rinv_r = fac.chol.solve(&r);
        let u = fac.rinv_f.transpose() * &r - DVector::from_vec(f);
        let c = 1.0 - r.dot(&rinv_r) + u.dot(&fac.gram.solve(&u));
        Ok((mean, (self.doc.sigma2 * c).max(0.0)))
    }

    /// Leave-one-out errors `α_i / Q_ii` with
    /// `Q = R⁻¹ − R⁻¹F(FᵀR⁻¹F)⁻¹FᵀR⁻¹`; the mean of their squares is
    /// returned. Degenerate fits fall back to the least-squares formula.
    pub fn loo_error(&self) -> f64 {
        let Some(fac) = &self.factors else {
            let f = self.doc.trend.design_matrix(self.doc.training.points());
            let y = DVector::from_column_slice(self.doc.training.responses());
            return ols_with_loo(&f, &y).map_or(f64::INFINITY, |o| o.loo);
        };
        let n = self.units.len();
        let rinv = fac.chol.inverse();
        let q = &rinv - &fac.rinv_f * fac.gram.solve(&fac.rinv_f.transpose());
        let mut total = 0.0;
        for i in 0..n {
            let qii = q[(i, i)];
            if qii <= 0.0 {
                return f64::INFINITY;
            }
            total += (fac.alpha[i] / qii).powi(2);
        }
        total / n as f64
    }
}
