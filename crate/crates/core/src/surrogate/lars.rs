//! Least-angle regression used to rank candidate polynomials, followed by a
//! hybrid step that refits each nested active set by ordinary least squares
//! and scores it by leave-one-out error.

use nalgebra::{DMatrix, DVector};

/// Columns whose residual norm after projection onto the active span falls
/// below this fraction of their own norm are treated as collinear.
const COLLINEAR_TOL: f64 = 1e-8;

/// Order in which columns `1..` of `psi` enter the LARS path. Column 0 is the
/// intercept and never participates; at most `max_active` columns are
/// returned.
pub fn lars_order(psi: &DMatrix<f64>, y: &DVector<f64>, max_active: usize) -> Vec<usize> {
    let n = psi.nrows();
    let q = psi.ncols().saturating_sub(1);
    if n == 0 || q == 0 || max_active == 0 {
        return Vec::new();
    }

    // Centered, unit-norm candidate columns.
    let mut x = DMatrix::zeros(n, q);
    let mut usable = vec![true; q];
    for j in 0..q {
        let col = psi.column(j + 1);
        let mean = col.mean();
        let centered = col.map(|v| v - mean);
        let norm = centered.norm();
        if norm <= 1e-12 * (1.0 + col.amax()) {
            usable[j] = false;
            continue;
        }
        x.set_column(j, &(centered / norm));
    }

    let y_mean = y.mean();
    let yc = y.map(|v| v - y_mean);
    let scale = yc.norm();
    if scale == 0.0 {
        return Vec::new();
    }

    let mut residual = yc;
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; q];

    while active.len() < max_active.min(q) {
        let corr = x.transpose() * &residual;

        let mut next: Option<usize> = None;
        let mut best = 0.0;
        for j in 0..q {
            if usable[j] && !in_active[j] && corr[j].abs() > best {
                best = corr[j].abs();
                next = Some(j);
            }
        }
        let Some(j) = next else { break };
        if best <= 1e-12 * scale {
            break;
        }

        if !active.is_empty() && is_collinear(&x, &active, j) {
            usable[j] = false;
            continue;
        }
        active.push(j);
        in_active[j] = true;

        // Equiangular direction over the signed active columns.
        let k = active.len();
        let mut xa = DMatrix::zeros(n, k);
        for (c, &a) in active.iter().enumerate() {
            let s = if corr[a] >= 0.0 { 1.0 } else { -1.0 };
            xa.set_column(c, &(x.column(a) * s));
        }
        let gram = xa.transpose() * &xa;
        let ones = DVector::from_element(k, 1.0);
        let Some(w0) = gram.clone().cholesky().map(|c| c.solve(&ones)) else {
            active.pop();
            in_active[j] = false;
            usable[j] = false;
            continue;
        };
        let norm_const = 1.0 / ones.dot(&w0).sqrt();
        let u = &xa * (w0 * norm_const);
        let a = x.transpose() * &u;
        let c_max = corr[j].abs();

        let mut gamma = c_max / norm_const;
        if active.len() < max_active.min(q) {
            for l in 0..q {
                if !usable[l] || in_active[l] {
                    continue;
                }
                for cand in [
                    (c_max - corr[l]) / (norm_const - a[l]),
                    (c_max + corr[l]) / (norm_const + a[l]),
                ] {
                    if cand.is_finite() && cand > 1e-15 && cand < gamma {
                        gamma = cand;
                    }
                }
            }
        }
        residual -= u * gamma;
    }

    active.into_iter().map(|j| j + 1).collect()
}

fn is_collinear(x: &DMatrix<f64>, active: &[usize], j: usize) -> bool {
    let n = x.nrows();
    let mut xa = DMatrix::zeros(n, active.len());
    for (c, &a) in active.iter().enumerate() {
        xa.set_column(c, &x.column(a));
    }
    let target = x.column(j).into_owned();
    let qr = xa.qr();
    let q = qr.q();
    let proj = &q * (q.transpose() * &target);
    (target - proj).norm() < COLLINEAR_TOL
}

/// Ordinary least squares with the leave-one-out error from the hat matrix.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    /// Mean squared leave-one-out residual; infinite when some point has
    /// unit leverage.
    pub loo: f64,
}

pub fn ols_with_loo(design: &DMatrix<f64>, y: &DVector<f64>) -> Option<OlsFit> {
    let (n, m) = design.shape();
    if m == 0 || n < m {
        return None;
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * diag_max.max(1e-300)) {
        return None;
    }
    let q = qr.q();
    let qty = q.transpose() * y;
    let coef = r.solve_upper_triangular(&qty)?;
    let fitted = design * &coef;

    let mut loo = 0.0;
    for i in 0..n {
        let h = q.row(i).norm_squared();
        let res = y[i] - fitted[i];
        let denom = 1.0 - h;
        if denom <= 1e-10 {
            loo = f64::INFINITY;
            break;
        }
        loo += (res / denom).powi(2);
    }
    Some(OlsFit {
        coefficients: coef.iter().copied().collect(),
        loo: loo / n as f64,
    })
}

/// Result of the hybrid LARS selection.
#[derive(Debug, Clone)]
pub struct HybridSelection {
    /// Entry order of the non-constant columns.
    pub order: Vec<usize>,
    /// How many entries of `order` (after the intercept) were kept.
    pub kept: usize,
    pub coefficients: Vec<f64>,
    pub loo: f64,
}

impl HybridSelection {
    /// Selected column indices: the intercept followed by the kept prefix.
    pub fn columns(&self) -> Vec<usize> {
        std::iter::once(0)
            .chain(self.order[..self.kept].iter().copied())
            .collect()
    }
}

/// Runs LARS on `psi` and keeps the prefix with the smallest leave-one-out
/// error. Ties (within `1e-12` of the response variance) go to the shorter
/// prefix.
pub fn hybrid_lars(psi: &DMatrix<f64>, y: &DVector<f64>) -> Option<HybridSelection> {
    let n = psi.nrows();
    let max_active = n.saturating_sub(2);
    let order = lars_order(psi, y, max_active);

    let mean = y.mean();
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    let tie = 1e-12 * (var + mean * mean) + 1e-300;

    let mut fits = Vec::with_capacity(order.len() + 1);
    for k in 0..=order.len() {
        let cols: Vec<usize> = std::iter::once(0).chain(order[..k].iter().copied()).collect();
        let design = psi.select_columns(&cols);
        fits.push(ols_with_loo(&design, y));
    }
    let best = fits
        .iter()
        .flatten()
        .map(|f| f.loo)
        .fold(f64::INFINITY, f64::min);
    let (kept, fit) = fits
        .into_iter()
        .enumerate()
        .filter_map(|(k, f)| f.map(|f| (k, f)))
        .find(|(_, f)| f.loo <= best + tie || (best.is_infinite() && f.loo.is_infinite()))?;
    Some(HybridSelection {
        order,
        kept,
        coefficients: fit.coefficients,
        loo: fit.loo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strongest_column_enters_first() {
        // y = 3·x2 exactly; x1 is noise-like.
        let xs: [f64; 6] = [-1.0, -0.6, -0.2, 0.3, 0.7, 1.0];
        let psi = DMatrix::from_fn(6, 3, |r, c| match c {
            0 => 1.0,
            1 => (xs[r] * 7.3).sin(),
            _ => xs[r],
        });
        let y = DVector::from_iterator(6, xs.iter().map(|v| 3.0 * v));
        let order = lars_order(&psi, &y, 2);
        assert_eq!(order[0], 2);
    }

    #[test]
    fn loo_of_exact_fit_is_zero() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let psi = DMatrix::from_fn(4, 2, |r, c| if c == 0 { 1.0 } else { xs[r] });
        let y = DVector::from_iterator(4, xs.iter().map(|v| 2.0 * v + 1.0));
        let fit = ols_with_loo(&psi, &y).unwrap();
        assert!(fit.loo < 1e-20);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn loo_matches_explicit_refits() {
        let xs = [0.0, 0.4, 1.1, 1.5, 2.2, 3.0];
        let ys = [1.0, 0.2, 2.0, 1.1, 3.5, 2.9];
        let psi = DMatrix::from_fn(6, 2, |r, c| if c == 0 { 1.0 } else { xs[r] });
        let y = DVector::from_row_slice(&ys);
        let fit = ols_with_loo(&psi, &y).unwrap();

        let mut brute = 0.0;
        for out in 0..6 {
            let keep: Vec<usize> = (0..6).filter(|&r| r != out).collect();
            let d = psi.select_rows(&keep);
            let yy = DVector::from_iterator(5, keep.iter().map(|&r| ys[r]));
            let c = ols_with_loo(&d, &yy).unwrap().coefficients;
            brute += (ys[out] - c[0] - c[1] * xs[out]).powi(2);
        }
        brute /= 6.0;
        assert!((fit.loo - brute).abs() < 1e-12 * brute.max(1.0));
    }
}
