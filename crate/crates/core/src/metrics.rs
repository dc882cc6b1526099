//! Accuracy indices on a validation set: R², RAAE and RMAE.

use serde::{Deserialize, Serialize};

use crate::domain::{DesignSpace, Distribution, RandomStream};
use crate::error::{Error, Result};

pub const DEFAULT_VALIDATION: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub r2: f64,
    pub raae: f64,
    pub rmae: f64,
    pub n_validation: usize,
    /// Sample standard deviation of the true responses (divisor `s − 1`).
    pub std: f64,
}

fn check(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: yhat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::InvalidArgument("need at least 2 validation points".into()));
    }
    Ok(())
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Sample standard deviation with the `s − 1` divisor.
pub fn std_dev(y: &[f64]) -> f64 {
    let m = mean(y);
    (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (y.len() as f64 - 1.0)).sqrt()
}

fn nonzero_std(y: &[f64]) -> Result<f64> {
    let s = std_dev(y);
    if s == 0.0 {
        return Err(Error::ZeroVariance("validation responses are constant"));
    }
    Ok(s)
}

pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    let m = mean(y);
    let total: f64 = y.iter().map(|v| (v - m).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::ZeroVariance("validation responses are constant"));
    }
    let resid: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - resid / total)
}

/// `Σ|f − f̂| / (s·STD)`
pub fn raae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    let s = nonzero_std(y)?;
    let abs: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    Ok(abs / (y.len() as f64 * s))
}

/// `max|f − f̂| / STD`
pub fn rmae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    let s = nonzero_std(y)?;
    let max = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(max / s)
}

pub fn report(y: &[f64], yhat: &[f64]) -> Result<MetricReport> {
    Ok(MetricReport {
        r2: r_squared(y, yhat)?,
        raae: raae(y, yhat)?,
        rmae: rmae(y, yhat)?,
        n_validation: y.len(),
        std: std_dev(y),
    })
}

/// `n` uniform points in the box.
pub fn uniform_draws(space: &DesignSpace, n: usize, stream: &mut RandomStream) -> Vec<Vec<f64>> {
    (0..n).map(|_| space.sample_uniform(stream)).collect()
}

/// `n` points drawn from independent marginals, clipped to the box.
pub fn distribution_draws(
    dists: &[Distribution],
    space: &DesignSpace,
    n: usize,
    stream: &mut RandomStream,
) -> Result<Vec<Vec<f64>>> {
    if dists.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: dists.len(),
        });
    }
    Ok((0..n)
        .map(|_| {
            let mut x: Vec<f64> = dists.iter().map(|d| d.sample_one(stream)).collect();
            space.clip(&mut x);
            x
        })
        .collect())
}

/// Scores `predict` against `truth` on the given points. `truth` is called
/// directly, outside any evaluation counter.
pub fn evaluate_on<P, T>(predict: P, truth: T, points: &[Vec<f64>]) -> Result<MetricReport>
where
    P: Fn(&[f64]) -> Result<f64>,
    T: Fn(&[f64]) -> f64,
{
    let y: Vec<f64> = points.iter().map(|x| truth(x)).collect();
    let yhat = points.iter().map(|x| predict(x)).collect::<Result<Vec<_>>>()?;
    report(&y, &yhat)
}

/// Uniform validation in the box.
pub fn evaluate_model<P, T>(
    predict: P,
    truth: T,
    space: &DesignSpace,
    n: usize,
    stream: &mut RandomStream,
) -> Result<MetricReport>
where
    P: Fn(&[f64]) -> Result<f64>,
    T: Fn(&[f64]) -> f64,
{
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 validation points".into()));
    }
    evaluate_on(predict, truth, &uniform_draws(space, n, stream))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_case() {
        let y = [1.0, 2.0, 3.0];
        let yhat = [1.0, 2.0, 4.0];
        assert!((r_squared(&y, &yhat).unwrap() - 0.5).abs() < 1e-15);
        assert!((raae(&y, &yhat).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((rmae(&y, &yhat).unwrap() - 1.0).abs() < 1e-15);
        let shifted = [3.0, 4.0, 5.0];
        assert!((raae(&y, &shifted).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_and_mean_predictors() {
        let y = [0.3, -1.2, 4.5, 2.2];
        let r = report(&y, &y).unwrap();
        assert_eq!((r.r2, r.raae, r.rmae), (1.0, 0.0, 0.0));
        let m = mean(&y);
        assert!(r_squared(&y, &[m; 4]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_truth_rejected() {
        assert!(matches!(r_squared(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance(_))));
        assert!(raae(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(r_squared(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn validation_does_not_touch_counters() {
        let space = DesignSpace::uniform(2, 0.0, 1.0).unwrap();
        let f = crate::domain::BudgetedFunction::new(2, |x| x[0] + x[1]);
        let mut s = RandomStream::new(3);
        let r = evaluate_model(|x| Ok(x[0] + x[1]), |x| x[0] + x[1], &space, 100, &mut s).unwrap();
        assert_eq!(r.r2, 1.0);
        assert_eq!(f.count(), 0);
    }
}
