//! Kriging with a sparse polynomial-chaos trend.

use serde::{Deserialize, Serialize};

use super::basis::{MultiIndex, PolynomialBasis};
use super::kriging::{fit_kriging, KrigingModel, KrigingOptions};
use super::pce::{fit_pce, PceModel};
use crate::domain::{DesignSpace, SampleSet};
use crate::error::{Error, Result};

/// How the polynomial trend is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcMode {
    /// Take the LARS selection as is and fit one Kriging model.
    #[default]
    Spc,
    /// Grow the trend along the LARS order and keep the Kriging model with
    /// the smallest leave-one-out error.
    Opc,
}

impl std::str::FromStr for PcMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spc" => Ok(PcMode::Spc),
            "opc" => Ok(PcMode::Opc),
            other => Err(Error::InvalidArgument(format!("unknown PC-Kriging mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcKrigingConfig {
    pub mode: PcMode,
    /// Candidate total degree; `None` picks 10, 5 or 3 for 1, 2 or more inputs.
    pub max_degree: Option<u32>,
    pub kriging: KrigingOptions,
}

impl Default for PcKrigingConfig {
    fn default() -> Self {
        Self {
            mode: PcMode::Spc,
            max_degree: None,
            kriging: KrigingOptions::default(),
        }
    }
}

pub fn default_max_degree(dim: usize) -> u32 {
    match dim {
        1 => 10,
        2 => 5,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcKrigingModel {
    mode: PcMode,
    max_degree: u32,
    /// Full LARS entry order of the candidate polynomials.
    selection_order: Vec<MultiIndex>,
    kriging: KrigingModel,
}

impl PcKrigingModel {
    pub fn mode(&self) -> PcMode {
        self.mode
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn selection_order(&self) -> &[MultiIndex] {
        &self.selection_order
    }

    pub fn kriging(&self) -> &KrigingModel {
        &self.kriging
    }

    /// The trend as a polynomial expansion with the Kriging `β` as coefficients.
    pub fn pce_trend(&self) -> PceModel {
        PceModel::from_parts(self.kriging.trend().clone(), self.kriging.beta().to_vec())
            .expect("trend and beta have equal length")
    }

    pub fn dim(&self) -> usize {
        self.kriging.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.kriging.predict(x)
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.kriging.predict_mean(x)
    }

    pub fn loo_error(&self) -> f64 {
        self.kriging.loo_error()
    }
}

pub fn fit_pc_kriging(
    data: &SampleSet,
    space: &DesignSpace,
    cfg: &PcKrigingConfig,
) -> Result<PcKrigingModel> {
    let max_degree = cfg.max_degree.unwrap_or_else(|| default_max_degree(space.dim()));
    let pce = fit_pce(data, space, max_degree)?;
    let selection_order = pce.selection_order().to_vec();

    let kriging = match cfg.mode {
        PcMode::Spc => fit_kriging(data, space, pce.basis(), &cfg.kriging)?,
        PcMode::Opc => {
            let constant = vec![0u32; space.dim()];
            let mut best: Option<(f64, KrigingModel)> = None;
            for k in 0..=selection_order.len() {
                let indices: Vec<MultiIndex> = std::iter::once(constant.clone())
                    .chain(selection_order[..k].iter().cloned())
                    .collect();
                if indices.len() > data.len() {
                    break;
                }
                let trend = PolynomialBasis::new(space.clone(), indices)?;
                let Ok(model) = fit_kriging(data, space, &trend, &cfg.kriging) else {
                    continue;
                };
                let loo = model.loo_error();
                if best.as_ref().is_none_or(|(b, _)| loo < *b) {
                    best = Some((loo, model));
                }
            }
            best.map(|(_, m)| m).ok_or_else(|| {
                Error::DegenerateData("no trend prefix produced a Kriging fit".into())
            })?
        }
    };

    Ok(PcKrigingModel {
        mode: cfg.mode,
        max_degree,
        selection_order,
        kriging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_1d(xs: &[f64], f: impl Fn(f64) -> f64) -> SampleSet {
        SampleSet::from_parts(
            xs.iter().map(|&x| vec![x]).collect(),
            xs.iter().map(|&x| f(x)).collect(),
        )
        .unwrap()
    }

    fn cfg(mode: PcMode, deg: u32) -> PcKrigingConfig {
        PcKrigingConfig {
            mode,
            max_degree: Some(deg),
            ..Default::default()
        }
    }

    #[test]
    fn spc_absorbs_square_into_trend() {
        let space = DesignSpace::new(vec![-1.0], vec![1.0]).unwrap();
        let data = data_1d(&[-1.0, -0.6, -0.1, 0.3, 0.8, 1.0], |x| x * x);
        let m = fit_pc_kriging(&data, &space, &cfg(PcMode::Spc, 2)).unwrap();
        assert!(m.kriging().sigma2() < 1e-10);
        for k in 0..=100 {
            let x = -1.0 + 0.02 * k as f64;
            assert!((m.predict_mean(&[x]).unwrap() - x * x).abs() < 1e-6);
        }
        let trend = m.pce_trend();
        assert_eq!(trend.multi_indices(), m.kriging().trend().indices());
    }

    #[test]
    fn interpolates_rough_data() {
        let space = DesignSpace::new(vec![0.0], vec![3.0]).unwrap();
        let xs = [0.0, 0.4, 0.9, 1.3, 2.0, 2.2, 3.0];
        let data = data_1d(&xs, |x| (3.0 * x).sin() * x.exp());
        for mode in [PcMode::Spc, PcMode::Opc] {
            let m = fit_pc_kriging(&data, &space, &cfg(mode, 4)).unwrap();
            for (x, y) in data.points().iter().zip(data.responses()) {
                let mu = m.predict_mean(x).unwrap();
                assert!((mu - y).abs() <= 1e-6 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn opc_loo_not_worse_than_spc() {
        let space = DesignSpace::new(vec![0.0], vec![3.0]).unwrap();
        let xs = [0.0, 0.3, 0.7, 1.2, 1.6, 2.1, 2.5, 3.0];
        let data = data_1d(&xs, |x| x.sin() + 0.2 * x * x * x);
        let spc = fit_pc_kriging(&data, &space, &cfg(PcMode::Spc, 4)).unwrap();
        let opc = fit_pc_kriging(&data, &space, &cfg(PcMode::Opc, 4)).unwrap();
        assert!(opc.loo_error() <= spc.loo_error() + 1e-12);
    }

    #[test]
    fn mode_parses() {
        assert_eq!("OPC".parse::<PcMode>().unwrap(), PcMode::Opc);
        assert!("x".parse::<PcMode>().is_err());
    }
}
