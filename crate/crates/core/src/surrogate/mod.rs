//! Component surrogates: Kriging, sparse PCE and PC-Kriging.

pub mod basis;
pub mod kriging;
pub mod lars;
pub mod pc_kriging;
pub mod pce;

use serde::{Deserialize, Serialize};

pub use basis::{MultiIndex, PolynomialBasis};
pub use kriging::{fit_kriging, KrigingModel, KrigingOptions};
pub use pc_kriging::{default_max_degree, fit_pc_kriging, PcKrigingConfig, PcKrigingModel, PcMode};
pub use pce::{fit_pce, PceModel};

use crate::domain::{DesignSpace, SampleSet};
use crate::error::{Error, Result};

/// Which surrogate fits the component functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    PcKriging,
    Kriging,
    Pce,
}

impl Backend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::PcKriging => "pc-kriging",
            Backend::Kriging => "kriging",
            Backend::Pce => "pce",
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pc-kriging" | "pckriging" | "pc_kriging" => Ok(Backend::PcKriging),
            "kriging" => Ok(Backend::Kriging),
            "pce" => Ok(Backend::Pce),
            other => Err(Error::UnknownMethod(other.to_string())),
        }
    }
}

/// Fitting settings shared by every backend.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub backend: Backend,
    pub mode: PcMode,
    pub max_degree: Option<u32>,
    pub kriging: KrigingOptions,
}

impl SurrogateConfig {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            ..Default::default()
        }
    }

    fn pc(&self) -> PcKrigingConfig {
        PcKrigingConfig {
            mode: self.mode,
            max_degree: self.max_degree,
            kriging: self.kriging,
        }
    }
}

/// A fitted component surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComponentModel {
    Kriging(KrigingModel),
    Pce(PceModel),
    PcKriging(PcKrigingModel),
}

impl ComponentModel {
    pub fn fit(data: &SampleSet, space: &DesignSpace, cfg: &SurrogateConfig) -> Result<Self> {
        Ok(match cfg.backend {
            Backend::Kriging => ComponentModel::Kriging(fit_kriging(
                data,
                space,
                &PolynomialBasis::constant(space.clone()),
                &cfg.kriging,
            )?),
            Backend::Pce => {
                let deg = cfg.max_degree.unwrap_or_else(|| default_max_degree(space.dim()));
                ComponentModel::Pce(fit_pce(data, space, deg)?)
            }
            Backend::PcKriging => ComponentModel::PcKriging(fit_pc_kriging(data, space, &cfg.pc())?),
        })
    }

    pub fn backend(&self) -> Backend {
        match self {
            ComponentModel::Kriging(_) => Backend::Kriging,
            ComponentModel::Pce(_) => Backend::Pce,
            ComponentModel::PcKriging(_) => Backend::PcKriging,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ComponentModel::Kriging(m) => m.dim(),
            ComponentModel::Pce(m) => m.dim(),
            ComponentModel::PcKriging(m) => m.dim(),
        }
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        match self {
            ComponentModel::Kriging(m) => m.predict_mean(x),
            ComponentModel::Pce(m) => m.predict(x),
            ComponentModel::PcKriging(m) => m.predict_mean(x),
        }
    }

    /// Mean and variance; a PCE reports zero variance.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        match self {
            ComponentModel::Kriging(m) => m.predict(x),
            ComponentModel::Pce(m) => Ok((m.predict(x)?, 0.0)),
            ComponentModel::PcKriging(m) => m.predict(x),
        }
    }

    /// The underlying Kriging model, if any.
    pub fn kriging(&self) -> Option<&KrigingModel> {
        match self {
            ComponentModel::Kriging(m) => Some(m),
            ComponentModel::PcKriging(m) => Some(m.kriging()),
            ComponentModel::Pce(_) => None,
        }
    }
}
