//! Cut-HDMR metamodeling with PC-Kriging component functions.

pub mod bench;
pub mod cli;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod hdmr;
pub mod metrics;
pub mod sampling;
pub mod sensitivity;
pub mod surrogate;

pub use domain::{BudgetedFunction, CutCenter, DesignSpace, Distribution, RandomStream, SampleSet};
pub use error::{Error, Result};
pub use hdmr::{build, BuildConfig, HdmrModel};
pub use surrogate::Backend;
