use thiserror::Error;

use crate::hdmr::HdmrModel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid design space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("value {value} outside [{lower}, {upper}] on dimension {index}")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("evaluation budget of {0} exhausted")]
    BudgetExhausted(u64),

    #[error("duplicate sample point (within 1e-12 of an existing row)")]
    DuplicatePoint,

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation matrix singular after nugget escalation to {0:e}")]
    SingularCorrelation(f64),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("zero variance: {0}")]
    ZeroVariance(&'static str),

    #[error("fitting component {key} failed: {source}")]
    ComponentFit { key: String, source: Box<Error> },

    /// The function's hard budget ran out mid-build; `partial` holds
    /// everything assembled from the evaluations that did happen.
    #[error("evaluation budget exhausted after {evals} evaluations during build")]
    PartialBuild { evals: u64, partial: Box<HdmrModel> },

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI and the C ABI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "invalid_space",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::BudgetExhausted(_) => "budget_exhausted",
            Error::DuplicatePoint => "duplicate_point",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::SingularCorrelation(_) => "singular_correlation",
            Error::DegenerateData(_) => "degenerate_data",
            Error::ZeroVariance(_) => "zero_variance",
            Error::ComponentFit { .. } => "component_fit",
            Error::PartialBuild { .. } => "partial_build",
            Error::UnknownFunction(_) => "unknown_function",
            Error::UnknownMethod(_) => "unknown_method",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
            Error::Config(_) => "config",
        }
    }
}
