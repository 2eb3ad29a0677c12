use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("price {value} at company {company}, period {period} is not strictly positive")]
    NonPositivePrice {
        company: usize,
        period: usize,
        value: f64,
    },

    #[error("closed-form demand is negative in {} cell(s)", cells.len())]
    NegativeDemandRegime { cells: Vec<(usize, usize)> },

    #[error("demand {value} at company {company}, period {period} is negative")]
    NegativeDemand {
        company: usize,
        period: usize,
        value: f64,
    },

    #[error("aggregate budget is zero; equilibrium prices degenerate to 0")]
    ZeroAggregateBudget,

    #[error("price system matrix is singular")]
    SingularMatrix,

    #[error("allocation game requires zeta = gamma = 1 for every consumer (consumer {0})")]
    ZetaNotUniform(String),

    #[error("revenue denominator is not positive (all capacities zero?)")]
    DegenerateDenominator,

    #[error("best-response oracle supports at most 4 periods, got {0}")]
    ScaleTooLarge(usize),

    #[error("scenario is not symmetric: {0}")]
    AsymmetricScenario(String),

    #[error("input `{0}` must be strictly positive")]
    NonPositiveInput(&'static str),

    #[error("negative step offset {0} requires divergence-demo mode")]
    NegativeDelta(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario failed validation ({} violation(s))", .0.len())]
    InvalidScenario(Vec<Violation>),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unit error: {0}")]
    Unit(String),

    #[error("company shares sum to {0}, expected 1")]
    ShareSum(f64),

    #[error("budget class counts sum to {got}, population is {expected}")]
    CountMismatch { expected: usize, got: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}
