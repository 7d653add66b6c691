use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient evaluation failure at {point:?}")]
    CoefficientEvaluation { point: Vec<f64> },
    #[error("radius {radius} lies inside the exempt ball of radius {exempt}")]
    RadiusInsideExemptBall { radius: f64, exempt: f64 },
    #[error("no analytic invariant density for this model")]
    NoAnalyticDensity,
    #[error("path divergence at step {step}")]
    PathDivergence { step: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("schedule not synchronous")]
    NotSynchronous,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconsistent sampling parameters: {0}")]
    Consistency(String),
    #[error("rate fit failed: {0}")]
    Fit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("replication row aborted: {0}")]
    RowAborted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
