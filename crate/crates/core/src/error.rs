use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite coordinate in point ({x}, {y})")]
    NonFinitePoint { x: f64, y: f64 },

    #[error("invalid metric space: {0}")]
    InvalidMetric(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error(
        "common denominator {denominator} exceeds the cap of {cap}; \
         snap weights with rational_approx using a smaller denominator budget"
    )]
    DenominatorCap { denominator: u128, cap: u64 },

    #[error(
        "uniform measures have different atom counts ({left} vs {right}); \
         uniformize both to a common denominator first"
    )]
    SizeMismatch { left: usize, right: usize },

    #[error("problem too large for exhaustive search: {size} exceeds limit {limit}")]
    OracleLimit { size: usize, limit: usize },

    #[error("assignment problem has no perfect matching on the supplied edges")]
    Infeasible,

    #[error("grid construction requires p > 1 (the threshold on s is only reachable when p > 1), got p = {0}")]
    GridRequiresPGreaterThanOne(f64),

    #[error("search for {what} exceeded the cap of {cap}")]
    SearchCap { what: &'static str, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("p must be a finite real >= 1, got {p}")))
    }
}
