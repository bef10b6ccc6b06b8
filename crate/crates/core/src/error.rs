use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("displacement {displacement:?} outside rate range {range}")]
    OutOfRange { displacement: Vec<i64>, range: usize },
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("state space too large: {states} states exceed cap {cap}")]
    StateCap { states: usize, cap: usize },
    #[error("generator is not irreducible on the enumerated component: {0}")]
    Reducible(String),
    /// A hypothesis of the perturbative expansion does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("time {t} is beyond the simulated horizon {horizon}")]
    OutOfHorizon { t: f64, horizon: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
