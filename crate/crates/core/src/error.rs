use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A linear-space value left the representable range; use a log-space table.
    #[error("scaled pmf overflows linear space at n = {n} (k = {k}, lambda = {lambda})")]
    Overflow { k: u32, lambda: f64, n: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The pmf is not decreasing at the edge of the mode search window.
    #[error("tail domination failure at n = {edge} (k = {k}, lambda = {lambda})")]
    TailDomination { k: u32, lambda: f64, edge: usize },

    #[error("table too short: need n_max >= {required}, have {actual}")]
    WindowTooSmall { required: usize, actual: usize },

    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    /// A proved inequality failed to bracket a root.
    #[error("bracket violation: {0}")]
    BracketViolation(String),

    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// Numerical evidence contradicts a structural observation.
    #[error("structural anomaly: {0}")]
    StructuralAnomaly(String),

    #[error("malformed table: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
