use thiserror::Error;

pub type Result<T> = std::result::Result<T, MuskatError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MuskatError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value at node {node}: {value}")]
    NonFinite { node: usize, value: f64 },

    /// The interface reached (or came within the guard distance of) the
    /// permeability line `y = -h2`.
    #[error("interface touches the permeability line: min f + h2 = {clearance:.3e} (guard {guard:.3e})")]
    TouchingRisk { clearance: f64, guard: f64 },

    #[error("interface lost positivity: min f = {min:.3e}")]
    PositivityLost { min: f64 },

    #[error("not in the Rayleigh-Taylor stable regime: R = {r:.6e} must be positive")]
    StabilityRegime { r: f64 },

    #[error("argument {value} outside the admissible domain: {reason}")]
    OutOfDomain { value: f64, reason: String },

    #[error("condition not satisfied (margin {margin:.6e}); no decay rate is guaranteed")]
    NoGuarantee { margin: f64 },

    #[error("test function does not vanish at the final time (max |phi| = {max_abs:.3e})")]
    SupportViolation { max_abs: f64 },

    #[error("invalid series: {0}")]
    InvalidSeries(String),
}
