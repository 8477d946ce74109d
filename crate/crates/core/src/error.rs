use thiserror::Error;

/// Errors produced by the analysis, optimization and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state {state} is outside the state space with a_max = {a_max}")]
    StateOutOfRange { state: String, a_max: u32 },

    #[error("state index {index} is outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("allocation {lambda} exceeds total blocklength {total}")]
    AllocationOutOfRange { lambda: u32, total: u32 },

    #[error("policy has {got} entries, state space has {expected}")]
    PolicyLength { expected: usize, got: usize },

    #[error("matrix is not a valid transition matrix: {0}")]
    NotStochastic(String),

    #[error("steady-state system is singular; the chain is not ergodic")]
    Singular,

    #[error("steady-state solution has a negative entry {value:e} at position {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("stationarity residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },

    #[error("outage set is unreachable from the non-outage set")]
    OutageUnreachable,

    #[error("outage-duration series does not decay (ratio {ratio} after {terms} terms)")]
    NonDecayingSeries { ratio: f64, terms: usize },

    #[error("convergence metric undefined: both policies are all-zero")]
    DegenerateMetric,

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for failures of the numerical machinery as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular
                | Error::NegativeProbability { .. }
                | Error::Residual { .. }
                | Error::NonDecayingSeries { .. }
                | Error::NotStochastic(_)
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
