use thiserror::Error;

/// Errors produced by the simulator, the observables and the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("all cells became terminal at length {length} before reaching target length {target}")]
    EarlyTermination { length: usize, target: usize },

    #[error("sentence exceeded the runaway cap of {cap} cells")]
    RunawayGrowth { cap: usize },

    #[error("need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: u64, have: u64 },

    #[error("second moment of the magnetization is zero")]
    DegenerateMoments,

    #[error("only {sizes} system sizes overlap in the rescaled abscissa (need 3)")]
    InsufficientOverlap { sizes: usize },

    #[error("temperature scan does not bracket the criterion: {0}")]
    RangeTooNarrow(String),

    #[error("state space too large: {states} states (cap {cap})")]
    TooLarge { states: u64, cap: u64 },

    #[error("truncated probability mass {lost:e} exceeds tolerance {tolerance:e}")]
    TruncationLoss { lost: f64, tolerance: f64 },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("duplicate table key: {0}")]
    DuplicateKey(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
