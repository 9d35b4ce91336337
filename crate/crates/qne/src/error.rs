use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    PlanSyntax { pos: usize, msg: String },

    #[error("amplification factor must be an integer >= 2, got {0}")]
    BadAmplifyFactor(u64),

    #[error("lift target {target} outside ({child_p}, 1]")]
    BadLiftTarget { target: String, child_p: String },

    #[error("lift is undefined when the child already has p = 1")]
    LiftFromOne,

    #[error("p-value {0} outside [-1, 1]")]
    POutOfRange(String),

    #[error("input bit at position {pos} is {value}, expected 0 or 1")]
    BadBit { pos: usize, value: u8 },

    #[error("input has {got} bits, expected {want}")]
    InputLength { got: usize, want: usize },

    #[error("state has dimension {got}, plan needs {want}")]
    DimensionMismatch { got: usize, want: usize },

    #[error("plan dimension does not fit in memory (depth {0} too large)")]
    PlanTooLarge(u32),

    #[error("plan does not 0-compute: p = {0}")]
    NotZeroComputing(String),

    #[error("plan does not (-1)-compute: p = {0}")]
    NotMinusOneComputing(String),

    #[error("query exponent is undefined at depth 0")]
    DepthZero,

    #[error("dense matrix dimension {dim} exceeds guard {guard}")]
    DenseGuard { dim: usize, guard: usize },

    #[error("measured success probability {prob} is not within {tol} of 1")]
    DecisionNotExact { prob: f64, tol: f64 },

    #[error("exhaustive input sweep limited to depth <= {max}, got {got}")]
    ExhaustiveTooDeep { got: u32, max: u32 },

    #[error("sensitivity at the all-zeros input is {count}, expected {expected}")]
    SensitivityMismatch { count: u64, expected: u64 },

    #[error("search found no (-1)-computing plan within the configured bounds")]
    NoPlanFound,

    #[error("invalid search config: {0}")]
    BadSearchConfig(String),
}
