use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid gridworld: {0}")]
    InvalidGridworld(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value iteration did not converge within {iterations} iterations (residual {residual:e})")]
    PlannerDidNotConverge { iterations: usize, residual: f64 },

    #[error("occupancy system is singular or inaccurate (residual {residual:e})")]
    SingularOccupancy { residual: f64 },

    #[error("relative performance undefined: best and worst policy values coincide ({value})")]
    UndefinedRelativePerformance { value: f64 },

    #[error("worldview has numerical rank 0; smallest nonzero singular value is undefined")]
    RankZero,

    #[error("learner reward direction undefined: teaching risk {rho} is 1 within tolerance")]
    UndefinedLearnerDirection { rho: f64 },

    #[error("reward weights must have unit norm (got norm {0})")]
    NotUnitNorm(f64),

    #[error("feature pool has no untaught features")]
    EmptyPool,

    #[error("invalid feature pool: {0}")]
    InvalidPool(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("zero rollouts requested")]
    ZeroRollouts,

    #[error("policy enumeration too large ({count} deterministic policies, limit {limit})")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
