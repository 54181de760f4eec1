use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("segment time {value} is below the floor {floor}")]
    InvalidTimes { value: f64, floor: f64 },

    #[error("singular or ill-conditioned interpolation system (residual {residual:e})")]
    SingularSystem { residual: f64 },

    #[error("time {t} outside trajectory span [0, {total}]")]
    OutOfRange { t: f64, total: f64 },

    #[error("invalid kinematic limits: {0}")]
    InvalidLimits(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("chaotic state {0} left (0, 1) or sits on a fixed point")]
    BadSeedState(f64),

    #[error("perturbation blend alpha must be < 1")]
    DegenerateAlpha,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("argument outside function domain: {0}")]
    DomainError(String),

    #[error("optimizer found no feasible segment times")]
    NoFeasibleSolution,

    #[error("joint {joint} violates its limits after synchronizing segment times (violation {violation:e})")]
    InfeasibleAfterSync { joint: usize, violation: f64 },
}
