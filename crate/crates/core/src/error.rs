use num_bigint::BigInt;
use thiserror::Error;

/// Errors shared by the instance model, oracles and schedulers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("element {element} outside ground set of size {ground}")]
    ElementOutOfRange { element: usize, ground: usize },

    #[error("element {0} has zero growth rate; run strip_zero_rate first")]
    ZeroRate(usize),

    #[error("period T too large for the configured integer width (partial lcm {partial})")]
    PeriodTooLarge { partial: BigInt },

    #[error("pseudo-polynomial blowup: |E|*T = {product} exceeds budget {budget} (T = {period})")]
    BudgetExceeded {
        period: u64,
        product: u128,
        budget: u128,
    },

    #[error("state space of size {size} exceeds budget {budget}")]
    StateSpaceTooLarge { size: u128, budget: u128 },

    #[error("{op} unsupported for this set-system variant")]
    Unsupported { op: &'static str },

    #[error("a convex-combination witness is required: {0}")]
    WitnessRequired(&'static str),

    #[error("instance is empty")]
    EmptyInstance,

    #[error("invalid descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("growth vector violates the set-system polytope: {0}")]
    InvalidGrowth(String),

    #[error("instance inconsistency: {0}")]
    InstanceInconsistency(String),

    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("target height {target} is below the growth rate of element {element}")]
    TargetHeightTooSmall { target: String, element: usize },

    #[error("rejection sampling failed after {draws} draws ({rejected} rejected); c may be too small or the witness defective")]
    RejectionLimit { draws: usize, rejected: usize },

    #[error("linear program is infeasible: element {0} is covered by no column")]
    UncoverableElement(usize),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
