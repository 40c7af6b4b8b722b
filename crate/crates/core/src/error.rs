use alloc::string::String;

use crate::lp::PivotLimit;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared { line: u32, col: u32, name: String },
    #[error("{line}:{col}: probability {value} is outside [0,1]")]
    ProbabilityRange { line: u32, col: u32, value: String },
    #[error("{line}:{col}: random variable `{name}` used in a guard or annotation")]
    RandomInGuard { line: u32, col: u32, name: String },
    #[error("{line}:{col}: unknown distribution kind `{name}` (supported: uniform, discrete)")]
    UnknownDistribution { line: u32, col: u32, name: String },
    #[error("{line}:{col}: {msg}")]
    BadDistribution { line: u32, col: u32, msg: String },
    #[error("invariant at location {loc} ({label}) is empty")]
    EmptyInvariant { loc: usize, label: String },
    #[error("no enabled transition at deterministic location {0}")]
    NoEnabledTransition(usize),
    #[error("scheduler returned transition {choice} which does not leave location {loc}")]
    BadSchedulerChoice { loc: usize, choice: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unfolding needs more than {limit} nodes (depth {depth} of {required})")]
    NodeLimit { limit: usize, depth: usize, required: usize },
    #[error("n = {n} is below the concentration threshold {threshold}")]
    BelowThreshold { n: u64, threshold: String },
    #[error("no linear ranking supermartingale found")]
    NoWitness,
    #[error("no bounded witness: the program is not certified in bounded LRApp")]
    NoBoundedWitness,
    #[error(transparent)]
    Lp(#[from] PivotLimit),
}

pub type Result<T> = core::result::Result<T, Error>;
