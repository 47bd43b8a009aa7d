//! The hard distribution pair and the machinery that certifies the lower
//! bound inequalities on concrete instances.
//!
//! * [`SizeClasses`] and the planted samplers for `μ_even`, `μ_odd`.
//! * The coupling `(X, Y)` and its per-query disagreement probabilities,
//!   exactly and split into the low / mid / high buckets.
//! * Induced response distributions, total variation, and distinguisher
//!   advantage.
//! * Seed fixing: turning the randomized estimator into one deterministic
//!   plan plus parity rule.

mod classes;
mod derandomize;
mod disagreement;
mod distribution;
mod induced;
mod sampling;

use thiserror::Error;

use crate::estimator::EstimatorError;
use crate::oracle::OracleError;

pub use classes::{build_size_classes, estimator_as_distinguisher, Parity, SizeClasses};
pub use derandomize::{
    advantage_mc, coupling_pushforward_check, derandomize, estimator_generator, AdvantageEstimate,
    DerandomizeReport, Distinguisher, EstimatorDistinguisher, PushforwardReport, SeedScore,
};
pub use disagreement::{
    bucket_decomposition, coupling_tv_bound, coupling_tv_bound_f64, disagreement_for_sizes, disagreement_for_sizes_f64,
    disagreement_mc, exact_disagreement, BucketReport, BucketSums, CouplingBound, Disagreement, DisagreementF64,
};
pub use distribution::{
    distinguisher_advantage, optimal_rule_advantage, tv_by_events, tv_distance, DiscreteDistribution, Mass,
    MAX_EVENT_OUTCOMES,
};
pub use induced::{induced_distribution, induced_exact, induced_mc, ExactLimits, Induced, InducedMode, McDistribution};
pub use sampling::{sample_coupling, sample_planted, CouplingSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("no size classes: L*beta^2 = {smallest_even} exceeds U = {u}")]
    NoClasses { smallest_even: u128, u: u64 },
    #[error("alpha must be a finite number greater than 1, got {0}")]
    AlphaRange(f64),
    #[error("promise bounds must satisfy 1 <= L < U, got L={l}, U={u}")]
    Bounds { l: u64, u: u64 },
    #[error("class size {size} exceeds the universe n={n}")]
    ClassExceedsUniverse { size: u64, n: u64 },
    #[error("level j={j} outside [1, {m}]")]
    LevelOutOfRange { j: usize, m: usize },
    #[error("query size k={k} exceeds n={n}")]
    QueryTooLarge { k: u64, n: u64 },
    #[error("exact enumeration over budget: {what}")]
    BudgetExceeded { what: String },
    #[error("distinguisher rule is undefined on an outcome")]
    RuleUndefined,
    #[error("threshold lambda must be at least 1")]
    ZeroLambda,
    #[error("distribution masses are invalid: {0}")]
    BadMasses(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

impl LabError {
    /// True for errors caused by the inputs rather than by a failed run.
    pub fn is_config_error(&self) -> bool {
        match self {
            Self::NoClasses { .. } => false,
            Self::Estimator(e) => e.is_config_error(),
            _ => true,
        }
    }
}
