//! Hypergeometric and binomial-threshold probabilities, exact and sampled,
//! together with the analytic tail bounds the rest of the crate relies on.

mod bounds;
mod exact;
mod hypergeom;
mod threshold;

use thiserror::Error;

pub use bounds::{
    chernoff_lower_tail_bound, ec_gap, empirical_mean_upper_tail_bound, markov_tail_bound,
    markov_tail_bound_exact, ChernoffForm, EcGap,
};
pub use exact::{
    binomial_exact, format_rational, ln_binomial, rational_from_f64, rational_from_u64, ratio, to_f64,
    CompensatedSum, EXACT_TABLE_MAX,
};
pub use hypergeom::{
    hypergeom_cdf, hypergeom_pmf, hypergeom_pmf_f64, hypergeom_sample, hypergeom_tail_ge,
    hypergeom_tail_ge_f64, HypergeomParams, HypergeomTable,
};
pub use threshold::{p_lambda, p_lambda_poisson_limit, ThresholdHitProbability};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbabilityError {
    #[error("invalid hypergeometric parameters: n={n_total}, k={marked}, s={draw}")]
    InvalidHypergeom { n_total: u64, marked: u64, draw: u64 },
    #[error("Markov threshold must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("Chernoff lower tail needs xi below the mean: xi={xi}, mean={mean}")]
    XiNotBelowMean { xi: f64, mean: f64 },
    #[error("inequality requires c >= 1 and x >= 2, got c={c}, x={x}")]
    EcDomain { c: f64, x: f64 },
    #[error("mean tail bound requires 0 < mu <= gamma and t >= 1, got mu={mu}, gamma={gamma}, t={t}")]
    MeanTailDomain { mu: f64, gamma: f64, t: u64 },
}
