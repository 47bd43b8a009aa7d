//! The calibrated non-adaptive α-estimator.
//!
//! [`calibrate`] derives the constants, [`build_plan`] draws every query up
//! front, and [`decide`] turns the response vector into an estimate `D`.
//! [`simulate_counts`] samples the per-level hit counts directly, which has
//! the same law as evaluating a freshly drawn plan and costs `O(levels)`.

mod calibrate;
mod decide;
mod plan;
mod simulate;

use thiserror::Error;

use crate::oracle::OracleError;

pub use calibrate::{calibrate, CalibratedConstants, DELTA_SAFETY, DOUBLING_STEPS, SLACK_LEVELS, T_FACTOR};
pub use decide::{decide, decide_counts, decide_from_estimates, estimate, DecisionPath, EstimateResult, LevelCounts};
pub use plan::{build_plan, gate_small_d, EstimatePlan, GateRule, PlanLayout, Segment, SmallDPolicy};
pub use simulate::{simulate_counts, simulate_estimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("threshold lambda must be at least 1")]
    ZeroLambda,
    #[error("promise bounds must satisfy lambda <= L < U <= n, got lambda={lambda}, L={l}, U={u}, n={n}")]
    PromiseBounds { lambda: u32, l: u64, u: u64, n: u64 },
    #[error("alpha must be a finite number greater than 1, got {0}")]
    AlphaRange(f64),
    #[error("delta must lie in (0, 1/2), got {0}")]
    DeltaRange(f64),
    #[error("lambda={lambda} needs L >= d'={d_prime} (got L={l}); small d is only handled for lambda=1")]
    SmallDUnsupported { lambda: u32, l: u64, d_prime: u64 },
    #[error("calibration failed: gap Delta={0} is not positive at working precision")]
    CalibrationFailure(f64),
    #[error("no grid level exceeded the reference threshold")]
    NoLevelFound,
    #[error("response vector has {found} entries, plan has {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl EstimatorError {
    /// True for errors caused by the inputs rather than by a failed run.
    pub fn is_config_error(&self) -> bool {
        !matches!(self, Self::NoLevelFound | Self::CalibrationFailure(_))
    }
}

/// Inputs of the estimator. Use [`EstimatorConfig::new`] to get validation.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub n: u64,
    pub lambda: u32,
    pub alpha: f64,
    pub l: u64,
    pub u: u64,
    pub delta: f64,
    /// For `λ = 1` and `L < d′`: add the small-`d` gate and the `n`
    /// singleton queries that recover `d` exactly when the gate accepts.
    pub singleton_fallback: bool,
}

impl EstimatorConfig {
    pub fn new(n: u64, lambda: u32, alpha: f64, l: u64, u: u64, delta: f64) -> Result<Self, EstimatorError> {
        let cfg = Self { n, lambda, alpha, l, u, delta, singleton_fallback: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_singleton_fallback(mut self, on: bool) -> Self {
        self.singleton_fallback = on;
        self
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.lambda == 0 {
            return Err(EstimatorError::ZeroLambda);
        }
        if !(u64::from(self.lambda) <= self.l && self.l < self.u && self.u <= self.n) {
            return Err(EstimatorError::PromiseBounds { lambda: self.lambda, l: self.l, u: self.u, n: self.n });
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(EstimatorError::AlphaRange(self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(EstimatorError::DeltaRange(self.delta));
        }
        Ok(())
    }
}
