use rand::Rng;

use crate::oracle::{evaluate_plan, DefectSet, ResponseVector};

use super::{build_plan, calibrate, CalibratedConstants, EstimatePlan, EstimatorConfig, EstimatorError, PlanLayout};

/// Hit counts per plan segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelCounts {
    pub levels: Vec<u64>,
    pub gate: Option<u64>,
    /// Number of singleton queries that fired.
    pub singletons: Option<u64>,
}

impl LevelCounts {
    pub fn from_responses(layout: &PlanLayout, responses: &ResponseVector) -> Result<Self, EstimatorError> {
        let expected = layout.total() as usize;
        if responses.len() != expected {
            return Err(EstimatorError::LengthMismatch { expected, found: responses.len() });
        }
        let levels = (0..layout.levels)
            .map(|i| responses.count_ones_in(layout.level_range(i)) as u64)
            .collect();
        let gate = layout.gate.map(|_| responses.count_ones_in(layout.gate_range()) as u64);
        let singletons = (layout.singletons > 0).then(|| responses.count_ones_in(layout.singleton_range()) as u64);
        Ok(Self { levels, gate, singletons })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionPath {
    /// Main rule over the grid levels.
    Levels,
    /// Gate accepted and `d` was read off the singleton queries.
    Singletons,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// The estimate `D`.
    pub d_hat: u64,
    pub i1: Option<usize>,
    pub queries_used: u64,
    /// `P̂_i` per grid level.
    pub level_estimates: Vec<f64>,
    pub path: DecisionPath,
    pub gate_accepted: Option<bool>,
    /// Set when the true size was known to lie outside `[L, U]`.
    pub promise_unverified: bool,
}

impl EstimateResult {
    pub fn contains(&self, d: u64, alpha: f64) -> bool {
        self.d_hat >= d && self.d_hat as f64 <= alpha * d as f64
    }
}

fn clamp_estimate(config: &EstimatorConfig, raw: f64) -> u64 {
    let hi = (config.alpha * config.u as f64).floor();
    let rounded = (raw + 0.5).floor();
    rounded.clamp(config.l as f64, hi) as u64
}

/// First level whose estimate is strictly above `reference − Δ/4`, and the
/// resulting `D`.
fn select(config: &EstimatorConfig, constants: &CalibratedConstants, estimates: &[f64]) -> Result<(usize, u64), EstimatorError> {
    let threshold = constants.reference - constants.delta_alpha / 4.0;
    let i1 = estimates
        .iter()
        .position(|&e| e > threshold)
        .ok_or(EstimatorError::NoLevelFound)?;
    Ok((i1, clamp_estimate(config, constants.raw_estimate(i1))))
}

/// Applies the decision rule to per-level estimates `P̂_i`, e.g. exact
/// probabilities for a noiseless check.
pub fn decide_from_estimates(
    config: &EstimatorConfig,
    constants: &CalibratedConstants,
    estimates: &[f64],
) -> Result<EstimateResult, EstimatorError> {
    if estimates.len() != constants.levels() {
        return Err(EstimatorError::LengthMismatch { expected: constants.levels(), found: estimates.len() });
    }
    let (i1, d_hat) = select(config, constants, estimates)?;
    Ok(EstimateResult {
        d_hat,
        i1: Some(i1),
        queries_used: constants.main_queries(),
        level_estimates: estimates.to_vec(),
        path: DecisionPath::Levels,
        gate_accepted: None,
        promise_unverified: false,
    })
}

pub fn decide_counts(
    config: &EstimatorConfig,
    constants: &CalibratedConstants,
    layout: &PlanLayout,
    counts: &LevelCounts,
) -> Result<EstimateResult, EstimatorError> {
    let t = layout.t as f64;
    let level_estimates: Vec<f64> = counts.levels.iter().map(|&c| c as f64 / t).collect();
    let gate_accepted = match (layout.gate, counts.gate) {
        (Some(rule), Some(hits)) => Some(rule.accepts(hits)),
        _ => None,
    };
    if gate_accepted == Some(true) {
        if let Some(found) = counts.singletons {
            return Ok(EstimateResult {
                d_hat: clamp_estimate(config, found as f64),
                i1: None,
                queries_used: layout.total(),
                level_estimates,
                path: DecisionPath::Singletons,
                gate_accepted,
                promise_unverified: false,
            });
        }
    }
    let mut result = decide_from_estimates(config, constants, &level_estimates)?;
    result.queries_used = layout.total();
    result.gate_accepted = gate_accepted;
    Ok(result)
}

pub fn decide(plan: &EstimatePlan, responses: &ResponseVector) -> Result<EstimateResult, EstimatorError> {
    let counts = LevelCounts::from_responses(&plan.layout, responses)?;
    decide_counts(&plan.config, &plan.constants, &plan.layout, &counts)
}

/// Calibrate, draw the plan, query the oracle, decide.
pub fn estimate<R: Rng + ?Sized>(
    config: &EstimatorConfig,
    defects: &DefectSet,
    rng: &mut R,
) -> Result<EstimateResult, EstimatorError> {
    let constants = calibrate(config)?;
    let plan = build_plan(config, &constants, rng)?;
    let responses = evaluate_plan(&plan.plan, defects)?;
    let mut result = decide(&plan, &responses)?;
    let d = defects.len() as u64;
    result.promise_unverified = d < config.l || d > config.u;
    Ok(result)
}
