use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::probability::p_lambda;

use super::{decide_counts, CalibratedConstants, EstimateResult, EstimatorConfig, EstimatorError, LevelCounts, PlanLayout};

fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    Binomial::new(trials, p.clamp(0.0, 1.0)).expect("p in [0, 1]").sample(rng)
}

/// Samples the hit counts a freshly drawn plan would produce against any
/// defect set of size `d`.
///
/// A level-`i` query fires independently with probability `P_λ(d, p_i)`
/// whatever the identity of the defectives, so the level count is
/// `Binomial(t, P_λ(d, p_i))`; the gate is the same at its own `p`, and
/// exactly `d` singletons fire when `λ = 1`.
pub fn simulate_counts<R: Rng + ?Sized>(
    constants: &CalibratedConstants,
    layout: &PlanLayout,
    d: u64,
    rng: &mut R,
) -> LevelCounts {
    let lambda = constants.lambda;
    let levels = constants.grid.iter().map(|&p| binomial(layout.t, p_lambda(d, p, lambda), rng)).collect();
    let gate = layout.gate.map(|g| binomial(g.repetitions, p_lambda(d, g.p, lambda), rng));
    let singletons = (layout.singletons > 0).then_some(if lambda == 1 { d } else { 0 });
    LevelCounts { levels, gate, singletons }
}

pub fn simulate_estimate<R: Rng + ?Sized>(
    config: &EstimatorConfig,
    constants: &CalibratedConstants,
    layout: &PlanLayout,
    d: u64,
    rng: &mut R,
) -> Result<EstimateResult, EstimatorError> {
    let counts = simulate_counts(constants, layout, d, rng);
    let mut result = decide_counts(config, constants, layout, &counts)?;
    result.promise_unverified = d < config.l || d > config.u;
    Ok(result)
}
