use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

use crate::oracle::{evaluate_plan, QueryPlan, ResponseVector};
use crate::probability::binomial_exact;

use super::{sample_planted, DiscreteDistribution, LabError, Parity, SizeClasses};

/// Caps on exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_n: u64,
    pub max_subsets_per_class: u64,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self { max_n: 22, max_subsets_per_class: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InducedMode {
    Exact(ExactLimits),
    MonteCarlo { samples: u64 },
}

/// Empirical response distribution with its sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct McDistribution {
    pub dist: DiscreteDistribution<ResponseVector, f64>,
    pub samples: u64,
}

impl McDistribution {
    pub fn frequency(&self, outcome: &ResponseVector) -> f64 {
        self.dist.mass(outcome)
    }

    /// `sqrt(p̂(1 − p̂)/N)`.
    pub fn std_error(&self, outcome: &ResponseVector) -> f64 {
        let p = self.frequency(outcome);
        (p * (1.0 - p) / self.samples as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Induced {
    Exact(DiscreteDistribution<ResponseVector, BigRational>),
    MonteCarlo(McDistribution),
}

/// Next bit pattern with the same popcount (Gosper's hack).
fn next_combination(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

fn query_masks(plan: &QueryPlan) -> Vec<u64> {
    plan.queries()
        .iter()
        .map(|q| q.iter().fold(0u64, |m, i| m | 1 << (i - 1)))
        .collect()
}

fn respond(masks: &[u64], set: u64, lambda: u32) -> ResponseVector {
    masks.iter().map(|&w| (w & set).count_ones() >= lambda).collect()
}

/// Law of the response vector when the defect set is drawn from the parity's
/// planted distribution, by enumerating every set of every class size.
pub fn induced_exact(
    plan: &QueryPlan,
    classes: &SizeClasses,
    parity: Parity,
    n: u64,
    limits: ExactLimits,
) -> Result<DiscreteDistribution<ResponseVector, BigRational>, LabError> {
    classes.check_universe(n)?;
    if plan.universe_size() != n {
        return Err(crate::oracle::OracleError::UniverseMismatch { expected: n, found: plan.universe_size() }.into());
    }
    if n > limits.max_n || n > 63 {
        return Err(LabError::BudgetExceeded { what: format!("n={n} above the exact cap {}", limits.max_n.min(63)) });
    }
    let sizes = classes.sizes(parity);
    for &s in sizes {
        let count = binomial_exact(n, s);
        if count > BigUint::from(limits.max_subsets_per_class) {
            return Err(LabError::BudgetExceeded {
                what: format!("C({n},{s}) = {count} exceeds {}", limits.max_subsets_per_class),
            });
        }
    }
    let masks = query_masks(plan);
    let lambda = plan.lambda();
    let classes_count = BigUint::from(sizes.len());
    let mut masses: BTreeMap<ResponseVector, BigRational> = BTreeMap::new();
    for &s in sizes {
        let mut counts: BTreeMap<ResponseVector, u64> = BTreeMap::new();
        let limit = 1u64 << n;
        let mut set = if s == 0 { 0 } else { (1u64 << s) - 1 };
        loop {
            *counts.entry(respond(&masks, set, lambda)).or_default() += 1;
            if s == 0 {
                break;
            }
            set = next_combination(set);
            if set >= limit {
                break;
            }
        }
        let denom = binomial_exact(n, s) * &classes_count;
        for (o, c) in counts {
            let w = BigRational::new(BigUint::from(c).into(), denom.clone().into());
            let slot = masses.entry(o).or_insert_with(BigRational::zero);
            *slot += w;
        }
    }
    DiscreteDistribution::new(masses)
}

pub fn induced_mc<R: Rng + ?Sized>(
    plan: &QueryPlan,
    classes: &SizeClasses,
    parity: Parity,
    n: u64,
    samples: u64,
    rng: &mut R,
) -> Result<McDistribution, LabError> {
    if samples == 0 {
        return Err(LabError::BudgetExceeded { what: "Monte Carlo needs at least one sample".into() });
    }
    let mut counts: BTreeMap<ResponseVector, u64> = BTreeMap::new();
    for _ in 0..samples {
        let b = sample_planted(classes, parity, n, rng)?;
        *counts.entry(evaluate_plan(plan, &b)?).or_default() += 1;
    }
    let dist = DiscreteDistribution::new(counts.into_iter().map(|(o, c)| (o, c as f64 / samples as f64)))?;
    Ok(McDistribution { dist, samples })
}

pub fn induced_distribution<R: Rng + ?Sized>(
    plan: &QueryPlan,
    classes: &SizeClasses,
    parity: Parity,
    n: u64,
    mode: InducedMode,
    rng: &mut R,
) -> Result<Induced, LabError> {
    match mode {
        InducedMode::Exact(limits) => induced_exact(plan, classes, parity, n, limits).map(Induced::Exact),
        InducedMode::MonteCarlo { samples } => induced_mc(plan, classes, parity, n, samples, rng).map(Induced::MonteCarlo),
    }
}
