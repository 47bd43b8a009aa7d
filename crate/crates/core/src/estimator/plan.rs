use rand::Rng;

use crate::oracle::{random_p_query, Query, QueryPlan};
use crate::probability::p_lambda;

use super::{CalibratedConstants, EstimatorConfig, EstimatorError};

/// How `d < d′` is handled for this configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallDPolicy {
    /// `L >= d′`: the promise already excludes small `d`.
    NotNeeded,
    /// Gate queries plus one singleton query per item.
    GateWithSingletons,
    /// `λ = 1`, `L < d′` without the fallback: the main estimator runs alone
    /// and carries no guarantee for `d < d′`.
    Unguarded,
}

/// Accept (`d <= d′` likely) iff the empirical hit rate of the `r` gate
/// queries at `p` is at most `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateRule {
    pub p: f64,
    pub repetitions: u64,
    pub threshold: f64,
    /// `P_λ(2d′, p) − P_λ(d′, p)`.
    pub separation: f64,
}

impl GateRule {
    pub fn accepts(&self, hits: u64) -> bool {
        (hits as f64 / self.repetitions as f64) <= self.threshold
    }
}

/// Which part of the plan a query position belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Level(usize),
    Gate,
    Singleton(u32),
}

/// Positions of the plan: `t` queries per grid level in level order, then
/// the gate queries, then the singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanLayout {
    pub levels: usize,
    pub t: u64,
    pub policy: SmallDPolicy,
    pub gate: Option<GateRule>,
    pub singletons: u64,
}

impl PlanLayout {
    pub fn new(config: &EstimatorConfig, constants: &CalibratedConstants) -> Result<Self, EstimatorError> {
        config.validate()?;
        let policy = if config.l >= constants.d_prime {
            SmallDPolicy::NotNeeded
        } else if config.lambda >= 2 {
            return Err(EstimatorError::SmallDUnsupported {
                lambda: config.lambda,
                l: config.l,
                d_prime: constants.d_prime,
            });
        } else if config.singleton_fallback {
            SmallDPolicy::GateWithSingletons
        } else {
            SmallDPolicy::Unguarded
        };
        let (gate, singletons) = match policy {
            SmallDPolicy::GateWithSingletons => (Some(gate_rule(config, constants)), config.n),
            _ => (None, 0),
        };
        Ok(Self { levels: constants.levels(), t: constants.t, policy, gate, singletons })
    }

    pub fn main_len(&self) -> u64 {
        self.t * self.levels as u64
    }

    pub fn gate_len(&self) -> u64 {
        self.gate.map_or(0, |g| g.repetitions)
    }

    pub fn total(&self) -> u64 {
        self.main_len() + self.gate_len() + self.singletons
    }

    pub fn level_range(&self, level: usize) -> std::ops::Range<usize> {
        let t = self.t as usize;
        level * t..(level + 1) * t
    }

    pub fn gate_range(&self) -> std::ops::Range<usize> {
        let s = self.main_len() as usize;
        s..s + self.gate_len() as usize
    }

    pub fn singleton_range(&self) -> std::ops::Range<usize> {
        let s = (self.main_len() + self.gate_len()) as usize;
        s..s + self.singletons as usize
    }

    pub fn segment(&self, pos: usize) -> Option<Segment> {
        let pos64 = pos as u64;
        if pos64 < self.main_len() {
            Some(Segment::Level(pos / self.t as usize))
        } else if self.gate_range().contains(&pos) {
            Some(Segment::Gate)
        } else if self.singleton_range().contains(&pos) {
            Some(Segment::Singleton((pos - self.singleton_range().start) as u32 + 1))
        } else {
            None
        }
    }
}

fn gate_rule(config: &EstimatorConfig, constants: &CalibratedConstants) -> GateRule {
    let dp = constants.d_prime;
    let p = constants.matched_p(dp as f64);
    let lo = p_lambda(dp, p, config.lambda);
    let hi = p_lambda(2 * dp, p, config.lambda);
    let separation = hi - lo;
    let repetitions = (2.0 * (3.0 / config.delta).ln() / (separation * separation)).ceil() as u64;
    GateRule { p, repetitions, threshold: 0.5 * (lo + hi), separation }
}

/// The gate on its own: `r` independent `p`-queries at `p = λ/(cd′)` and the
/// midpoint rule.
pub fn gate_small_d<R: Rng + ?Sized>(
    config: &EstimatorConfig,
    constants: &CalibratedConstants,
    rng: &mut R,
) -> Result<(QueryPlan, GateRule), EstimatorError> {
    config.validate()?;
    let rule = gate_rule(config, constants);
    let queries = (0..rule.repetitions)
        .map(|_| random_p_query(config.n, rule.p, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((QueryPlan::new(config.n, config.lambda, queries)?, rule))
}

/// A sealed plan together with everything needed to decode its responses.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePlan {
    pub config: EstimatorConfig,
    pub constants: CalibratedConstants,
    pub layout: PlanLayout,
    pub plan: QueryPlan,
}

impl EstimatePlan {
    pub fn level_of(&self, pos: usize) -> Option<Segment> {
        self.layout.segment(pos)
    }
}

/// Draws every query of the estimator. Nothing here depends on a response.
pub fn build_plan<R: Rng + ?Sized>(
    config: &EstimatorConfig,
    constants: &CalibratedConstants,
    rng: &mut R,
) -> Result<EstimatePlan, EstimatorError> {
    let layout = PlanLayout::new(config, constants)?;
    let n = config.n;
    let mut queries = Vec::with_capacity(layout.total() as usize);
    for &p in &constants.grid {
        for _ in 0..layout.t {
            queries.push(random_p_query(n, p, rng)?);
        }
    }
    if let Some(g) = layout.gate {
        for _ in 0..g.repetitions {
            queries.push(random_p_query(n, g.p, rng)?);
        }
    }
    for i in 1..=layout.singletons {
        queries.push(Query::new(n, vec![i as u32])?);
    }
    let plan = QueryPlan::new(n, config.lambda, queries)?;
    Ok(EstimatePlan { config: config.clone(), constants: constants.clone(), layout, plan })
}
