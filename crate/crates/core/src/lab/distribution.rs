use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive};

use super::LabError;

/// Probability mass type: `f64` for sampled distributions, `BigRational` for
/// exact ones.
pub trait Mass: Clone + Debug + PartialOrd + Num + Signed {
    fn from_ratio(num: u64, den: u64) -> Self;
    fn to_f64(&self) -> f64;
    /// Whether `sum` is an acceptable total mass.
    fn is_unit(sum: &Self) -> bool;
}

impl Mass for f64 {
    fn from_ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_unit(sum: &Self) -> bool {
        (sum - 1.0).abs() <= 1e-12
    }
}

impl Mass for BigRational {
    fn from_ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_unit(sum: &Self) -> bool {
        sum.is_one()
    }
}

/// A finite probability mass function. Outcomes with zero mass are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution<O: Ord, M> {
    masses: BTreeMap<O, M>,
}

impl<O: Ord + Clone + Debug, M: Mass> DiscreteDistribution<O, M> {
    /// Repeated outcomes have their masses added.
    pub fn new(pairs: impl IntoIterator<Item = (O, M)>) -> Result<Self, LabError> {
        let mut masses: BTreeMap<O, M> = BTreeMap::new();
        for (o, m) in pairs {
            if m.is_negative() {
                return Err(LabError::BadMasses(format!("negative mass {m:?} at {o:?}")));
            }
            let slot = masses.entry(o).or_insert_with(M::zero);
            *slot = slot.clone() + m;
        }
        masses.retain(|_, m| !m.is_zero());
        let total = masses.values().fold(M::zero(), |a, m| a + m.clone());
        if !M::is_unit(&total) {
            return Err(LabError::BadMasses(format!("total mass {total:?}")));
        }
        Ok(Self { masses })
    }

    pub fn point(outcome: O) -> Self {
        Self { masses: BTreeMap::from([(outcome, M::one())]) }
    }

    pub fn mass(&self, outcome: &O) -> M {
        self.masses.get(outcome).cloned().unwrap_or_else(M::zero)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &O> {
        self.masses.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&O, &M)> {
        self.masses.iter()
    }

    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    /// Mass of the outcomes satisfying `event`.
    pub fn probability(&self, event: impl Fn(&O) -> bool) -> M {
        self.masses
            .iter()
            .filter(|(o, _)| event(o))
            .fold(M::zero(), |a, (_, m)| a + m.clone())
    }

    pub fn to_f64(&self) -> DiscreteDistribution<O, f64> {
        DiscreteDistribution { masses: self.masses.iter().map(|(o, m)| (o.clone(), m.to_f64())).collect() }
    }
}

fn union<'a, O: Ord + Clone, M>(
    d0: &'a DiscreteDistribution<O, M>,
    d1: &'a DiscreteDistribution<O, M>,
) -> BTreeSet<O> {
    d0.masses.keys().chain(d1.masses.keys()).cloned().collect()
}

/// `½ Σ_ω |d0(ω) − d1(ω)|` over the union of supports.
pub fn tv_distance<O: Ord + Clone + Debug, M: Mass>(
    d0: &DiscreteDistribution<O, M>,
    d1: &DiscreteDistribution<O, M>,
) -> M {
    let l1 = union(d0, d1)
        .iter()
        .fold(M::zero(), |a, o| a + (d0.mass(o) - d1.mass(o)).abs());
    l1 / (M::one() + M::one())
}

/// Largest union of supports [`tv_by_events`] will enumerate.
pub const MAX_EVENT_OUTCOMES: usize = 16;

/// `sup_A |d0(A) − d1(A)|` by enumerating every event over the union of
/// supports. Exponential; only for checking [`tv_distance`].
pub fn tv_by_events<O: Ord + Clone + Debug, M: Mass>(
    d0: &DiscreteDistribution<O, M>,
    d1: &DiscreteDistribution<O, M>,
) -> Result<M, LabError> {
    let outcomes: Vec<O> = union(d0, d1).into_iter().collect();
    if outcomes.len() > MAX_EVENT_OUTCOMES {
        return Err(LabError::BudgetExceeded {
            what: format!("{} outcomes exceed the event-enumeration cap {MAX_EVENT_OUTCOMES}", outcomes.len()),
        });
    }
    let diffs: Vec<M> = outcomes.iter().map(|o| d0.mass(o) - d1.mass(o)).collect();
    let mut best = M::zero();
    for event in 0u32..(1u32 << outcomes.len()) {
        let gap = (0..outcomes.len())
            .filter(|i| event >> i & 1 == 1)
            .fold(M::zero(), |a, i| a + diffs[i].clone())
            .abs();
        if gap > best {
            best = gap;
        }
    }
    Ok(best)
}

/// `2(Pr_{b,x}[rule(x) = b] − ½) = d0(A) − d1(A)` for `A = {x : rule(x) = 0}`,
/// where `rule` returns `Some(false)` for a guess of `d0` and `Some(true)` for
/// `d1`. Outcomes of either support mapped to `None` are an error.
pub fn distinguisher_advantage<O: Ord + Clone + Debug, M: Mass>(
    rule: impl Fn(&O) -> Option<bool>,
    d0: &DiscreteDistribution<O, M>,
    d1: &DiscreteDistribution<O, M>,
) -> Result<M, LabError> {
    let mut adv = M::zero();
    for o in union(d0, d1) {
        if !rule(&o).ok_or(LabError::RuleUndefined)? {
            adv = adv + d0.mass(&o) - d1.mass(&o);
        }
    }
    Ok(adv)
}

/// Advantage of the rule guessing `d0` exactly where `d0` has at least as
/// much mass; it equals the total variation distance.
pub fn optimal_rule_advantage<O: Ord + Clone + Debug, M: Mass>(
    d0: &DiscreteDistribution<O, M>,
    d1: &DiscreteDistribution<O, M>,
) -> M {
    distinguisher_advantage(|o| Some(d0.mass(o) < d1.mass(o)), d0, d1).expect("total rule")
}
