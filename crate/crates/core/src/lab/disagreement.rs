use std::collections::hash_map::Entry;
use std::collections::HashMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::oracle::{evaluate, QueryPlan};
use crate::probability::{binomial_exact, hypergeom_tail_ge_f64, rational_from_f64, ratio, HypergeomParams};

use super::{sample_coupling, LabError, SizeClasses};

/// `Pr(H_{n,k,s} >= λ)` from the `λ` lower terms.
fn tail_ge(n: u64, k: u64, s: u64, lambda: u32) -> BigRational {
    let below: BigUint = (0..u64::from(lambda))
        .map(|r| binomial_exact(k, r) * binomial_exact(n - k, s.saturating_sub(r)) * BigUint::from(u8::from(r <= s)))
        .sum();
    BigRational::one() - ratio(&below, &binomial_exact(n, s))
}

/// The two ways a query can split the coupled pair at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Disagreement {
    /// `Pr(H_x >= λ) Pr(H_y < λ)`.
    pub p1: BigRational,
    /// `Pr(H_x < λ) Pr(H_y >= λ)`.
    pub p2: BigRational,
    /// `p1 + p2`.
    pub p_j: BigRational,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisagreementF64 {
    pub p1: f64,
    pub p2: f64,
    pub p_j: f64,
}

fn check_sizes(n: u64, k: u64, sizes: &[u64]) -> Result<(), LabError> {
    if k > n {
        return Err(LabError::QueryTooLarge { k, n });
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > n) {
        return Err(LabError::ClassExceedsUniverse { size: s, n });
    }
    Ok(())
}

/// Disagreement of a size-`k` query between independent uniform sets of
/// sizes `x` and `y`.
pub fn disagreement_for_sizes(n: u64, k: u64, x: u64, y: u64, lambda: u32) -> Result<Disagreement, LabError> {
    if lambda == 0 {
        return Err(LabError::ZeroLambda);
    }
    check_sizes(n, k, &[x, y])?;
    let a = tail_ge(n, k, x, lambda);
    let b = tail_ge(n, k, y, lambda);
    let p1 = &a * (BigRational::one() - &b);
    let p2 = (BigRational::one() - &a) * &b;
    let p_j = &p1 + &p2;
    Ok(Disagreement { p1, p2, p_j })
}

/// Floating-point [`disagreement_for_sizes`] for universes too large for
/// exact arithmetic.
pub fn disagreement_for_sizes_f64(n: u64, k: u64, x: u64, y: u64, lambda: u32) -> Result<DisagreementF64, LabError> {
    if lambda == 0 {
        return Err(LabError::ZeroLambda);
    }
    check_sizes(n, k, &[x, y])?;
    let tail = |s| {
        let params = HypergeomParams::new(n, k, s).expect("checked sizes");
        hypergeom_tail_ge_f64(&params, u64::from(lambda))
    };
    let (a, b) = (tail(x), tail(y));
    let (p1, p2) = (a * (1.0 - b), (1.0 - a) * b);
    Ok(DisagreementF64 { p1, p2, p_j: p1 + p2 })
}

/// `P_j`, `P_j^{(1)}`, `P_j^{(2)}` for level `j` of the coupling.
pub fn exact_disagreement(k: u64, j: usize, classes: &SizeClasses, n: u64, lambda: u32) -> Result<Disagreement, LabError> {
    let (x, y) = classes.level_sizes(j)?;
    disagreement_for_sizes(n, k, x, y, lambda)
}

/// Sums of `P^{(1)}` and `P^{(2)}` over one bucket of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSums {
    pub levels: Vec<usize>,
    pub p1: BigRational,
    pub p2: BigRational,
}

impl BucketSums {
    fn new(levels: Vec<usize>, per_level: &[Disagreement]) -> Self {
        let p1 = levels.iter().map(|&j| per_level[j - 1].p1.clone()).sum();
        let p2 = levels.iter().map(|&j| per_level[j - 1].p2.clone()).sum();
        Self { levels, p1, p2 }
    }

    pub fn within(&self, bound: &BigRational) -> bool {
        &self.p1 <= bound && &self.p2 <= bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketReport {
    pub k: u64,
    /// `max{j ∈ Z : kLβ^{2j}/n <= λ}`; `None` stands for `+∞` (`k = 0`).
    pub m_star: Option<i64>,
    pub per_level: Vec<Disagreement>,
    pub low: BucketSums,
    pub mid: BucketSums,
    pub high: BucketSums,
    /// `Σ_j P_j`.
    pub total: BigRational,
    /// `β²/(β²−1) · min(1, kLβ^{2m_*}/(λn))`.
    pub low_bound: BigRational,
    pub mid_bound: BigRational,
    /// `e^{−λ/4}/(1 − e^{−λ/4})`, rounded to the nearest double.
    pub high_bound: f64,
}

impl BucketReport {
    pub fn high_bound_exact(&self) -> BigRational {
        rational_from_f64(self.high_bound)
    }

    /// All three bucket estimates hold for both `P^{(1)}` and `P^{(2)}`.
    pub fn bounds_hold(&self) -> bool {
        self.low.within(&self.low_bound) && self.mid.within(&self.mid_bound) && self.high.within(&self.high_bound_exact())
    }
}

/// `β^{2j}` as an exact rational for any integer `j`.
fn beta_pow2(beta: u64, j: i64) -> BigRational {
    let p = num_traits::pow(BigUint::from(beta), 2 * j.unsigned_abs() as usize);
    let p = BigRational::from_integer(p.into());
    if j >= 0 {
        p
    } else {
        p.recip()
    }
}

fn m_star(k: u64, classes: &SizeClasses, n: u64, lambda: u32) -> Option<i64> {
    if k == 0 {
        return None;
    }
    let lhs = BigRational::from_integer((u128::from(k) * u128::from(classes.l)).into());
    let cap = BigRational::from_integer((u128::from(lambda) * u128::from(n)).into());
    let ok = |j: i64| &lhs * beta_pow2(classes.beta, j) <= cap;
    let mut j = 0i64;
    if ok(0) {
        while ok(j + 1) {
            j += 1;
        }
    } else {
        while !ok(j) {
            j -= 1;
        }
    }
    Some(j)
}

pub fn bucket_decomposition(k: u64, classes: &SizeClasses, n: u64, lambda: u32) -> Result<BucketReport, LabError> {
    classes.check_universe(n)?;
    let per_level = (1..=classes.m)
        .map(|j| exact_disagreement(k, j, classes, n, lambda))
        .collect::<Result<Vec<_>, _>>()?;
    let star = m_star(k, classes, n, lambda);
    let levels: Vec<usize> = (1..=classes.m).collect();
    let (low, mid, high): (Vec<usize>, Vec<usize>, Vec<usize>) = match star {
        None => (levels, vec![], vec![]),
        Some(s) => (
            levels.iter().copied().filter(|&j| j as i64 <= s).collect(),
            levels.iter().copied().filter(|&j| j as i64 == s + 1).collect(),
            levels.iter().copied().filter(|&j| j as i64 >= s + 2).collect(),
        ),
    };
    let b2 = BigRational::from_integer((classes.beta * classes.beta).into());
    let geometric = &b2 / (&b2 - BigRational::one());
    let low_bound = match star {
        None => BigRational::zero(),
        Some(s) => {
            let scale = BigRational::new((u128::from(k) * u128::from(classes.l)).into(), (u128::from(lambda) * u128::from(n)).into())
                * beta_pow2(classes.beta, s);
            &geometric * scale.min(BigRational::one())
        }
    };
    let q = (-f64::from(lambda) / 4.0).exp();
    let total = per_level.iter().map(|d| d.p_j.clone()).sum();
    Ok(BucketReport {
        k,
        m_star: star,
        low: BucketSums::new(low, &per_level),
        mid: BucketSums::new(mid, &per_level),
        high: BucketSums::new(high, &per_level),
        per_level,
        total,
        low_bound,
        mid_bound: BigRational::one(),
        high_bound: q / (1.0 - q),
    })
}

/// Union bound on the induced total variation through the coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBound {
    /// `(1/m) Σ_j P_j(|Q_i|)` per query.
    pub per_query: Vec<BigRational>,
    pub tv_upper: BigRational,
}

pub fn coupling_tv_bound(plan: &QueryPlan, classes: &SizeClasses, n: u64) -> Result<CouplingBound, LabError> {
    classes.check_universe(n)?;
    let lambda = plan.lambda();
    let m = BigRational::from_integer(classes.m.into());
    let mut cache: HashMap<usize, BigRational> = HashMap::new();
    let mut per_query = Vec::with_capacity(plan.len());
    for q in plan.queries() {
        let k = q.size();
        if let Entry::Vacant(slot) = cache.entry(k) {
            let mut acc = BigRational::zero();
            for j in 1..=classes.m {
                acc += exact_disagreement(k as u64, j, classes, n, lambda)?.p_j;
            }
            slot.insert(acc / &m);
        }
        per_query.push(cache[&k].clone());
    }
    let tv_upper = per_query.iter().cloned().sum();
    Ok(CouplingBound { per_query, tv_upper })
}

/// Floating-point [`coupling_tv_bound`]: `(per_query, tv_upper)`.
pub fn coupling_tv_bound_f64(plan: &QueryPlan, classes: &SizeClasses, n: u64) -> Result<(Vec<f64>, f64), LabError> {
    classes.check_universe(n)?;
    let lambda = plan.lambda();
    let mut cache: HashMap<usize, f64> = HashMap::new();
    let mut per_query = Vec::with_capacity(plan.len());
    for q in plan.queries() {
        let k = q.size();
        if let Entry::Vacant(slot) = cache.entry(k) {
            let mut acc = 0.0;
            for j in 1..=classes.m {
                let (x, y) = classes.level_sizes(j)?;
                acc += disagreement_for_sizes_f64(n, k as u64, x, y, lambda)?.p_j;
            }
            slot.insert(acc / classes.m as f64);
        }
        per_query.push(cache[&k]);
    }
    let total = per_query.iter().sum();
    Ok((per_query, total))
}

/// Monte Carlo estimate of `Pr(Q_i(X) != Q_i(Y))` per query under the
/// coupling, with standard errors.
pub fn disagreement_mc<R: Rng + ?Sized>(
    plan: &QueryPlan,
    classes: &SizeClasses,
    n: u64,
    samples: u64,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, LabError> {
    let mut hits = vec![0u64; plan.len()];
    for _ in 0..samples {
        let pair = sample_coupling(classes, n, rng)?;
        for (h, q) in hits.iter_mut().zip(plan.queries()) {
            let a = evaluate(q, &pair.x, plan.lambda())?;
            let b = evaluate(q, &pair.y, plan.lambda())?;
            *h += u64::from(a != b);
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / samples as f64;
            (p, (p * (1.0 - p) / samples as f64).sqrt())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::build_size_classes;

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    /// Enumerates every (W, X, Y) with |W| = k, |X| = x, |Y| = y inside [n].
    fn brute(n: u32, k: u32, x: u32, y: u32, lambda: u32) -> (BigRational, BigRational) {
        let subsets = |s: u32| (0u32..(1 << n)).filter(move |m| m.count_ones() == s);
        let w = subsets(k).next().unwrap();
        let (mut c1, mut c2, mut total) = (0i64, 0i64, 0i64);
        for a in subsets(x) {
            for b in subsets(y) {
                let fa = (a & w).count_ones() >= lambda;
                let fb = (b & w).count_ones() >= lambda;
                c1 += i64::from(fa && !fb);
                c2 += i64::from(!fa && fb);
                total += 1;
            }
        }
        (rat(c1, total), rat(c2, total))
    }

    #[test]
    fn two_by_one_example() {
        let d = disagreement_for_sizes(4, 2, 2, 1, 1).unwrap();
        assert_eq!(d.p1, rat(5, 12));
        assert_eq!(d.p2, rat(1, 12));
        assert_eq!(d.p_j, rat(1, 2));
        assert_eq!(brute(4, 2, 2, 1, 1), (d.p1, d.p2));
    }

    #[test]
    fn matches_brute_force() {
        for (n, k, x, y, lambda) in [(6, 3, 4, 2, 1), (7, 4, 4, 2, 2), (8, 5, 6, 3, 2), (8, 2, 3, 1, 1), (7, 7, 5, 2, 3)] {
            let d = disagreement_for_sizes(n.into(), k.into(), x.into(), y.into(), lambda).unwrap();
            assert_eq!(brute(n, k, x, y, lambda), (d.p1.clone(), d.p2.clone()), "{n} {k} {x} {y} {lambda}");
            let f = disagreement_for_sizes_f64(n.into(), k.into(), x.into(), y.into(), lambda).unwrap();
            assert!((f.p_j - crate::probability::to_f64(&d.p_j)).abs() < 1e-14);
        }
    }

    #[test]
    fn trivial_queries() {
        let c = build_size_classes(1.5, 1, 4).unwrap();
        assert!(exact_disagreement(0, 1, &c, 4, 1).unwrap().p_j.is_zero());
        assert!(exact_disagreement(4, 1, &c, 4, 1).unwrap().p_j.is_zero());
        // x = 4 always hits; y = 2 misses when it avoids both query items.
        let d = exact_disagreement(2, 1, &c, 4, 1).unwrap();
        assert_eq!(d.p1, crate::probability::rational_from_u64(1, 6));
        assert!(d.p2.is_zero());
        assert!(exact_disagreement(2, 2, &c, 4, 1).is_err());
        assert!(exact_disagreement(2, 1, &c, 3, 1).is_err());
    }

    #[test]
    fn m_star_example() {
        let c = build_size_classes(2.0, 1, 100).unwrap();
        let r = bucket_decomposition(10, &c, 100, 1).unwrap();
        assert_eq!(r.m_star, Some(1));
        assert_eq!((r.low.levels.clone(), r.mid.levels.clone(), r.high.levels.clone()), (vec![1], vec![2], vec![]));
        assert!(r.bounds_hold());
        let zero = bucket_decomposition(0, &c, 100, 1).unwrap();
        assert_eq!(zero.m_star, None);
        assert_eq!(zero.low.levels, vec![1, 2]);
        assert!(zero.total.is_zero());
        // kL/n > λ already at j = 0.
        let wide = build_size_classes(2.0, 2, 200).unwrap();
        let big = bucket_decomposition(150, &wide, 200, 1).unwrap();
        assert_eq!(big.m_star, Some(-1));
        assert!(big.low.levels.is_empty() && big.mid.levels.is_empty());
        assert!(big.bounds_hold());
    }
}
