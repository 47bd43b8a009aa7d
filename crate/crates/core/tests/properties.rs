use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use tgt_core::oracle::{evaluate, DefectSet, Query, QueryPlan};
use tgt_core::probability::{
    ec_gap, hypergeom_pmf, p_lambda, rational_from_u64, HypergeomParams, HypergeomTable,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn p_lambda_monotone_in_p(d in 1u64..5000, lambda in 1u32..7, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p_lambda(d, hi, lambda) >= p_lambda(d, lo, lambda));
    }

    #[test]
    fn p_lambda_monotone_in_threshold(d in 1u64..5000, lambda in 1u32..7, p in 0.0f64..1.0) {
        prop_assert!(p_lambda(d, p, lambda + 1) <= p_lambda(d, p, lambda));
    }

    /// Below the matched scale, shrinking `p` by `α^{1/4}` loses at least the
    /// factor `α^{(λ−1)/4}`.
    #[test]
    fn small_p_contraction_threshold(
        lambda in 2u32..6,
        alpha in 1.0001f64..=2.0,
        extra in 0u64..2000,
        frac in 0.0f64..=1.0,
    ) {
        let d = u64::from(lambda) + extra;
        let c = 2.0 * f64::from(lambda) / (1.0 - alpha.powf(-0.25));
        let x = frac * f64::from(lambda) / (c * d as f64);
        let lhs = p_lambda(d, x, lambda);
        let rhs = alpha.powf(-(f64::from(lambda) - 1.0) / 4.0) * p_lambda(d, alpha.powf(0.25) * x, lambda);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    /// The λ = 1 counterpart with `c = α`. The chain through `dx` gives the
    /// ratio `α^{1/4} − α^{−1/2}`; the actual contraction ratio stays below 1.
    #[test]
    fn small_p_contraction_single(alpha in 1.0001f64..=2.0, d in 1u64..100_000, frac in 0.0f64..=1.0) {
        let x = frac / (alpha * d as f64);
        let small = p_lambda(d, x, 1);
        let large = p_lambda(d, alpha.powf(0.25) * x, 1);
        let chain = alpha.powf(0.25) - alpha.powf(-0.5);
        prop_assert!(large >= chain * small * (1.0 - 1e-12));
        if x > 0.0 {
            prop_assert!(small < large, "{small} vs {large}");
            let endpoint = p_lambda(d, 1.0 / (alpha * d as f64), 1)
                / p_lambda(d, alpha.powf(0.25) / (alpha * d as f64), 1);
            prop_assert!(small / large <= endpoint * (1.0 + 1e-9));
            prop_assert!(endpoint < 1.0);
        }
    }

    #[test]
    fn threshold_monotone_in_lambda(
        n in 1u64..3000,
        seed in any::<u64>(),
        lambda in 1u32..6,
        bump in 0u32..4,
    ) {
        use rand::seq::index::sample;
        use tgt_core::stream::derive_stream;
        let mut rng = derive_stream(seed, "monotone");
        let w = (n as usize) / 2 + 1;
        let q = Query::from_items(n, sample(&mut rng, n as usize, w.min(n as usize)).iter().map(|i| i as u32 + 1)).unwrap();
        let b = DefectSet::from_items(n, sample(&mut rng, n as usize, (n as usize).min(12)).iter().map(|i| i as u32 + 1)).unwrap();
        prop_assert!(evaluate(&q, &b, lambda + bump).unwrap() <= evaluate(&q, &b, lambda).unwrap());
    }

    #[test]
    fn plan_text_round_trip(n in 1u64..200, lambda in 1u32..5, seed in any::<u64>(), q in 0usize..12) {
        use rand::Rng;
        use tgt_core::stream::derive_stream;
        let mut rng = derive_stream(seed, "text");
        let queries = (0..q)
            .map(|_| Query::from_items(n, (1..=n as u32).filter(|_| rng.random_bool(0.3))).unwrap())
            .collect();
        let plan = QueryPlan::new(n, lambda, queries).unwrap();
        prop_assert_eq!(QueryPlan::from_text(&plan.to_text()).unwrap(), plan);
        let set = DefectSet::from_items(n, (1..=n as u32).filter(|_| rng.random_bool(0.1))).unwrap();
        prop_assert_eq!(DefectSet::from_text(&set.to_text()).unwrap(), set);
    }

    #[test]
    fn hypergeom_normalized_with_exact_mean(n in 1u64..=200, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let k = (a * n as f64) as u64;
        let s = (b * n as f64) as u64;
        let p = HypergeomParams::new(n, k, s).unwrap();
        let (sum, mean) = (0..=s).fold((BigRational::zero(), BigRational::zero()), |(t, m), r| {
            let w = hypergeom_pmf(&p, r);
            (t + &w, m + w * BigRational::from_integer(r.into()))
        });
        prop_assert!(sum.is_one());
        prop_assert_eq!(mean, p.mean());
    }
}

#[test]
fn ec_gap_grid() {
    for &c in &[1.0, 1.5, 2.0, 5.0, 10.0] {
        for e in 1..=20 {
            let g = ec_gap(c, f64::from(1u32 << e)).unwrap();
            assert!(g.gap >= -1e-12 && g.gap <= g.bound + 1e-12, "c={c} x=2^{e}: {g:?}");
        }
    }
}

/// `1 − (1 − p)^d` in 256-bit fixed point by repeated squaring. `p` is a
/// dyadic rational, so `1 − p` is exact at this scale.
fn miss_fixed(d: u64, p: f64) -> f64 {
    use num_traits::ToPrimitive;
    const BITS: usize = 256;
    let one = BigUint::one() << BITS;
    let pr = tgt_core::probability::rational_from_f64(p) * BigRational::from_integer(one.clone().into());
    let q = &one - BigUint::try_from(pr.to_integer()).unwrap();
    let (mut acc, mut base, mut e) = (one.clone(), q, d);
    while e > 0 {
        if e & 1 == 1 {
            acc = (&acc * &base) >> BITS;
        }
        base = (&base * &base) >> BITS;
        e >>= 1;
    }
    let hit = &one - acc;
    hit.to_f64().unwrap() / one.to_f64().unwrap()
}

#[test]
fn p_lambda_single_matches_closed_form() {
    for &d in &[1u64, 7, 100, 12_345, 1_000_000] {
        for &p in &[1e-12, 1e-8, 1e-5, 0.001, 0.05, 0.3, 0.7] {
            let closed = miss_fixed(d, p);
            let v = p_lambda(d, p, 1);
            assert!((v - closed).abs() <= 1e-12 * closed, "d={d} p={p}: {v} vs {closed}");
        }
    }
}

/// Markov and the lower-tail Chernoff estimate hold against exact tails on
/// every small hypergeometric law.
#[test]
fn tail_bounds_exhaustive_small() {
    use tgt_core::probability::{chernoff_lower_tail_bound, rational_from_f64};
    for n in 1u64..=30 {
        for k in 0..=n {
            for s in 0..=n {
                let p = HypergeomParams::new(n, k, s).unwrap();
                let t = HypergeomTable::new(&p);
                let den = t.denominator();
                for gamma in 1..=s {
                    // count/C(n,s) <= ks/(γn)
                    let lhs = t.tail_ge_count(gamma) * BigUint::from(gamma * n);
                    assert!(lhs <= BigUint::from(k * s) * den, "n={n} k={k} s={s} γ={gamma}");
                }
                let mu = rational_from_u64(k * s, n);
                if mu.is_zero() {
                    continue;
                }
                for num in 0..4u64 {
                    let xi = &mu * rational_from_u64(num, 4);
                    let floor = xi.floor().to_integer();
                    let below = t.cdf(u64::try_from(floor).unwrap());
                    let xi_f = num as f64 / 4.0 * p.mean_f64();
                    let bound = chernoff_lower_tail_bound(&p, xi_f).unwrap();
                    assert!(below <= rational_from_f64(bound), "n={n} k={k} s={s} ξ={xi_f}");
                }
            }
        }
    }
}
