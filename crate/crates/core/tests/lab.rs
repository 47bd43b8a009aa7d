use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::Rng;

use tgt_core::lab::{
    bucket_decomposition, build_size_classes, coupling_pushforward_check, coupling_tv_bound, disagreement_for_sizes_f64, disagreement_mc,
    distinguisher_advantage, induced_exact, optimal_rule_advantage, tv_by_events, tv_distance, DiscreteDistribution,
    ExactLimits, Parity, SizeClasses,
};
use tgt_core::oracle::{Query, QueryPlan};
use tgt_core::probability::to_f64;
use tgt_core::stream::{derive_indexed, derive_stream};

fn random_plan<R: Rng>(n: u64, lambda: u32, q: usize, rng: &mut R) -> QueryPlan {
    let queries = (0..q)
        .map(|_| {
            let k = rng.random_range(0..=n as usize);
            Query::from_items(n, sample(rng, n as usize, k).iter().map(|i| i as u32 + 1)).unwrap()
        })
        .collect();
    QueryPlan::new(n, lambda, queries).unwrap()
}

/// A small instance with valid classes: `(n, λ, classes)`.
fn small_instance<R: Rng>(rng: &mut R) -> (u64, u32, SizeClasses) {
    loop {
        let lambda = rng.random_range(1..=2u32);
        let alpha = [1.5, 2.0, 2.5, 3.0][rng.random_range(0..4)];
        let l = rng.random_range(lambda as u64..=2);
        let n = rng.random_range(8..=18u64);
        let u = rng.random_range(l + 1..=n);
        if let Ok(c) = build_size_classes(alpha, l, u) {
            return (n, lambda, c);
        }
    }
}

proptest! {
    #[test]
    fn windows_disjoint_for_every_build(alpha in 1.0001f64..12.0, l in 1u64..50, u in 2u64..10_000_000) {
        if let Ok(c) = build_size_classes(alpha, l, u) {
            prop_assert!(c.windows_disjoint());
            prop_assert!(c.m >= 1);
            prop_assert!(c.largest() <= u);
            let next = u128::from(c.largest()) * u128::from(c.beta * c.beta);
            prop_assert!(next > u128::from(u));
        }
    }
}

#[test]
fn coupling_inequality_on_random_small_instances() {
    for i in 0..60 {
        let mut rng = derive_indexed(11, "coupling-instance", i);
        let (n, lambda, c) = small_instance(&mut rng);
        let q = rng.random_range(1..=4);
        let plan = random_plan(n, lambda, q, &mut rng);
        let even = induced_exact(&plan, &c, Parity::Even, n, ExactLimits::default()).unwrap();
        let odd = induced_exact(&plan, &c, Parity::Odd, n, ExactLimits::default()).unwrap();
        let tv = tv_distance(&even, &odd);
        let bound = coupling_tv_bound(&plan, &c, n).unwrap();
        assert!(tv <= bound.tv_upper, "instance {i}: {} > {}", to_f64(&tv), to_f64(&bound.tv_upper));
        // Optimal rule reaches the distance; the event definition agrees.
        assert_eq!(optimal_rule_advantage(&even, &odd), tv);
        if even.support_size().max(odd.support_size()) <= 8 {
            assert_eq!(tv_by_events(&even, &odd).unwrap(), tv);
        }
    }
}

#[test]
fn coupling_bound_example_twelve_items() {
    let c = build_size_classes(2.0, 1, 9).unwrap();
    assert_eq!((c.even_sizes.clone(), c.odd_sizes.clone()), (vec![9], vec![3]));
    let mut rng = derive_stream(5, "twelve");
    let plan = random_plan(12, 1, 3, &mut rng);
    let even = induced_exact(&plan, &c, Parity::Even, 12, ExactLimits::default()).unwrap();
    let odd = induced_exact(&plan, &c, Parity::Odd, 12, ExactLimits::default()).unwrap();
    let bound = coupling_tv_bound(&plan, &c, 12).unwrap();
    assert!(tv_distance(&even, &odd) <= bound.tv_upper);
    let mc = disagreement_mc(&plan, &c, 12, 200_000, &mut rng).unwrap();
    for (exact, (p, se)) in bound.per_query.iter().zip(mc) {
        assert!((to_f64(exact) - p).abs() <= 4.0 * se.max(1e-9), "{} vs {p} ± {se}", to_f64(exact));
    }
}

#[test]
fn full_queries_carry_no_information() {
    let c = build_size_classes(1.5, 1, 16).unwrap();
    let plan = QueryPlan::new(16, 1, vec![Query::full(16).unwrap(); 3]).unwrap();
    assert!(coupling_tv_bound(&plan, &c, 16).unwrap().tv_upper.is_zero());
}

fn all_rules(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << k).map(move |m| (0..k).map(|i| m >> i & 1 == 1).collect())
}

#[test]
fn no_rule_beats_the_distance() {
    let mut rng = derive_stream(3, "rules");
    for _ in 0..300 {
        let k = rng.random_range(1..=4usize);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut w: Vec<u64> = (0..k).map(|_| rng.random_range(0..6)).collect();
            if w.iter().all(|&x| x == 0) {
                w = vec![1; k];
            }
            let total: u64 = w.iter().sum();
            DiscreteDistribution::new(
                w.iter().enumerate().map(|(i, &x)| (i as u8, BigRational::new(x.into(), total.into()))),
            )
            .unwrap()
        };
        let (d0, d1) = (draw(&mut rng), draw(&mut rng));
        let tv = tv_distance(&d0, &d1);
        let mut best = BigRational::zero();
        for rule in all_rules(k) {
            let adv = distinguisher_advantage(|o: &u8| rule.get(*o as usize).copied(), &d0, &d1).unwrap();
            assert!(adv <= tv);
            best = best.max(adv);
        }
        assert_eq!(best, tv);
    }
}

#[test]
fn random_rules_on_induced_distributions() {
    let mut rng = derive_stream(4, "induced-rules");
    let c = build_size_classes(2.0, 1, 12).unwrap();
    let plan = random_plan(14, 1, 4, &mut rng);
    let even = induced_exact(&plan, &c, Parity::Even, 14, ExactLimits::default()).unwrap();
    let odd = induced_exact(&plan, &c, Parity::Odd, 14, ExactLimits::default()).unwrap();
    let tv = tv_distance(&even, &odd);
    let outcomes: Vec<_> = even.outcomes().chain(odd.outcomes()).cloned().collect();
    for _ in 0..2000 {
        let bits: std::collections::BTreeMap<_, bool> = outcomes.iter().map(|o| (o.clone(), rng.random())).collect();
        let adv = distinguisher_advantage(|o| bits.get(o).copied(), &even, &odd).unwrap();
        assert!(adv <= tv);
    }
}

#[test]
fn bucket_bounds_on_random_grid() {
    let mut rng = derive_stream(6, "buckets");
    let mut checked = 0;
    while checked < 250 {
        let alpha = rng.random_range(1.01..6.0);
        let l = rng.random_range(1..=4u64);
        let n = rng.random_range(20..=3000u64);
        let u = rng.random_range(l + 1..=n);
        let Ok(c) = build_size_classes(alpha, l, u) else { continue };
        let lambda = rng.random_range(1..=(l.min(4) as u32));
        let k = rng.random_range(0..=n);
        let r = bucket_decomposition(k, &c, n, lambda).unwrap();
        assert!(r.bounds_hold(), "n={n} k={k} L={l} β={} λ={lambda}: {r:?}", c.beta);
        let sum = r.low.p1.clone() + &r.low.p2 + &r.mid.p1 + &r.mid.p2 + &r.high.p1 + &r.high.p2;
        assert_eq!(sum, r.total);
        checked += 1;
    }
}

#[test]
fn disagreement_total_bounded_as_levels_grow() {
    // m · (per-query disagreement) is the level total, which the three bucket
    // estimates cap by a constant independent of m.
    for lambda in 1..=2u32 {
        let n = 1u64 << 20;
        let mut prev_m = 0;
        for e in 3..=20u32 {
            let c = build_size_classes(1.5, 2, 1u64 << e).unwrap();
            if c.m == prev_m {
                continue;
            }
            prev_m = c.m;
            let b2 = (c.beta * c.beta) as f64;
            let q = (-f64::from(lambda) / 4.0).exp();
            let cap = 2.0 * (b2 / (b2 - 1.0) + 1.0 + q / (1.0 - q));
            for k in [1u64, 100, 10_000, n / 2, n] {
                let total: f64 = (1..=c.m)
                    .map(|j| {
                        let (x, y) = c.level_sizes(j).unwrap();
                        disagreement_for_sizes_f64(n, k, x, y, lambda).unwrap().p_j
                    })
                    .sum();
                assert!(total <= cap, "λ={lambda} m={} k={k}: {total} > {cap}", c.m);
            }
        }
    }
}

#[test]
fn pushforward_matches_independent_sampling() {
    for i in 0..4 {
        let mut rng = derive_indexed(8, "pushforward", i);
        let c = build_size_classes(1.5, 1, 16).unwrap();
        let plan = random_plan(16, 1, 3, &mut rng);
        let r = coupling_pushforward_check(&plan, &c, 16, 40_000, &mut rng).unwrap();
        assert!(r.within(4.0), "{r:?}");
    }
}

#[test]
fn exact_masses_sum_to_one() {
    let mut rng = derive_stream(9, "masses");
    for _ in 0..10 {
        let (n, lambda, c) = small_instance(&mut rng);
        let plan = random_plan(n, lambda, 3, &mut rng);
        for parity in [Parity::Even, Parity::Odd] {
            let d = induced_exact(&plan, &c, parity, n, ExactLimits::default()).unwrap();
            let total: BigRational = d.iter().map(|(_, m)| m.clone()).sum();
            assert!(total.is_one());
        }
    }
}
