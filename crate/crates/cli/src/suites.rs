//! Check suites shared by `selftest` and the acceptance target. Each suite
//! is deterministic given its seed and reports cases run and failures seen.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::index::sample;
use rand::Rng;

use tgt_core::estimator::{
    calibrate, decide_from_estimates, simulate_estimate, EstimatorConfig, EstimatorError, PlanLayout,
};
use tgt_core::lab::{
    advantage_mc, bucket_decomposition, build_size_classes, coupling_pushforward_check, coupling_tv_bound,
    derandomize, distinguisher_advantage, estimator_generator, induced_exact, optimal_rule_advantage, tv_distance,
    DiscreteDistribution, ExactLimits, LabError, Parity, SizeClasses,
};
use tgt_core::oracle::{Query, QueryPlan};
use tgt_core::probability::{
    chernoff_lower_tail_bound, ec_gap, p_lambda, rational_from_f64, rational_from_u64, to_f64, HypergeomParams,
    HypergeomTable,
};
use tgt_core::stream::{derive_indexed, derive_stream};

/// Failure messages kept per suite; the count is always complete.
const KEPT_FAILURES: usize = 5;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
    pub failed: u64,
    pub examples: Vec<String>,
    /// Measured quantities worth printing.
    pub notes: Vec<(String, String)>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), ..Self::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.examples.len() < KEPT_FAILURES {
                self.examples.push(what());
            }
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.cases > 0
    }

    /// One-line description: cases, failures, notes, first failure.
    pub fn detail(&self) -> String {
        let mut s = format!("{} cases, {} failed", self.cases, self.failed);
        for (k, v) in &self.notes {
            s.push_str(&format!(", {k}={v}"));
        }
        if let Some(e) = self.examples.first() {
            s.push_str(&format!("; first failure: {e}"));
        }
        s
    }
}

fn error_case(report: &mut SuiteReport, e: impl std::fmt::Display) {
    report.check(false, || e.to_string());
}

/// Per-size outcome of a batch of simulated estimator runs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub d: u64,
    pub trials: u64,
    pub successes: u64,
    pub mean_queries: f64,
}

/// Runs `trials` count-simulated estimates at each `d`; a trial succeeds
/// when `D ∈ [d, αd]`.
pub fn estimator_batches(cfg: &EstimatorConfig, ds: &[u64], trials: u64, seed: u64) -> Result<Vec<TrialBatch>, EstimatorError> {
    let k = calibrate(cfg)?;
    let layout = PlanLayout::new(cfg, &k)?;
    let mut out = Vec::with_capacity(ds.len());
    for &d in ds {
        let (mut ok, mut queries) = (0u64, 0u64);
        for trial in 0..trials {
            let mut rng = derive_indexed(seed, &format!("estimate-d{d}"), trial);
            match simulate_estimate(cfg, &k, &layout, d, &mut rng) {
                Ok(r) => {
                    ok += u64::from(r.contains(d, cfg.alpha));
                    queries += r.queries_used;
                }
                Err(EstimatorError::NoLevelFound) => queries += layout.total(),
                Err(e) => return Err(e),
            }
        }
        out.push(TrialBatch { d, trials, successes: ok, mean_queries: queries as f64 / trials as f64 });
    }
    Ok(out)
}

/// End-to-end containment rate at the standard configuration, for `λ = 1`
/// with the small-`d` fallback and for `λ = 2` with `L` raised to `d′`.
pub fn estimator_end_to_end(trials: u64, min_rate: f64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("estimator-end-to-end");
    let sizes = [1u64, 4, 16, 64, 256, 1024, 4096, 10_000];
    for lambda in [1u32, 2] {
        let base = EstimatorConfig::new(10_000, lambda, 4.0, u64::from(lambda), 10_000, 0.1);
        let d_prime = match base.as_ref().map_err(Clone::clone).and_then(calibrate) {
            Ok(k) => k.d_prime,
            Err(e) => {
                error_case(&mut r, e);
                continue;
            }
        };
        let base = base.expect("calibrated");
        let l = if lambda == 1 { 1 } else { d_prime };
        let cfg = EstimatorConfig { l, ..base }.with_singleton_fallback(lambda == 1);
        let ds: Vec<u64> = sizes.iter().copied().filter(|&d| d >= l.max(d_prime) && d <= cfg.u).collect();
        r.note(&format!("lambda{lambda}.L"), l);
        r.note(&format!("lambda{lambda}.d_prime"), d_prime);
        match estimator_batches(&cfg, &ds, trials, derive_stream(seed, "e2e").random()) {
            Ok(batches) => {
                for b in batches {
                    let rate = b.successes as f64 / b.trials as f64;
                    r.note(&format!("lambda{lambda}.d{}", b.d), format!("{}/{}", b.successes, b.trials));
                    r.check(rate >= min_rate, || format!("λ={lambda} d={}: rate {rate}", b.d));
                }
            }
            Err(e) => error_case(&mut r, e),
        }
    }
    r
}

/// Log-spaced integer sizes in `[lo, hi]`.
pub fn log_spaced(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    (0..points)
        .map(|i| {
            let f = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            ((a + f * (b - a)).exp().round() as u64).clamp(lo, hi)
        })
        .collect()
}

/// The decision rule fed exact hit probabilities always contains `d`.
pub fn noiseless_decisions(points: usize, n: u64) -> SuiteReport {
    let mut r = SuiteReport::new("noiseless-decisions");
    for lambda in 1..=3u32 {
        for alpha in [1.5, 2.0, 4.0] {
            let cfg = match EstimatorConfig::new(n, lambda, alpha, u64::from(lambda), n, 0.1) {
                Ok(c) => c,
                Err(e) => {
                    error_case(&mut r, e);
                    continue;
                }
            };
            let k = match calibrate(&cfg) {
                Ok(k) => k,
                Err(e) => {
                    error_case(&mut r, e);
                    continue;
                }
            };
            for d in log_spaced(cfg.l.max(k.d_prime), cfg.u, points) {
                let exact: Vec<f64> = k.grid.iter().map(|&p| p_lambda(d, p, lambda)).collect();
                match decide_from_estimates(&cfg, &k, &exact) {
                    Ok(res) => r.check(res.contains(d, alpha), || format!("λ={lambda} α={alpha} d={d}: D={}", res.d_hat)),
                    Err(e) => error_case(&mut r, format!("λ={lambda} α={alpha} d={d}: {e}")),
                }
            }
        }
    }
    r
}

/// Exact relations between the calibrated constants and the query count.
pub fn query_count_formula() -> SuiteReport {
    let mut r = SuiteReport::new("query-count-formula");
    let n = 1u64 << 22;
    for lambda in 1..=3u32 {
        for alpha in [1.5f64, 2.0, 4.0] {
            for l in [u64::from(lambda), 4 * u64::from(lambda)] {
                let mut prev: Option<usize> = None;
                for e in 8..=22u32 {
                    let u = 1u64 << e;
                    let Ok(cfg) = EstimatorConfig::new(n, lambda, alpha, l, u, 0.1) else { continue };
                    let k = match calibrate(&cfg) {
                        Ok(k) => k,
                        Err(err) => {
                            error_case(&mut r, err);
                            continue;
                        }
                    };
                    let levels = k.levels();
                    let ratio = u as f64 / l as f64;
                    let cap = (4.0 * ratio.ln() / alpha.ln()).ceil() as usize + 10;
                    r.check(k.main_queries() == k.t * levels as u64, || format!("λ={lambda} α={alpha} U={u}: t(G+1)"));
                    r.check(levels <= cap, || format!("λ={lambda} α={alpha} L={l} U={u}: G+1={levels} > {cap}"));
                    let t_cap = ((128.0 / (k.delta_alpha * k.delta_alpha)) * (4.0 * levels as f64 / cfg.delta).ln()).ceil();
                    r.check(k.t as f64 <= t_cap, || format!("λ={lambda} α={alpha}: t={} > {t_cap}", k.t));
                    if let Ok(layout) = PlanLayout::new(&cfg, &k) {
                        r.check(layout.main_len() == k.t * levels as u64, || "layout main length".into());
                        r.check(
                            layout.total() == layout.main_len() + layout.gate_len() + layout.singletons,
                            || "layout total".into(),
                        );
                    }
                    if let Some(p) = prev {
                        let step = 4.0 * 2f64.ln() / alpha.ln();
                        let diff = levels as f64 - p as f64;
                        r.check((diff - step).abs() <= 1.0 + 1e-9, || {
                            format!("λ={lambda} α={alpha} L={l} U={u}: doubling added {diff}, expected {step}±1")
                        });
                    }
                    prev = Some(levels);
                }
            }
        }
    }
    r
}

/// Markov for every integer threshold and the Chernoff lower tail at
/// `ξ ∈ {0, μ/4, μ/2, 3μ/4}` against exact tails, for every law with `n <= n_max`.
pub fn tail_bounds(n_max: u64) -> SuiteReport {
    let mut r = SuiteReport::new("tail-bounds");
    for n in 1..=n_max {
        for k in 0..=n {
            for s in 0..=n {
                let p = HypergeomParams::new(n, k, s).expect("valid parameters");
                let table = HypergeomTable::new(&p);
                let den = table.denominator();
                // Pr(H >= γ) = count / C(n, s) <= ks / (γ n)
                for gamma in 1..=s.max(1) {
                    let lhs = table.tail_ge_count(gamma) * BigUint::from(gamma * n);
                    r.check(lhs <= BigUint::from(k * s) * den, || format!("Markov n={n} k={k} s={s} γ={gamma}"));
                }
                if k * s == 0 {
                    continue;
                }
                let mu = rational_from_u64(k * s, n);
                for q in 0..4u64 {
                    let xi = &mu * rational_from_u64(q, 4);
                    let floor = u64::try_from(xi.floor().to_integer()).expect("non-negative");
                    let xi_f = to_f64(&xi);
                    match chernoff_lower_tail_bound(&p, xi_f) {
                        Ok(b) => r.check(table.cdf(floor) <= rational_from_f64(b), || {
                            format!("Chernoff n={n} k={k} s={s} ξ={xi_f}")
                        }),
                        Err(e) => error_case(&mut r, format!("n={n} k={k} s={s} ξ={xi_f}: {e}")),
                    }
                }
            }
        }
    }
    r
}

/// `0 <= e^{-1/c} − (1 − 1/(cx))^x <= A/x` on the standard grid, plus the
/// gap against a direct evaluation.
pub fn ec_gap_grid(slack: f64) -> SuiteReport {
    let mut r = SuiteReport::new("ec-gap");
    for c in [1.0f64, 1.5, 2.0, 5.0, 10.0] {
        for e in 1..=20 {
            let x = f64::from(1u32 << e);
            match ec_gap(c, x) {
                Ok(g) => {
                    r.check(g.gap >= -slack && g.gap <= g.bound + slack, || format!("c={c} x={x}: {g:?}"));
                    let direct = (-1.0 / c).exp() - (x * (-1.0 / (c * x)).ln_1p()).exp();
                    r.check((direct - g.gap).abs() <= 1e-12, || format!("c={c} x={x}: {direct} vs {}", g.gap));
                    let a = 5.0 * (-1.0 / c).exp() / (c * c);
                    r.check((g.bound - a / x).abs() <= 1e-15 * a, || format!("c={c} x={x}: bound"));
                }
                Err(e) => error_case(&mut r, e),
            }
        }
    }
    r
}

fn random_plan<R: Rng + ?Sized>(n: u64, lambda: u32, q: usize, rng: &mut R) -> QueryPlan {
    let queries = (0..q)
        .map(|_| {
            let k = rng.random_range(0..=n as usize);
            Query::from_items(n, sample(rng, n as usize, k).iter().map(|i| i as u32 + 1)).expect("in range")
        })
        .collect();
    QueryPlan::new(n, lambda, queries).expect("consistent plan")
}

/// A random small instance with valid classes: `(n, λ, classes)`.
pub fn small_instance<R: Rng + ?Sized>(n_range: (u64, u64), rng: &mut R) -> (u64, u32, SizeClasses) {
    loop {
        let lambda = rng.random_range(1..=2u32);
        let alpha = [1.5, 2.0, 2.5, 3.0][rng.random_range(0..4)];
        let l = rng.random_range(u64::from(lambda)..=3);
        let n = rng.random_range(n_range.0..=n_range.1);
        let u = rng.random_range(l + 1..=n);
        if let Ok(c) = build_size_classes(alpha, l, u) {
            return (n, lambda, c);
        }
    }
}

type Induced = DiscreteDistribution<tgt_core::oracle::ResponseVector, BigRational>;

fn induced_pair(plan: &QueryPlan, c: &SizeClasses, n: u64) -> Result<(Induced, Induced), LabError> {
    let limits = ExactLimits::default();
    Ok((induced_exact(plan, c, Parity::Even, n, limits)?, induced_exact(plan, c, Parity::Odd, n, limits)?))
}

/// Exact induced distance against the summed per-query disagreement.
pub fn coupling_inequality(instances: u64, slack: f64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("coupling-inequality");
    let slack = rational_from_f64(slack);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = derive_indexed(seed, "coupling-instance", i);
        let (n, lambda, c) = small_instance((6, 18), &mut rng);
        let q = rng.random_range(1..=4);
        let plan = random_plan(n, lambda, q, &mut rng);
        let res = induced_pair(&plan, &c, n).and_then(|(e, o)| Ok((tv_distance(&e, &o), coupling_tv_bound(&plan, &c, n)?)));
        match res {
            Ok((tv, bound)) => {
                worst = worst.max(to_f64(&tv) - to_f64(&bound.tv_upper));
                r.check(tv <= &bound.tv_upper + &slack, || {
                    format!("instance {i} (n={n} q={q} λ={lambda}): {} > {}", to_f64(&tv), to_f64(&bound.tv_upper))
                });
            }
            Err(e) => error_case(&mut r, e),
        }
    }
    r.note("max_tv_minus_bound", worst);
    r
}

/// The three bucket estimates on random `(n, k, L, β, λ)`.
pub fn bucket_bounds(tuples: u64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("bucket-bounds");
    let mut rng = derive_stream(seed, "buckets");
    let mut max_total = 0.0f64;
    let mut done = 0;
    while done < tuples {
        let alpha = rng.random_range(1.01..6.0);
        let l = rng.random_range(1..=4u64);
        let n = rng.random_range(10..=2000u64);
        let u = rng.random_range(l + 1..=n);
        let Ok(c) = build_size_classes(alpha, l, u) else { continue };
        let lambda = rng.random_range(1..=(l.min(4) as u32));
        let k = rng.random_range(0..=n);
        done += 1;
        match bucket_decomposition(k, &c, n, lambda) {
            Ok(b) => {
                let b2 = BigRational::from_integer((c.beta * c.beta).into());
                let geometric = &b2 / (&b2 - BigRational::from_integer(1.into()));
                let tag = || format!("n={n} k={k} L={l} β={} λ={lambda} m*={:?}", c.beta, b.m_star);
                r.check(b.bounds_hold(), || format!("{}: bucket bound", tag()));
                r.check(b.low.within(&geometric), || format!("{}: low > β²/(β²−1)", tag()));
                let sum = b.low.p1.clone() + &b.low.p2 + &b.mid.p1 + &b.mid.p2 + &b.high.p1 + &b.high.p2;
                r.check(sum == b.total, || format!("{}: total", tag()));
                max_total = max_total.max(to_f64(&b.total));
            }
            Err(e) => error_case(&mut r, e),
        }
    }
    r.note("max_level_total", max_total);
    r
}

/// Level totals `m · (per-query disagreement)` as `U` grows at fixed `n`,
/// against the constant `C` assembled from the three bucket estimates.
/// Reports the largest measured total, i.e. the empirical `C` in `C/m`.
pub fn scaling_law() -> SuiteReport {
    let mut r = SuiteReport::new("scaling-law");
    let n = 1u64 << 20;
    let mut measured = 0.0f64;
    for lambda in 1..=2u32 {
        for alpha in [1.5f64, 4.0] {
            let mut prev_m = 0;
            for e in 3..=20u32 {
                let Ok(c) = build_size_classes(alpha, 2, 1u64 << e) else { continue };
                if c.m == prev_m {
                    continue;
                }
                prev_m = c.m;
                let b2 = (c.beta * c.beta) as f64;
                let q = (-f64::from(lambda) / 4.0).exp();
                let cap = 2.0 * (b2 / (b2 - 1.0) + 1.0 + q / (1.0 - q));
                for k in [1u64, 100, 10_000, n / 2, n] {
                    let total: Result<f64, LabError> = (1..=c.m)
                        .map(|j| {
                            let (x, y) = c.level_sizes(j)?;
                            Ok(tgt_core::lab::disagreement_for_sizes_f64(n, k, x, y, lambda)?.p_j)
                        })
                        .sum();
                    match total {
                        Ok(total) => {
                            measured = measured.max(total);
                            r.check(total <= cap, || format!("λ={lambda} α={alpha} m={} k={k}: {total} > {cap}", c.m));
                        }
                        Err(e) => error_case(&mut r, e),
                    }
                }
            }
        }
    }
    r.note("C_measured", format!("{measured:.4}"));
    r
}

fn rules_over(k: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << k).map(move |m| (0..k).map(|i| m >> i & 1 == 1).collect())
}

/// No rule beats the distance: exhaustive over outcome sets of size <= 4,
/// random rules on induced distributions with more outcomes.
pub fn rule_search(random_rules: u64, slack: f64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("rule-search");
    let mut rng = derive_stream(seed, "rules");
    for _ in 0..200 {
        let k = rng.random_range(1..=4usize);
        let mut draw = || {
            let mut w: Vec<u64> = (0..k).map(|_| rng.random_range(0..8)).collect();
            if w.iter().all(|&x| x == 0) {
                w[0] = 1;
            }
            let total: u64 = w.iter().sum();
            DiscreteDistribution::new(w.iter().enumerate().map(|(i, &x)| (i, rational_from_u64(x, total))))
                .expect("valid masses")
        };
        let (d0, d1) = (draw(), draw());
        exhaustive(&mut r, &d0, &d1, k);
    }
    // Induced distributions with at most four outcomes.
    let mut small = 0;
    let mut i = 0;
    while small < 50 {
        i += 1;
        let mut irng = derive_indexed(seed, "rules-induced", i);
        let (n, lambda, c) = small_instance((6, 14), &mut irng);
        let plan = random_plan(n, lambda, irng.random_range(1..=2), &mut irng);
        let Ok((e, o)) = induced_pair(&plan, &c, n) else { continue };
        let outcomes: Vec<_> = e.outcomes().chain(o.outcomes()).cloned().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        if outcomes.len() > 4 {
            continue;
        }
        small += 1;
        let e = DiscreteDistribution::new(outcomes.iter().enumerate().map(|(j, x)| (j, e.mass(x)))).expect("masses");
        let o = DiscreteDistribution::new(outcomes.iter().enumerate().map(|(j, x)| (j, o.mass(x)))).expect("masses");
        exhaustive(&mut r, &e, &o, outcomes.len());
    }
    let slack = rational_from_f64(slack);
    let mut done = 0;
    let mut inst = 0;
    while done < random_rules {
        inst += 1;
        let mut irng = derive_indexed(seed, "rules-large", inst);
        let (n, lambda, c) = small_instance((10, 16), &mut irng);
        let plan = random_plan(n, lambda, irng.random_range(4..=6), &mut irng);
        let Ok((e, o)) = induced_pair(&plan, &c, n) else { continue };
        let tv = tv_distance(&e, &o);
        let outcomes: Vec<_> = e.outcomes().chain(o.outcomes()).cloned().collect();
        for _ in 0..1000.min(random_rules - done) {
            let bits: BTreeMap<_, bool> = outcomes.iter().map(|x| (x.clone(), irng.random())).collect();
            match distinguisher_advantage(|x| bits.get(x).copied(), &e, &o) {
                Ok(adv) => r.check(adv <= &tv + &slack, || format!("instance {inst}: random rule beats distance")),
                Err(err) => error_case(&mut r, err),
            }
            done += 1;
        }
    }
    r
}

fn exhaustive(r: &mut SuiteReport, d0: &DiscreteDistribution<usize, BigRational>, d1: &DiscreteDistribution<usize, BigRational>, k: usize) {
    let tv = tv_distance(d0, d1);
    let mut best = BigRational::zero();
    for rule in rules_over(k) {
        match distinguisher_advantage(|o: &usize| rule.get(*o).copied(), d0, d1) {
            Ok(adv) => {
                r.check(adv <= tv, || format!("rule {rule:?} beats distance"));
                best = best.max(adv);
            }
            Err(e) => error_case(r, e),
        }
    }
    r.check(best == tv, || "best rule misses the distance".into());
    r.check(optimal_rule_advantage(d0, d1) == tv, || "optimal rule misses the distance".into());
}

/// Coupled marginals pushed through random plans against independent
/// induced samples.
pub fn pushforward(instances: u64, samples: u64, sigmas: f64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("pushforward");
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = derive_indexed(seed, "pushforward-instance", i);
        let (n, lambda, c) = small_instance((8, 24), &mut rng);
        let q = rng.random_range(1..=4);
        let plan = random_plan(n, lambda, q, &mut rng);
        match coupling_pushforward_check(&plan, &c, n, samples, &mut rng) {
            Ok(p) => {
                worst = worst.max(p.max_z);
                r.check(p.within(sigmas), || format!("instance {i} (n={n} q={q}): z={}", p.max_z));
            }
            Err(e) => error_case(&mut r, e),
        }
    }
    r.note("max_z", format!("{worst:.3}"));
    r
}

/// Seed-fixed estimator at `n = U = 512` as a parity distinguisher.
pub fn derandomization(seeds: usize, trials: u64, samples: u64, seed: u64) -> SuiteReport {
    let mut r = SuiteReport::new("derandomization");
    let run = || -> Result<(f64, f64, f64, f64), crate::CliError> {
        let cfg = EstimatorConfig::new(512, 1, 4.0, 1, 512, 0.1)?.with_singleton_fallback(true);
        let classes = build_size_classes(4.0, 1, 512)?;
        let generator = estimator_generator(cfg, classes.clone())?;
        let mut rng = derive_stream(seed, "derandomize");
        let report = derandomize(generator, &classes, 512, seeds, trials, &mut rng)?;
        let adv = advantage_mc(&report.distinguisher, &classes, 512, samples, &mut rng)?;
        Ok((report.best.rate(), report.validation.rate(), adv.advantage, adv.std_error))
    };
    match run() {
        Ok((best, validated, adv, se)) => {
            r.note("best_rate", best);
            r.note("validated_rate", validated);
            r.note("advantage", adv);
            r.note("advantage_se", format!("{se:.2e}"));
            r.check(best >= 0.6, || format!("best-seed success {best} < 0.6"));
            r.check(adv >= 1.0 / 3.0 - 0.05, || format!("advantage {adv} < 1/3 − 0.05"));
        }
        Err(e) => error_case(&mut r, e),
    }
    r
}

/// The quick exact suites run by `selftest`.
pub fn selftest_suites(seed: u64) -> Vec<SuiteReport> {
    vec![
        tail_bounds(16),
        ec_gap_grid(1e-12),
        noiseless_decisions(20, 100_000),
        query_count_formula(),
        coupling_inequality(10, 1e-12, seed),
        bucket_bounds(40, seed),
        rule_search(1000, 1e-12, seed),
    ]
}
