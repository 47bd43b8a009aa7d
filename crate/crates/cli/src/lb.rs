//! `lb` subcommands.

use rand::seq::index::sample;
use rand::Rng;

use tgt_core::lab::{
    advantage_mc, bucket_decomposition, build_size_classes, coupling_pushforward_check, coupling_tv_bound,
    coupling_tv_bound_f64, derandomize as fix_seed, disagreement_for_sizes_f64, estimator_generator,
    exact_disagreement, induced_exact, induced_mc, optimal_rule_advantage, tv_distance, BucketSums, ExactLimits,
    Parity, SizeClasses,
};
use tgt_core::oracle::{Query, QueryPlan};
use tgt_core::probability::{format_rational, to_f64};
use tgt_core::stream::derive_stream;

use crate::commands::{estimator_config_with, EstimatorDefaults};
use crate::params::Params;
use crate::record::RunRecord;
use crate::{
    Arith, BucketArgs, ClassArgs, CliError, Context, DerandomizeArgs, DisagreementArgs, PlanArgs, TvArgs, TvMode,
};

fn classes(a: &ClassArgs, p: &Params) -> Result<SizeClasses, CliError> {
    let alpha = p.get("alpha", a.alpha, 2.0f64)?;
    let l = p.get("l", a.l, 1u64)?;
    let u = p.get("u", a.u, 100u64)?;
    Ok(build_size_classes(alpha, l, u)?)
}

pub fn build_classes(a: &ClassArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let c = classes(a, &ctx.params)?;
    let mut rec = RunRecord::new("lb build-classes", &["parity", "j", "size", "window_lo", "window_hi"]);
    rec.params = ctx.params.finish()?;
    rec.derive("beta", c.beta);
    rec.derive("m", c.m);
    rec.derive("windows_disjoint", c.windows_disjoint());
    for (i, (s, parity)) in c.all_sizes().into_iter().enumerate() {
        rec.row(vec![
            parity.as_str().into(),
            (i / 2 + 1).to_string(),
            s.to_string(),
            s.to_string(),
            (c.alpha * s as f64).to_string(),
        ]);
    }
    Ok(rec)
}

pub fn disagreement(a: &DisagreementArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let p = &ctx.params;
    let c = classes(&a.classes, p)?;
    let n = p.get("n", a.n, c.u)?;
    let k = p.require("k", a.k)?;
    let lambda = p.get("lambda", a.lambda, 1u32)?;
    let arith = p.get("arith", a.arith, if n <= 5000 { Arith::Exact } else { Arith::Float })?;
    let mut rec = RunRecord::new("lb disagreement", &["j", "x", "y", "p1", "p2", "p_j"]);
    rec.params = p.finish()?;
    let mut total = 0.0;
    for j in 1..=c.m {
        let (x, y) = c.level_sizes(j)?;
        let cells = match arith {
            Arith::Exact => {
                let d = exact_disagreement(k, j, &c, n, lambda)?;
                total += to_f64(&d.p_j);
                [format_rational(&d.p1), format_rational(&d.p2), format_rational(&d.p_j)]
            }
            Arith::Float => {
                let d = disagreement_for_sizes_f64(n, k, x, y, lambda)?;
                total += d.p_j;
                [d.p1.to_string(), d.p2.to_string(), d.p_j.to_string()]
            }
        };
        let mut row = vec![j.to_string(), x.to_string(), y.to_string()];
        row.extend(cells);
        rec.row(row);
    }
    rec.summarize("per_query", total / c.m as f64);
    rec.summarize("level_total", total);
    Ok(rec)
}

pub fn buckets(a: &BucketArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let p = &ctx.params;
    let c = classes(&a.classes, p)?;
    let n = p.get("n", a.n, c.u)?;
    let ks: Vec<u64> = p.list("k", a.k.clone(), &format!("1,{},{}", (n / 10).max(1), n))?;
    let lambda = p.get("lambda", a.lambda, 1u32)?;
    let mut rec = RunRecord::new(
        "lb buckets",
        &["k", "m_star", "bucket", "levels", "p1_sum", "p2_sum", "bound", "holds"],
    );
    rec.params = p.finish()?;
    rec.derive("beta", c.beta);
    rec.derive("m", c.m);
    let mut all = true;
    for k in ks {
        let r = bucket_decomposition(k, &c, n, lambda)?;
        let star = r.m_star.map_or("inf".to_string(), |s| s.to_string());
        let high = r.high_bound_exact();
        let rows: [(&str, &BucketSums, String, bool); 3] = [
            ("low", &r.low, format_rational(&r.low_bound), r.low.within(&r.low_bound)),
            ("mid", &r.mid, format_rational(&r.mid_bound), r.mid.within(&r.mid_bound)),
            ("high", &r.high, r.high_bound.to_string(), r.high.within(&high)),
        ];
        for (name, sums, bound, holds) in rows {
            all &= holds;
            let levels = sums.levels.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            rec.row(vec![
                k.to_string(),
                star.clone(),
                name.into(),
                levels,
                format_rational(&sums.p1),
                format_rational(&sums.p2),
                bound,
                holds.to_string(),
            ]);
        }
        rec.summarize(&format!("k{k}.total"), to_f64(&r.total));
        rec.summarize(&format!("k{k}.per_query"), to_f64(&r.total) / c.m as f64);
    }
    rec.summarize("all_bounds_hold", all);
    Ok(rec)
}

struct PlanSetup {
    n: u64,
    classes: SizeClasses,
    plan: QueryPlan,
    samples: u64,
}

fn plan_setup(a: &PlanArgs, ctx: &Context, default_samples: u64) -> Result<PlanSetup, CliError> {
    let p = &ctx.params;
    let c = classes(&a.classes, p)?;
    let n = p.get("n", a.n, c.u)?;
    let lambda = p.get("lambda", a.lambda, 1u32)?;
    let file: Option<String> = match &a.plan {
        Some(path) => Some(p.get("plan", Some(path.display().to_string()), String::new())?),
        None => p.get("plan", None, String::new()).map(|s| (!s.is_empty()).then_some(s))?,
    };
    let queries = p.get("queries", a.queries, 3usize)?;
    let samples = p.get("samples", a.samples, default_samples)?;
    let plan = match file {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))?;
            let plan = QueryPlan::from_text(&text)?;
            if plan.universe_size() != n || plan.lambda() != lambda {
                return Err(CliError::Config(format!(
                    "plan file has n={}, lambda={}; expected n={n}, lambda={lambda}",
                    plan.universe_size(),
                    plan.lambda()
                )));
            }
            plan
        }
        None => {
            let mut rng = derive_stream(ctx.seed, "lb-plan");
            let qs = (0..queries)
                .map(|_| {
                    let k = rng.random_range(0..=n as usize);
                    Query::from_items(n, sample(&mut rng, n as usize, k).iter().map(|i| i as u32 + 1))
                })
                .collect::<Result<Vec<_>, _>>()?;
            QueryPlan::new(n, lambda, qs)?
        }
    };
    c.check_universe(n)?;
    Ok(PlanSetup { n, classes: c, plan, samples })
}

pub fn tv(a: &TvArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let mode = ctx.params.get("mode", a.mode, TvMode::Exact)?;
    let s = plan_setup(&a.plan, ctx, 100_000)?;
    let params = ctx.params.finish()?;
    let sizes: Vec<String> = s.plan.queries().iter().map(|q| q.size().to_string()).collect();
    match mode {
        TvMode::Exact => {
            let even = induced_exact(&s.plan, &s.classes, Parity::Even, s.n, ExactLimits::default())?;
            let odd = induced_exact(&s.plan, &s.classes, Parity::Odd, s.n, ExactLimits::default())?;
            let bound = coupling_tv_bound(&s.plan, &s.classes, s.n)?;
            let mut rec = RunRecord::new("lb tv", &["outcome", "even", "odd"]);
            rec.params = params;
            rec.derive("query_sizes", sizes.join(" "));
            let outcomes: std::collections::BTreeSet<_> = even.outcomes().chain(odd.outcomes()).cloned().collect();
            for o in outcomes {
                rec.row(vec![o.to_string(), format_rational(&even.mass(&o)), format_rational(&odd.mass(&o))]);
            }
            let tv = tv_distance(&even, &odd);
            rec.summarize("tv", format_rational(&tv));
            rec.summarize("tv_float", to_f64(&tv));
            rec.summarize("optimal_advantage", format_rational(&optimal_rule_advantage(&even, &odd)));
            rec.summarize("coupling_bound", format_rational(&bound.tv_upper));
            rec.summarize("coupling_bound_float", to_f64(&bound.tv_upper));
            rec.summarize("bound_holds", tv <= bound.tv_upper);
            Ok(rec)
        }
        TvMode::Mc => {
            let mut rng = derive_stream(ctx.seed, "lb-tv-mc");
            let even = induced_mc(&s.plan, &s.classes, Parity::Even, s.n, s.samples, &mut rng)?;
            let odd = induced_mc(&s.plan, &s.classes, Parity::Odd, s.n, s.samples, &mut rng)?;
            let (_, bound) = coupling_tv_bound_f64(&s.plan, &s.classes, s.n)?;
            let mut rec = RunRecord::new("lb tv", &["outcome", "even", "even_se", "odd", "odd_se"]);
            rec.params = params;
            rec.derive("query_sizes", sizes.join(" "));
            let outcomes: std::collections::BTreeSet<_> =
                even.dist.outcomes().chain(odd.dist.outcomes()).cloned().collect();
            for o in outcomes {
                rec.row(vec![
                    o.to_string(),
                    even.frequency(&o).to_string(),
                    even.std_error(&o).to_string(),
                    odd.frequency(&o).to_string(),
                    odd.std_error(&o).to_string(),
                ]);
            }
            rec.summarize("tv_plugin", tv_distance(&even.dist, &odd.dist));
            rec.summarize("coupling_bound", bound);
            Ok(rec)
        }
    }
}

pub fn derandomize(a: &DerandomizeArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let p = &ctx.params;
    let cfg = estimator_config_with(&a.est, p, &EstimatorDefaults { n: 512, fallback: true })?;
    let seeds = p.get("seeds", a.seeds, 8usize)?;
    let trials = p.get("trials", a.trials, 2000u64)?;
    let samples = p.get("samples", a.samples, 100_000u64)?;
    let mut rec = RunRecord::new("lb derandomize", &["candidate", "seed", "successes", "trials", "rate"]);
    rec.params = p.finish()?;
    let classes = build_size_classes(cfg.alpha, cfg.l, cfg.u)?;
    rec.derive("beta", classes.beta);
    rec.derive("m", classes.m);
    let n = cfg.n;
    let generator = estimator_generator(cfg, classes.clone())?;
    let mut rng = derive_stream(ctx.seed, "lb-derandomize");
    let report = fix_seed(generator, &classes, n, seeds, trials, &mut rng)?;
    for (i, s) in report.per_seed.iter().enumerate() {
        rec.row(vec![i.to_string(), s.seed.to_string(), s.successes.to_string(), s.trials.to_string(), s.rate().to_string()]);
    }
    let adv = advantage_mc(&report.distinguisher, &classes, n, samples, &mut rng)?;
    use tgt_core::lab::Distinguisher;
    rec.derive("queries", report.distinguisher.query_count());
    rec.summarize("best_seed", report.best.seed);
    rec.summarize("best_rate", report.best.rate());
    rec.summarize("validated_rate", report.validation.rate());
    rec.summarize("validation_trials", report.validation.trials);
    rec.summarize("even_correct", adv.even_correct);
    rec.summarize("odd_as_even", adv.odd_as_even);
    rec.summarize("advantage", adv.advantage);
    rec.summarize("advantage_se", adv.std_error);
    Ok(rec)
}

pub fn pushforward(a: &PlanArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let s = plan_setup(a, ctx, 100_000)?;
    let mut rec = RunRecord::new("lb pushforward", &["samples", "outcomes", "max_abs_diff", "max_z", "within_4_sigma"]);
    rec.params = ctx.params.finish()?;
    let mut rng = derive_stream(ctx.seed, "lb-pushforward");
    let r = coupling_pushforward_check(&s.plan, &s.classes, s.n, s.samples, &mut rng)?;
    rec.row(vec![
        r.samples.to_string(),
        r.outcomes_compared.to_string(),
        r.max_abs_diff.to_string(),
        r.max_z.to_string(),
        r.within(4.0).to_string(),
    ]);
    Ok(rec)
}
