//! `calibrate`, `estimate`, `tails` and `selftest`.

use rayon::prelude::*;

use tgt_core::estimator::{
    build_plan, calibrate as calibrate_constants, decide, simulate_estimate, DecisionPath, EstimateResult,
    EstimatorConfig, EstimatorError, PlanLayout, SmallDPolicy,
};
use tgt_core::oracle::{evaluate_plan, uniform_defect_set};
use tgt_core::probability::{
    chernoff_lower_tail_bound, format_rational, markov_tail_bound_exact, rational_from_u64, HypergeomParams,
    HypergeomTable,
};
use tgt_core::stream::derive_indexed;

use crate::params::Params;
use crate::record::{half_width, RunRecord};
use crate::{suites, Backend, CliError, Context, EstimatorArgs, EstimateArgs, TailsArgs};

/// Largest `queries × n` for which `--backend auto` draws real plans.
const AUTO_PLAN_CELLS: u64 = 100_000_000;

/// Defaults for the estimator flags that some commands change.
pub struct EstimatorDefaults {
    pub n: u64,
    pub fallback: bool,
}

pub const ESTIMATE_DEFAULTS: EstimatorDefaults = EstimatorDefaults { n: 10_000, fallback: false };

pub fn estimator_config(a: &EstimatorArgs, p: &Params) -> Result<EstimatorConfig, CliError> {
    estimator_config_with(a, p, &ESTIMATE_DEFAULTS)
}

pub fn estimator_config_with(
    a: &EstimatorArgs,
    p: &Params,
    defaults: &EstimatorDefaults,
) -> Result<EstimatorConfig, CliError> {
    let n = p.get("n", a.n, defaults.n)?;
    let lambda = p.get("lambda", a.lambda, 1u32)?;
    let alpha = p.get("alpha", a.alpha, 4.0f64)?;
    let l = p.get("l", a.l, u64::from(lambda))?;
    let u = p.get("u", a.u, n)?;
    let delta = p.get("delta", a.delta, 0.1f64)?;
    let fallback = p.get("singleton-fallback", a.singleton_fallback, defaults.fallback)?;
    Ok(EstimatorConfig::new(n, lambda, alpha, l, u, delta)?.with_singleton_fallback(fallback))
}

fn policy_name(p: SmallDPolicy) -> &'static str {
    match p {
        SmallDPolicy::NotNeeded => "not-needed",
        SmallDPolicy::GateWithSingletons => "gate-with-singletons",
        SmallDPolicy::Unguarded => "unguarded",
    }
}

pub fn calibrate(a: &EstimatorArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let cfg = estimator_config(a, &ctx.params)?;
    let mut rec = RunRecord::new("calibrate", &["key", "value"]);
    rec.params = ctx.params.finish()?;
    let k = calibrate_constants(&cfg)?;
    let mut kv: Vec<(&str, String)> = vec![
        ("alpha_eff", k.alpha_eff.to_string()),
        ("c", k.c.to_string()),
        ("c_prime", k.c_prime().to_string()),
        ("d_prime", k.d_prime.to_string()),
        ("delta_alpha", k.delta_alpha.to_string()),
        ("reference", k.reference.to_string()),
        ("limit", k.limit.to_string()),
        ("t", k.t.to_string()),
        ("levels", k.levels().to_string()),
        ("p_first", k.grid[0].to_string()),
        ("p_last", k.grid[k.levels() - 1].to_string()),
        ("main_queries", k.main_queries().to_string()),
    ];
    match PlanLayout::new(&cfg, &k) {
        Ok(layout) => {
            kv.push(("small_d_policy", policy_name(layout.policy).into()));
            if let Some(g) = layout.gate {
                kv.push(("gate_p", g.p.to_string()));
                kv.push(("gate_repetitions", g.repetitions.to_string()));
                kv.push(("gate_threshold", g.threshold.to_string()));
            }
            kv.push(("singleton_queries", layout.singletons.to_string()));
            kv.push(("total_queries", layout.total().to_string()));
        }
        Err(EstimatorError::SmallDUnsupported { d_prime, .. }) => {
            kv.push(("small_d_policy", "unsupported".into()));
            kv.push(("min_supported_l", d_prime.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    for (key, v) in kv {
        rec.derive(key, &v);
        rec.row(vec![key.into(), v]);
    }
    Ok(rec)
}

fn default_sizes(cfg: &EstimatorConfig) -> String {
    let mut ds: Vec<u64> = std::iter::successors(Some(1u64), |d| d.checked_mul(4))
        .take_while(|&d| d <= cfg.u)
        .filter(|&d| d >= cfg.l)
        .collect();
    if ds.last() != Some(&cfg.u) {
        ds.push(cfg.u);
    }
    ds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

pub fn estimate(a: &EstimateArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let p = &ctx.params;
    let cfg = estimator_config(&a.est, p)?;
    let ds: Vec<u64> = p.list("d", a.d.clone(), &default_sizes(&cfg))?;
    let trials = p.get("trials", a.trials, 100u64)?;
    let backend = p.get("backend", a.backend, Backend::Auto)?;
    let params = p.finish()?;
    if let Some(&d) = ds.iter().find(|&&d| d == 0 || d > cfg.n) {
        return Err(CliError::Config(format!("true size d={d} must lie in [1, n={}]", cfg.n)));
    }
    let k = calibrate_constants(&cfg)?;
    let layout = PlanLayout::new(&cfg, &k)?;
    let backend = match backend {
        Backend::Auto if layout.total().saturating_mul(cfg.n) <= AUTO_PLAN_CELLS => Backend::Plan,
        Backend::Auto => Backend::Counts,
        b => b,
    };

    let mut rec = RunRecord::new(
        "estimate",
        &["d", "trial", "d_hat", "i1", "path", "gate", "queries", "in_promise", "success"],
    );
    rec.params = params;
    rec.derive("backend", backend);
    rec.derive("c", k.c);
    rec.derive("d_prime", k.d_prime);
    rec.derive("delta_alpha", k.delta_alpha);
    rec.derive("t", k.t);
    rec.derive("levels", k.levels());
    rec.derive("small_d_policy", policy_name(layout.policy));
    rec.derive("total_queries", layout.total());

    let seed = ctx.seed;
    let (mut all_ok, mut all_n) = (0u64, 0u64);
    for &d in &ds {
        let results: Vec<Result<EstimateResult, EstimatorError>> = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = derive_indexed(seed, &format!("estimate-d{d}"), trial);
                match backend {
                    Backend::Counts => simulate_estimate(&cfg, &k, &layout, d, &mut rng),
                    _ => {
                        let defects = uniform_defect_set(cfg.n, d, &mut rng)?;
                        let plan = build_plan(&cfg, &k, &mut rng)?;
                        let responses = evaluate_plan(&plan.plan, &defects)?;
                        decide(&plan, &responses)
                    }
                }
            })
            .collect();
        let (mut ok, mut queries) = (0u64, 0u64);
        let in_promise = d >= cfg.l && d <= cfg.u;
        for (trial, res) in results.into_iter().enumerate() {
            let row = match res {
                Ok(r) => {
                    let success = r.contains(d, cfg.alpha);
                    ok += u64::from(success);
                    queries += r.queries_used;
                    vec![
                        r.d_hat.to_string(),
                        r.i1.map(|i| i.to_string()).unwrap_or_default(),
                        match r.path {
                            DecisionPath::Levels => "levels".into(),
                            DecisionPath::Singletons => "singletons".into(),
                        },
                        r.gate_accepted.map_or(String::new(), |g| if g { "accept" } else { "reject" }.into()),
                        r.queries_used.to_string(),
                        in_promise.to_string(),
                        success.to_string(),
                    ]
                }
                Err(EstimatorError::NoLevelFound) => {
                    queries += layout.total();
                    vec![
                        String::new(),
                        String::new(),
                        "none".into(),
                        String::new(),
                        layout.total().to_string(),
                        in_promise.to_string(),
                        "false".into(),
                    ]
                }
                Err(e) => return Err(e.into()),
            };
            let mut cells = vec![d.to_string(), trial.to_string()];
            cells.extend(row);
            rec.row(cells);
        }
        rec.summarize(&format!("d{d}.success_rate"), ok as f64 / trials.max(1) as f64);
        rec.summarize(&format!("d{d}.half_width_95"), half_width(ok, trials));
        rec.summarize(&format!("d{d}.mean_queries"), queries as f64 / trials.max(1) as f64);
        all_ok += ok;
        all_n += trials;
    }
    rec.summarize("success_rate", all_ok as f64 / all_n.max(1) as f64);
    rec.summarize("half_width_95", half_width(all_ok, all_n));
    Ok(rec)
}

pub fn tails(a: &TailsArgs, ctx: &Context) -> Result<RunRecord, CliError> {
    let p = &ctx.params;
    let n = p.require("n", a.n)?;
    let k = p.require("k", a.k)?;
    let s = p.require("s", a.s)?;
    let params = p.finish()?;
    let hp = HypergeomParams::new(n, k, s).map_err(|e| CliError::Config(e.to_string()))?;
    if n > 2000 {
        return Err(CliError::Config(format!("tails is exact; n={n} exceeds 2000")));
    }
    let table = HypergeomTable::new(&hp);
    let mut rec = RunRecord::new(
        "tails",
        &["r", "pmf", "tail_ge", "cdf", "markov_bound", "markov_holds", "chernoff_bound", "chernoff_holds"],
    );
    rec.params = params;
    let mean = hp.mean();
    rec.derive("mean", format_rational(&mean));
    for r in 0..=s {
        let tail = table.tail_ge(r);
        let cdf = table.cdf(r);
        let (mb, mh) = if r >= 1 {
            let b = markov_tail_bound_exact(&hp, &rational_from_u64(r, 1)).map_err(|e| CliError::Config(e.to_string()))?;
            (format_rational(&b), (tail <= b).to_string())
        } else {
            (String::new(), String::new())
        };
        let (cb, ch) = match chernoff_lower_tail_bound(&hp, r as f64) {
            Ok(b) if rational_from_u64(r, 1) < mean => {
                (b.to_string(), (cdf <= tgt_core::probability::rational_from_f64(b)).to_string())
            }
            _ => (String::new(), String::new()),
        };
        rec.row(vec![
            r.to_string(),
            format_rational(&table.pmf(r)),
            format_rational(&tail),
            format_rational(&cdf),
            mb,
            mh,
            cb,
            ch,
        ]);
    }
    Ok(rec)
}

pub fn selftest(ctx: &Context) -> Result<RunRecord, CliError> {
    let params = ctx.params.finish()?;
    let mut rec = RunRecord::new("selftest", &["suite", "cases", "failed", "status"]);
    rec.params = params;
    let reports = suites::selftest_suites(ctx.seed);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
    for r in &reports {
        rec.row(vec![
            r.name.clone(),
            r.cases.to_string(),
            r.failed.to_string(),
            if r.passed() { "pass" } else { "fail" }.into(),
        ]);
        for e in &r.examples {
            rec.summarize(&format!("{}.failure", r.name), e);
        }
    }
    rec.summarize("suites", reports.len());
    rec.summarize("failed_suites", failed.len());
    if !failed.is_empty() {
        rec.failure = Some(format!("self-test suites failed: {}", failed.join(", ")));
    }
    Ok(rec)
}
