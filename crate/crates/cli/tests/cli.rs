use std::io::Write as _;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = tgt_cli::run(std::iter::once("tgt").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn header(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out.lines().next().unwrap().to_string()
}

#[test]
fn csv_headers() {
    let cases: &[(&[&str], &str)] = &[
        (&["calibrate"], "key,value"),
        (&["estimate", "--n", "1000", "--trials", "2"], "d,trial,d_hat,i1,path,gate,queries,in_promise,success"),
        (&["tails", "--n", "10", "--k", "3", "--s", "4"], "r,pmf,tail_ge,cdf,markov_bound,markov_holds,chernoff_bound,chernoff_holds"),
        (&["lb", "build-classes"], "parity,j,size,window_lo,window_hi"),
        (&["lb", "disagreement", "--k", "5"], "j,x,y,p1,p2,p_j"),
        (&["lb", "buckets", "--k", "4"], "k,m_star,bucket,levels,p1_sum,p2_sum,bound,holds"),
        (&["lb", "tv", "--n", "12", "--u", "12", "--alpha", "1.5"], "outcome,even,odd"),
        (&["lb", "tv", "--n", "12", "--u", "12", "--alpha", "1.5", "--mode", "mc", "--samples", "100"], "outcome,even,even_se,odd,odd_se"),
        (&["lb", "pushforward", "--n", "12", "--u", "12", "--alpha", "1.5", "--samples", "100"], "samples,outcomes,max_abs_diff,max_z,within_4_sigma"),
        (&["selftest"], "suite,cases,failed,status"),
    ];
    for (args, expected) in cases {
        assert_eq!(header(args), *expected, "{args:?}");
    }
}

#[test]
fn exact_values_are_rationals() {
    let (_, out, _) = run(&["lb", "build-classes", "--alpha", "2", "--u", "100"]);
    let sizes: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(sizes, ["3", "9", "27", "81"]);
    let (_, out, _) = run(&["tails", "--n", "4", "--k", "2", "--s", "2"]);
    // C(2,r) C(2,2-r) / C(4,2)
    let pmf: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(pmf, ["1/6", "2/3", "1/6"]);
}

#[test]
fn keyvalue_record_lists_resolved_parameters() {
    let (code, out, _) = run(&["--format", "keyvalue", "calibrate", "--n", "5000", "--alpha", "2"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("command=calibrate\n"));
    for line in ["param.n=5000", "param.alpha=2", "param.l=1", "param.u=5000", "param.delta=0.1"] {
        assert!(out.lines().any(|l| l == line), "missing {line}");
    }
    assert!(out.lines().any(|l| l.starts_with("derived.t=")));
}

#[test]
fn promise_violation_exits_2() {
    let (code, _, err) = run(&["estimate", "--n", "1000", "--l", "50", "--u", "50"]);
    assert_eq!(code, 2);
    assert!(err.contains("L < U") && err.contains("L=50"), "{err}");
    let (code, _, _) = run(&["calibrate", "--alpha", "1"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["estimate", "--n", "100", "--d", "101"]);
    assert_eq!(code, 2);
}

#[test]
fn vacuous_classes_exit_3() {
    let (code, _, err) = run(&["lb", "build-classes", "--alpha", "2", "--l", "1", "--u", "8"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn selftest_passes() {
    let (code, out, _) = run(&["selftest"]);
    assert_eq!(code, 0);
    assert!(out.lines().skip(1).all(|l| l.ends_with(",pass")), "{out}");
}

#[test]
fn parse_errors_exit_2_and_help_exits_0() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["estimate", "--n", "ten"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn config_file_and_flag_precedence() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# estimator settings\nn = 4000\nalpha=2\nsingleton_fallback=true").unwrap();
    let path = f.path().to_str().unwrap();
    let (code, out, _) = run(&["--config", path, "--format", "keyvalue", "calibrate", "--alpha", "3"]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l == "param.n=4000"));
    assert!(out.lines().any(|l| l == "param.alpha=3"));
    assert!(out.lines().any(|l| l == "param.singleton-fallback=true"));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "n=4000\nwidth=3").unwrap();
    let (code, _, err) = run(&["--config", bad.path().to_str().unwrap(), "calibrate"]);
    assert_eq!(code, 2);
    assert!(err.contains("width"), "{err}");

    let (code, _, err) = run(&["--config", "/nonexistent/tgt.conf", "calibrate"]);
    assert_eq!(code, 2);
    assert!(err.contains("/nonexistent/tgt.conf"), "{err}");
}

#[test]
fn seed_in_config_file() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "seed=11").unwrap();
    let path = f.path().to_str().unwrap();
    let args = ["lb", "pushforward", "--n", "12", "--u", "12", "--alpha", "1.5", "--samples", "500"];
    let with_file: Vec<&str> = ["--config", path].into_iter().chain(args).collect();
    let with_flag: Vec<&str> = ["--seed", "11"].into_iter().chain(args).collect();
    assert_eq!(run(&with_file).1, run(&with_flag).1);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let args = ["--seed", "3", "estimate", "--n", "2000", "--trials", "5"];
    let (_, stdout, _) = run(&args);
    let with_out: Vec<&str> = ["--out", path.to_str().unwrap()].into_iter().chain(args).collect();
    let (code, empty, _) = run(&with_out);
    assert_eq!(code, 0);
    assert!(empty.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn plan_file_drives_tv() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let plan = tgt_core::oracle::QueryPlan::new(
        12,
        1,
        vec![tgt_core::oracle::Query::full(12).unwrap(), tgt_core::oracle::Query::full(12).unwrap()],
    )
    .unwrap();
    write!(f, "{}", plan.to_text()).unwrap();
    let path = f.path().to_str().unwrap();
    let (code, out, err) = run(&["--format", "keyvalue", "lb", "tv", "--n", "12", "--u", "12", "--alpha", "1.5", "--plan", path]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l == "summary.tv=0/1"), "{out}");
    assert!(out.lines().any(|l| l == "summary.coupling_bound=0/1"), "{out}");
}

#[test]
fn estimate_rows_recompute_summary() {
    let (code, out, _) = run(&["--format", "keyvalue", "estimate", "--n", "5000", "--d", "40,700", "--trials", "30"]);
    assert_eq!(code, 0);
    let (_, csv, _) = run(&["estimate", "--n", "5000", "--d", "40,700", "--trials", "30"]);
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 60);
    let ok = rows.iter().filter(|r| r[8] == "true").count();
    let line = out.lines().find(|l| l.starts_with("summary.success_rate=")).unwrap();
    let rate: f64 = line.split('=').nth(1).unwrap().parse().unwrap();
    assert_eq!(rate, ok as f64 / 60.0);
}
