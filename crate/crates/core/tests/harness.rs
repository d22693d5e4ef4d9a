use std::fs;

use ipstop::harness::{
    default_spec, emit_trace, final_residuals, reduction_percent, resolve_ipm_config, run_suite, with_size, PolicyKind,
    SuiteConfig, RUNS_HEADER, SUMMARY_HEADER,
};
use ipstop::ipkrylov::TRACE_HEADER;
use ipstop::ipm::{ipm_solve_report, SolveKind, StoppingPolicy};
use ipstop::problems::{generate, load_problem_dir, read_f64_bin, write_problem_dir, Family};

fn tomo_suite(seeds: Vec<u64>) -> SuiteConfig {
    let spec = with_size(default_spec(Family::Tomo), 8).unwrap();
    SuiteConfig::new(spec, seeds)
}

#[test]
fn suites_are_reproducible() {
    let a = run_suite(&tomo_suite(vec![0, 1])).unwrap();
    let mut cfg = tomo_suite(vec![0, 1]);
    cfg.threads = 3;
    let b = run_suite(&cfg).unwrap();
    assert_eq!(a.records.len(), 6);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!((x.seed, x.policy, x.ipm_iters, x.total_inner_iters), (y.seed, y.policy, y.ipm_iters, y.total_inner_iters));
    }
    assert!(a.all_converged());
}

#[test]
fn summary_reductions_match_raw_records() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tomo_suite(vec![0, 1, 2]);
    cfg.out_dir = Some(dir.path().to_path_buf());
    let out = run_suite(&cfg).unwrap();
    let mean = |p: PolicyKind| {
        let v: Vec<f64> = out.records.iter().filter(|r| r.policy == p).map(|r| r.total_inner_iters as f64).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let expect = 100.0 * (1.0 - mean(PolicyKind::IpStop) / mean(PolicyKind::FixTol));
    assert!((expect - reduction_percent(mean(PolicyKind::IpStop), mean(PolicyKind::FixTol))).abs() < 1e-12);

    let runs = fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().next().unwrap(), RUNS_HEADER);
    assert_eq!(runs.lines().count(), 1 + out.records.len());
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), SUMMARY_HEADER);
    let ipstop_line = summary.lines().find(|l| l.contains(",ipstop,")).unwrap();
    let cols: Vec<&str> = ipstop_line.split(',').collect();
    let red: f64 = cols[8].parse().unwrap();
    assert!((red - expect).abs() <= 0.05, "{red} vs {expect}");
    let fix_line = summary.lines().find(|l| l.contains(",fixtol,")).unwrap();
    assert_eq!(fix_line.split(',').nth(8), Some(""));
}

#[test]
fn fixtol_solves_reach_their_tolerance() {
    let g = generate(&with_size(default_spec(Family::Tomo), 8).unwrap(), 5).unwrap();
    let cfg = resolve_ipm_config(Family::Tomo, PolicyKind::FixTol, &Default::default(), &Default::default());
    let StoppingPolicy::FixTol { tol } = cfg.policy else { panic!() };
    let r = ipm_solve_report(&g.problem, &*g.precond, &cfg);
    assert!(r.converged());
    for s in r.stats.iter().flat_map(|s| &s.solves).filter(|s| s.kind != SolveKind::Fallback) {
        assert!(s.relres <= tol, "{} > {tol}", s.relres);
    }
}

#[test]
fn trace_rows_follow_policy() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(&with_size(default_spec(Family::Tomo), 8).unwrap(), 2).unwrap();
    let fix = resolve_ipm_config(Family::Tomo, PolicyKind::FixTol, &Default::default(), &Default::default());
    let t = emit_trace(&g, &fix, 1, 0, dir.path()).unwrap();
    assert_eq!(t.trace.len(), t.iterations);
    assert!(t.trace.iter().enumerate().all(|(i, s)| s.iter == i + 1));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER);
    assert_eq!(csv.lines().count(), 1 + t.iterations);
    assert!(dir.path().join("solves.csv").exists() && dir.path().join("stats.csv").exists());

    let ip = resolve_ipm_config(Family::Tomo, PolicyKind::IpStop, &Default::default(), &Default::default());
    let StoppingPolicy::IpStop(e) = ip.policy else { panic!() };
    let t = emit_trace(&g, &ip, 1, 0, dir.path()).unwrap();
    if t.iterations >= e.itstart {
        assert_eq!(t.trace.len(), t.iterations + 1 - e.itstart);
        assert_eq!(t.trace[0].iter, e.itstart);
    }
    assert!(!final_residuals(&t.report.stats).is_empty());
    assert!(emit_trace(&g, &ip, 10_000, 0, dir.path()).is_err());
}

#[test]
fn problem_directories_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (fam, size) in [(Family::Tomo, 8), (Family::Cs, 16), (Family::Pde, 2), (Family::Random, 8)] {
        let g = generate(&with_size(default_spec(fam), size).unwrap(), 7).unwrap();
        let d = dir.path().join(fam.as_str());
        write_problem_dir(&d, &g).unwrap();
        assert!(d.join("meta.txt").exists());
        assert!(fs::read_dir(&d).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "mtx")));
        let back = load_problem_dir(&d).unwrap();
        assert_eq!(back.spec, g.spec);
        assert_eq!(back.seed, 7);
        assert_eq!(back.problem.b, g.problem.b);
        assert_eq!(back.problem.c, g.problem.c);
        let c = read_f64_bin(&d.join("c.bin"), g.problem.n()).unwrap();
        assert_eq!(c, g.problem.c);
    }
}

#[test]
fn tampered_problem_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let g = generate(&with_size(default_spec(Family::Random), 6).unwrap(), 1).unwrap();
    write_problem_dir(dir.path(), &g).unwrap();
    let mut c = g.problem.c.clone();
    c[0] += 1.0;
    ipstop::problems::write_f64_bin(&dir.path().join("c.bin"), &c).unwrap();
    assert!(load_problem_dir(dir.path()).is_err());
}
