mod common;

use common::{dmat, dvec, reference_ipm, DenseQp};
use ipstop::ipm::{compute_residuals, ipm_solve, is_converged, IpmConfig, StoppingPolicy};
use ipstop::problems::{gen_random, RandomInstance, RandomSpec};
use nalgebra::DMatrix;

fn dense(inst: &RandomInstance) -> DenseQp {
    let n = inst.spec.n;
    DenseQp {
        q: inst.q.as_ref().map_or_else(|| DMatrix::zeros(n, n), |q| dmat(q)),
        a: dmat(&inst.a),
        b: dvec(&inst.problem.b),
        c: dvec(&inst.problem.c),
    }
}

fn exact_config() -> IpmConfig {
    IpmConfig { policy: StoppingPolicy::FixTol { tol: 1e-14 }, inner_itmax: 400, ..IpmConfig::default() }
        .with_tolerance(1e-10)
}

fn check(inst: &RandomInstance, label: &str) {
    let cfg = exact_config();
    let sol = ipm_solve(&inst.problem, &inst.exact(), &cfg).unwrap_or_else(|e| panic!("{label}: {e}"));
    let reference = reference_ipm(&dense(inst), 1e-10, 200);
    let rel = (sol.primal_objective - reference.objective).abs() / reference.objective.abs().max(1.0);
    assert!(rel <= 1e-6, "{label}: objective {} vs reference {} (rel {rel:e})", sol.primal_objective, reference.objective);
    let known = inst.problem.primal_objective(&inst.solution.x);
    assert!((known - reference.objective).abs() / known.abs().max(1.0) <= 1e-6, "{label}: reference missed the planted optimum");
    let res = compute_residuals(&inst.problem, &sol.iterate, 0.0);
    assert!(is_converged(&inst.problem, &res, &IpmConfig::default().with_tolerance(1e-8)), "{label}: optimality conditions");
}

#[test]
fn random_lps_match_dense_reference() {
    for seed in 0..50u64 {
        let m = 5 + (seed as usize * 7) % 26;
        let n = (m + 10 + (seed as usize * 13) % 50).min(80);
        let inst = gen_random(RandomSpec::lp(m, n), 1000 + seed).unwrap();
        check(&inst, &format!("LP seed {seed} ({m}x{n})"));
    }
}

#[test]
fn random_qps_match_dense_reference() {
    for seed in 0..50u64 {
        let n = 10 + (seed as usize * 11) % 51;
        let m = if seed % 5 == 0 { 0 } else { 1 + (seed as usize * 3) % (n / 2) };
        let inst = gen_random(RandomSpec::qp(m, n), 2000 + seed).unwrap();
        check(&inst, &format!("QP seed {seed} ({m}x{n})"));
    }
}
