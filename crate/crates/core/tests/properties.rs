mod common;

use std::io::Cursor;
use std::sync::Arc;

use common::max_abs_diff;
use ipstop::harness::{default_spec, resolve_ipm_config, with_size, PolicyKind};
use ipstop::ipkrylov::{practical_stepsizes, var_window};
use ipstop::ipm::{ipm_solve, ipm_solve_report, vartol_tolerance, IpmConfig, SystemKind};
use ipstop::krylov::{minres, pcg, IdentityPreconditioner};
use ipstop::linop::mtx::{read_matrix_market, write_matrix_market, Symmetry};
use ipstop::linop::{CsrMatrix, DenseMatrix, LinearOperator};
use ipstop::problems::{gen_random, generate, Family, GeneratedProblem, RandomSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(family: Family) -> GeneratedProblem {
    let size = match family {
        Family::Tomo => 8,
        Family::Cs => 16,
        Family::Pde => 2,
        Family::Random => 8,
    };
    generate(&with_size(default_spec(family), size).unwrap(), 3).unwrap()
}

const FAMILIES: [Family; 4] = [Family::Tomo, Family::Cs, Family::Pde, Family::Random];

fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn var_window_examples() {
    assert_eq!(var_window(&[3.0; 6], 5), Some((0.0, false)));
    let geo: Vec<f64> = (0..6).map(|k| 0.9f64.powi(k)).collect();
    assert!((var_window(&geo, 5).unwrap().0 - 0.1).abs() < 1e-14);
    assert!((var_window(&[1.0, 2.0, 1.0, 2.0, 1.0, 2.0], 5).unwrap().0 - 0.8).abs() < 1e-15);
    assert_eq!(var_window(&[1.0, 2.0], 5), None);
    let (v, flagged) = var_window(&[1.0, 0.0, 1.0, 1.0, 1.0, 1.0], 5).unwrap();
    assert!(flagged);
    assert!((v - 0.2).abs() < 1e-15);
}

#[test]
fn vartol_examples() {
    assert_eq!(vartol_tolerance(2.0, 2.0, 1e-3, 1e-6), 1e-3);
    assert_eq!(vartol_tolerance(1e-9, 1.0, 1e-3, 1e-6), 1e-6);
    assert!((vartol_tolerance(1e-2, 1.0, 1e-3, 1e-6) - 1e-5).abs() < 1e-20);
}

#[test]
fn generated_q_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for fam in FAMILIES {
        let mut g = small(fam);
        if fam == Family::Random {
            g = ipstop::problems::gen_random_problem(RandomSpec::qp(4, 12), 3).unwrap();
        }
        let n = g.problem.n();
        for _ in 0..1000 {
            let x = randn(&mut rng, n);
            let qx = g.problem.apply_q(&x);
            assert!(dot(&x, &qx) >= -1e-10 * dot(&x, &x), "{fam:?}");
        }
    }
}

#[test]
fn preconditioners_are_symmetric_positive_definite() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for fam in FAMILIES {
        let g = small(fam);
        let (n, m) = (g.problem.n(), g.problem.m());
        let theta_inv: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let kind = match (m, fam) {
            (0, _) => SystemKind::PrimalNormal,
            (_, Family::Random) => SystemKind::NormalEq,
            _ => SystemKind::Augmented,
        };
        let p = g.precond.build(kind, &theta_inv).unwrap();
        let dim = p.dim();
        for _ in 0..50 {
            let (u, v) = (randn(&mut rng, dim), randn(&mut rng, dim));
            let (mut pu, mut pv) = (vec![0.0; dim], vec![0.0; dim]);
            p.solve_to(&u, &mut pu);
            p.solve_to(&v, &mut pv);
            assert!(dot(&u, &pu) > 0.0, "{fam:?}");
            let (a, b) = (dot(&v, &pu), dot(&u, &pv));
            assert!((a - b).abs() <= 1e-10 * (a.abs() + b.abs() + 1e-300) + 1e-14, "{fam:?}: {a} vs {b}");
        }
    }
}

#[test]
fn generators_are_deterministic() {
    for fam in FAMILIES {
        let (a, b) = (small(fam), small(fam));
        assert_eq!(a.problem.b, b.problem.b, "{fam:?}");
        assert_eq!(a.problem.c, b.problem.c, "{fam:?}");
        let probe: Vec<f64> = (0..a.problem.n()).map(|j| (j as f64).sin()).collect();
        assert_eq!(a.problem.apply_a(&probe), b.problem.apply_a(&probe));
        assert_eq!(a.problem.apply_q(&probe), b.problem.apply_q(&probe));
        if fam != Family::Pde {
            let other = generate(&a.spec, 4).unwrap();
            assert_ne!(a.problem.c, other.problem.c, "{fam:?}: seed ignored");
        }
    }
}

#[test]
fn operator_adjoints_are_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for fam in FAMILIES {
        let g = small(fam);
        let ops = g.problem.a.iter().chain(g.problem.q.iter());
        for op in ops {
            for _ in 0..100 {
                let (u, v) = (randn(&mut rng, op.nrows()), randn(&mut rng, op.ncols()));
                let lhs = dot(&u, &op.apply(&v).unwrap());
                let rhs = dot(&op.apply_adjoint(&u).unwrap(), &v);
                assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs()) + 1e-13, "{fam:?}");
            }
        }
    }
}

#[test]
fn ipm_iterates_stay_interior() {
    for seed in 0..5 {
        let g = ipstop::problems::gen_random_problem(RandomSpec::lp(15, 40), seed).unwrap();
        let sol = ipm_solve(&g.problem, &*g.precond, &resolve_ipm_config(Family::Random, PolicyKind::FixTol, &Default::default(), &Default::default())).unwrap();
        assert!(sol.iterate.is_interior(&g.problem));
        assert!(sol.stats.iter().all(|s| s.alpha_x > 0.0 && s.alpha_s > 0.0 && s.alpha_x <= 1.0));
    }
}

#[test]
fn loose_inner_solves_fail_cleanly() {
    // Inexact normal equations at 1e-8 let r_P drift on this instance.
    let g = ipstop::problems::gen_random_problem(RandomSpec::lp(15, 40), 4).unwrap();
    let r = ipm_solve_report(&g.problem, &*g.precond, &IpmConfig::default());
    if let Err(e) = &r.status {
        assert!(e.to_string().contains("diverging"), "{e}");
        assert!(r.iterate.x.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn pcg_and_minres_agree_on_spd_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let n = 12;
        let b = DenseMatrix::from_row_major(n, n, randn(&mut rng, n * n));
        let mut m = b.transpose().matmul(&b);
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let rhs = randn(&mut rng, n);
        let p = IdentityPreconditioner(n);
        let x1 = pcg(&m, &p, &rhs, &vec![0.0; n], 1e-12, 200).unwrap().solution;
        let x2 = minres(&m, &p, &rhs, 1e-12, 200).unwrap().solution;
        let scale = x1.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max_abs_diff(&x1, &x2) <= 1e-8 * scale);
    }
}

#[test]
fn random_instances_plant_their_optimum() {
    let inst = gen_random(RandomSpec::lp(6, 15), 9).unwrap();
    let res = ipstop::ipm::compute_residuals(&inst.problem, &inst.solution, 0.0);
    assert!(res.r_p.iter().chain(&res.r_d).all(|v| v.abs() < 1e-12));
    assert_eq!(inst.solution.complementarity(&inst.problem), 0.0);
}

fn triplets() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
    (1usize..12, 1usize..12).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec((0..r, 0..c, -1e3f64..1e3), 0..40))
    })
}

proptest! {
    #[test]
    fn matrix_market_round_trip((r, c, t) in triplets()) {
        let m = CsrMatrix::from_triplets(r, c, &t);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m, Symmetry::General).unwrap();
        let (back, sym) = read_matrix_market(Cursor::new(buf)).unwrap();
        prop_assert_eq!(sym, Symmetry::General);
        prop_assert_eq!(back, m);
    }

    #[test]
    fn symmetric_matrix_market_round_trip(n in 1usize..10, t in prop::collection::vec((0usize..10, 0usize..10, -5f64..5.0), 0..30)) {
        let t: Vec<_> = t.into_iter().filter(|(i, j, _)| *i < n && *j < n).flat_map(|(i, j, v)| {
            if i == j { vec![(i, j, v)] } else { vec![(i, j, v), (j, i, v)] }
        }).collect();
        let m = CsrMatrix::from_triplets(n, n, &t);
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m, Symmetry::Symmetric).unwrap();
        let (back, sym) = read_matrix_market(Cursor::new(buf)).unwrap();
        prop_assert_eq!(sym, Symmetry::Symmetric);
        prop_assert_eq!(back.to_dense(), m.to_dense());
    }

    #[test]
    fn practical_steps_keep_positivity(
        pairs in prop::collection::vec((1e-6f64..1e3, -1e3f64..1e3, 1e-6f64..1e3, -1e3f64..1e3), 1..30)
    ) {
        let (x, dx): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.0, p.1)).unzip();
        let (s, ds): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.2, p.3)).unzip();
        let (ax, as_) = practical_stepsizes(&x, &dx, &s, &ds);
        prop_assert!(ax > 0.0 && ax <= 1.0 && as_ > 0.0 && as_ <= 1.0);
        for j in 0..x.len() {
            prop_assert!(x[j] + ax * dx[j] > 0.0);
            prop_assert!(s[j] + as_ * ds[j] > 0.0);
        }
    }

    #[test]
    fn var_window_of_geometric_sequence(r in 0.01f64..3.0, w in 1usize..8, extra in 0usize..4) {
        let v: Vec<f64> = (0..w + 1 + extra).map(|k| r.powi(k as i32)).collect();
        let (got, flagged) = var_window(&v, w).unwrap();
        prop_assert!(!flagged);
        prop_assert!((got - (1.0 - r).abs()).abs() <= 1e-12 * (1.0 + (1.0 - r).abs()));
    }

    #[test]
    fn csr_matches_dense_on_products(r in 1usize..10, c in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DenseMatrix::from_row_major(r, c, (0..r * c).map(|_| if rng.random::<f64>() < 0.4 { rng.random_range(-2.0..2.0) } else { 0.0 }).collect());
        let s = Arc::new(CsrMatrix::from_dense(&d));
        let v = randn(&mut rng, c);
        let u = randn(&mut rng, r);
        prop_assert!(max_abs_diff(&s.apply(&v).unwrap(), &d.apply(&v).unwrap()) <= 1e-14);
        prop_assert!(max_abs_diff(&s.apply_adjoint(&u).unwrap(), &d.apply_adjoint(&u).unwrap()) <= 1e-14);
    }
}
