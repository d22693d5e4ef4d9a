use super::{KrylovResult, Preconditioner, StopReason, BREAKDOWN_TOL};
use crate::error::{check_len, Error, Result};
use crate::linop::LinearOperator;
use crate::vecops::{axpy, dot};

/// The recurrence estimate of the residual is checked against a directly
/// recomputed one this often (and whenever it claims convergence).
pub const DRIFT_CHECK_PERIOD: usize = 50;

pub fn minres(
    m: &dyn LinearOperator,
    p: &dyn Preconditioner,
    rhs: &[f64],
    tol: f64,
    itmax: usize,
) -> Result<KrylovResult> {
    minres_observed(m, p, rhs, tol, itmax, &mut |_, _, _| {})
}

/// `‖f - M x‖` in the `P⁻¹` norm, divided by `beta1 = ‖f‖_{P⁻¹}`.
pub(crate) fn direct_relres(
    m: &dyn LinearOperator,
    p: &dyn Preconditioner,
    f: &[f64],
    x: &[f64],
    beta1: f64,
) -> f64 {
    let n = f.len();
    let mut r = vec![0.0; n];
    m.apply_to(x, &mut r);
    for (ri, fi) in r.iter_mut().zip(f) {
        *ri = fi - *ri;
    }
    let mut z = vec![0.0; n];
    p.solve_to(&r, &mut z);
    dot(&r, &z).max(0.0).sqrt() / beta1
}

/// Preconditioned MINRES from a zero initial guess (Paige–Saunders recurrence).
///
/// `observer(iter, x, relres)` is called after every iteration, where `relres`
/// is the estimated `P⁻¹`-norm relative residual.
pub fn minres_observed(
    m: &dyn LinearOperator,
    p: &dyn Preconditioner,
    rhs: &[f64],
    tol: f64,
    itmax: usize,
    observer: &mut dyn FnMut(usize, &[f64], f64),
) -> Result<KrylovResult> {
    let n = rhs.len();
    check_len(m.nrows(), n)?;
    check_len(m.ncols(), n)?;
    check_len(p.dim(), n)?;

    let mut x = vec![0.0; n];
    let mut r1 = rhs.to_vec();
    let mut r2 = rhs.to_vec();
    let mut psi = vec![0.0; n];
    p.solve_to(&r1, &mut psi);
    let b2 = dot(&r1, &psi);
    if b2 < 0.0 {
        return Err(Error::PreconditionerNotSpd(b2));
    }
    if b2 == 0.0 {
        return Ok(KrylovResult {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            stop_reason: StopReason::ResidualTol,
        });
    }
    let beta1 = b2.sqrt();
    let mut beta = beta1;
    let mut oldb = 0.0;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut drift = 1.0;
    let mut relres = 1.0;
    let mut iter = 0;

    while relres > tol && iter < itmax {
        iter += 1;
        if beta <= BREAKDOWN_TOL {
            return Err(Error::Breakdown(iter));
        }
        let s = 1.0 / beta;
        for (vi, pi) in v.iter_mut().zip(&psi) {
            *vi = s * pi;
        }
        m.apply_to(&v, &mut psi);
        if iter >= 2 {
            axpy(-beta / oldb, &r1, &mut psi);
        }
        let alfa = dot(&v, &psi);
        axpy(-alfa / beta, &r2, &mut psi);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&psi);
        p.solve_to(&r2, &mut psi);
        oldb = beta;
        let b2 = dot(&r2, &psi);
        if b2 < 0.0 {
            return Err(Error::PreconditionerNotSpd(b2));
        }
        beta = b2.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = (gbar * gbar + beta * beta).sqrt().max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);

        let est = phibar / beta1;
        relres = est * drift;
        if iter % DRIFT_CHECK_PERIOD == 0 || relres <= tol {
            let direct = direct_relres(m, p, rhs, &x, beta1);
            if est > 0.0 {
                drift = (direct / est).max(1.0);
            }
            relres = est * drift;
        }
        observer(iter, &x, relres);
    }

    Ok(KrylovResult {
        solution: x,
        iterations: iter,
        relative_residual: relres,
        stop_reason: if relres <= tol { StopReason::ResidualTol } else { StopReason::MaxIter },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{pcg, IdentityPreconditioner};
    use crate::linop::{DenseMatrix, DiagonalOperator, Identity};
    use crate::vecops::{norm2, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Gaussian elimination with partial pivoting, used as an oracle.
    fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| m[k][j] * x[j]).sum();
            x[k] = (x[k] - s) / m[k][k];
        }
        x
    }

    fn random_saddle(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
        let size = n + m;
        let mut k = DenseMatrix::zeros(size, size);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-0.3..0.3);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
            k[(i, i)] = -(2.0 + rng.random_range(0.0..1.0));
        }
        for i in 0..m {
            for j in 0..n {
                let v = rng.random_range(-1.0..1.0);
                k[(n + i, j)] = v;
                k[(j, n + i)] = v;
            }
        }
        k
    }

    #[test]
    fn identity_exact_in_one_iteration() {
        let e = vec![1.0; 5];
        let res = minres(&Identity(5), &IdentityPreconditioner(5), &e, 1e-12, 10).unwrap();
        assert_eq!(res.iterations, 1);
        assert!(norm2(&sub(&res.solution, &e)) < 1e-14);
    }

    #[test]
    fn two_eigenvalues_two_iterations() {
        let d = DiagonalOperator::new(vec![1.0, -1.0]);
        let res = minres(&d, &IdentityPreconditioner(2), &[1.0, 1.0], 1e-12, 10).unwrap();
        assert!(res.iterations <= 2);
        assert!((res.solution[0] - 1.0).abs() < 1e-12 && (res.solution[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_saddle_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let k = random_saddle(&mut rng, 14, 6);
        let b: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let res = minres(&k, &IdentityPreconditioner(20), &b, 1e-12, 500).unwrap();
        let xd = dense_solve(&k, &b);
        assert!(norm2(&sub(&res.solution, &xd)) <= 1e-8 * norm2(&xd));
    }

    #[test]
    fn residual_estimate_is_monotone_and_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let k = random_saddle(&mut rng, 30, 10);
        let b: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = DiagonalOperator::new((0..40).map(|i| 1.0 + i as f64 / 40.0).collect());
        let mut hist = Vec::new();
        let res = minres_observed(&k, &p, &b, 1e-6, 500, &mut |_, _, r| hist.push(r)).unwrap();
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let beta1 = {
            let mut z = vec![0.0; 40];
            p.solve_to(&b, &mut z);
            dot(&b, &z).sqrt()
        };
        let direct = direct_relres(&k, &p, &b, &res.solution, beta1);
        assert!((direct - res.relative_residual).abs() <= 1e-6 * direct);
    }

    #[test]
    fn agrees_with_pcg_on_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let bm = DenseMatrix::from_row_major(12, 12, (0..144).map(|_| rng.random_range(-1.0..1.0)).collect());
        let mut spd = bm.transpose().matmul(&bm);
        for i in 0..12 {
            spd[(i, i)] += 1.0;
        }
        let b: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xm = minres(&spd, &IdentityPreconditioner(12), &b, 1e-12, 200).unwrap().solution;
        let xc = pcg(&spd, &IdentityPreconditioner(12), &b, &[0.0; 12], 1e-12, 200).unwrap().solution;
        assert!(norm2(&sub(&xm, &xc)) <= 1e-8 * norm2(&xc));
    }

    #[test]
    fn indefinite_preconditioner_rejected() {
        let p = DiagonalOperator::new(vec![1.0, -1.0]);
        let err = minres(&Identity(2), &p, &[0.0, 1.0], 1e-10, 10).unwrap_err();
        assert!(matches!(err, Error::PreconditionerNotSpd(_)));
    }
}
