use super::{KrylovResult, Preconditioner, StopReason};
use crate::error::{check_len, Error, Result};
use crate::linop::LinearOperator;
use crate::vecops::{axpy, dot, norm2};

pub fn pcg(
    m: &dyn LinearOperator,
    p: &dyn Preconditioner,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    itmax: usize,
) -> Result<KrylovResult> {
    pcg_observed(m, p, rhs, x0, tol, itmax, &mut |_, _, _| {})
}

/// PCG; `observer(iter, x, relres)` is called after every iteration.
pub fn pcg_observed(
    m: &dyn LinearOperator,
    p: &dyn Preconditioner,
    rhs: &[f64],
    x0: &[f64],
    tol: f64,
    itmax: usize,
    observer: &mut dyn FnMut(usize, &[f64], f64),
) -> Result<KrylovResult> {
    let n = rhs.len();
    check_len(m.nrows(), n)?;
    check_len(m.ncols(), n)?;
    check_len(p.dim(), n)?;
    check_len(n, x0.len())?;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("CG tolerance must be positive, got {tol}")));
    }

    let mut x = x0.to_vec();
    let mut w = vec![0.0; n];
    m.apply_to(&x, &mut w);
    let mut r: Vec<f64> = rhs.iter().zip(&w).map(|(b, mx)| b - mx).collect();
    let r0_norm = norm2(&r);
    let mut z = vec![0.0; n];
    p.solve_to(&r, &mut z);
    let mut u = z.clone();
    let mut rho = dot(&r, &z);
    if r0_norm == 0.0 {
        return Ok(KrylovResult {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            stop_reason: StopReason::ResidualTol,
        });
    }
    if rho <= 0.0 {
        return Err(Error::Indefinite(rho));
    }

    let mut iter = 0;
    let mut r_norm = r0_norm;
    while r_norm > tol * r0_norm && iter < itmax {
        iter += 1;
        m.apply_to(&u, &mut w);
        let wu = dot(&w, &u);
        if wu <= 0.0 {
            return Err(Error::Indefinite(wu));
        }
        let alpha = rho / wu;
        axpy(alpha, &u, &mut x);
        axpy(-alpha, &w, &mut r);
        p.solve_to(&r, &mut z);
        let rho_new = dot(&r, &z);
        if rho_new < 0.0 {
            return Err(Error::Indefinite(rho_new));
        }
        let beta = rho_new / rho;
        for (ui, zi) in u.iter_mut().zip(&z) {
            *ui = zi + beta * *ui;
        }
        rho = rho_new;
        r_norm = norm2(&r);
        observer(iter, &x, r_norm / r0_norm);
    }

    Ok(KrylovResult {
        solution: x,
        iterations: iter,
        relative_residual: r_norm / r0_norm,
        stop_reason: if r_norm <= tol * r0_norm { StopReason::ResidualTol } else { StopReason::MaxIter },
    })
}
