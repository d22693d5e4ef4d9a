use super::{Byproducts, InnerContext, InnerControl, InnerOutcome, InnerProgress, Monitor, TrackedDirection};
use crate::error::{check_len, Error, Result};
use crate::ipm::{normal_apply, primal_combine, q_apply, NormalEqOperator, PrimalNormalOperator};
use crate::krylov::{Preconditioner, StopReason};
use crate::vecops::{axpy, dot, norm2};

/// CG on `AΘAᵀΔy = f` that tracks `ξ₁ = AᵀΔy` and `ξ₂ = AΘAᵀΔy`.
///
/// `f` must be the normal-equations right-hand side built from `ctx.rhs`.
/// The `Δy` iterates are identical to [`crate::krylov::pcg`] on the same
/// operator; only vector operations and one product `v₃ = Av₂` are added.
pub fn ipcg_solve(
    op: &NormalEqOperator,
    p: &dyn Preconditioner,
    f: &[f64],
    dy0: &[f64],
    ctx: &InnerContext,
    ctl: &InnerControl,
    observer: &mut dyn FnMut(&InnerProgress),
) -> Result<InnerOutcome> {
    let a = &*op.a;
    let theta = &op.theta;
    let (m, n) = (a.nrows(), a.ncols());
    check_len(m, f.len())?;
    check_len(m, dy0.len())?;
    check_len(m, p.dim())?;
    check_len(n, theta.len())?;
    check_len(n, ctx.view.gap_l.len())?;
    check_len(m, ctx.view.r_p.len())?;
    if !(ctl.tau > 0.0) {
        return Err(Error::Config(format!("CG tolerance must be positive, got {}", ctl.tau)));
    }

    let rhs = &ctx.rhs;
    let v1 = rhs.zeta(&ctx.view);
    let v2: Vec<f64> = (0..n).map(|j| theta[j] * (v1[j] - rhs.r_d[j])).collect();
    let mut v3 = vec![0.0; m];
    a.apply_to(&v2, &mut v3);

    let mut dy = dy0.to_vec();
    let mut xi1 = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut xi2 = vec![0.0; m];
    normal_apply(a, theta, &dy, &mut xi1, &mut t, &mut xi2);
    let mut r: Vec<f64> = f.iter().zip(&xi2).map(|(b, v)| b - v).collect();
    let r0_norm = norm2(&r);
    let mut z = vec![0.0; m];
    p.solve_to(&r, &mut z);
    let mut u = z.clone();
    let mut rho = dot(&r, &z);

    let mut mon = Monitor::new(ctx, ctl);
    let mut part = TrackedDirection::zeros(n, m);
    let fill = |part: &mut TrackedDirection, mon: &Monitor, dy: &[f64], xi1: &[f64], xi2: &[f64]| {
        for j in 0..n {
            part.dx[j] = v2[j] + theta[j] * xi1[j];
        }
        mon.complete(part);
        part.dy.copy_from_slice(dy);
        part.at_dy.copy_from_slice(xi1);
        for i in 0..m {
            part.a_dx[i] = xi2[i] + v3[i];
        }
    };

    let mut iter = 0;
    let mut relres = 0.0;
    let mut stop_reason = StopReason::ResidualTol;
    if r0_norm > 0.0 {
        if rho <= 0.0 {
            return Err(Error::Indefinite(rho));
        }
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; m];
        let mut r_norm = r0_norm;
        relres = 1.0;
        loop {
            if !(r_norm > ctl.tau * r0_norm) {
                stop_reason = StopReason::ResidualTol;
                break;
            }
            if iter >= ctl.itmax {
                stop_reason = StopReason::MaxIter;
                break;
            }
            iter += 1;
            normal_apply(a, theta, &u, &mut w1, &mut t, &mut w2);
            let wu = dot(&w2, &u);
            if wu <= 0.0 {
                return Err(Error::Indefinite(wu));
            }
            let alpha = rho / wu;
            axpy(alpha, &u, &mut dy);
            axpy(alpha, &w1, &mut xi1);
            axpy(alpha, &w2, &mut xi2);
            axpy(-alpha, &w2, &mut r);
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
            relres = r_norm / r0_norm;

            let mut stop = false;
            let active = mon.active(iter);
            if active {
                fill(&mut part, &mon, &dy, &xi1, &xi2);
                stop = mon.observe(&part, iter, relres);
            }
            observer(&InnerProgress {
                iter,
                relres,
                solution: &dy,
                byproducts: Byproducts::NormalEq { xi_1: &xi1, xi_2: &xi2 },
                direction: active.then_some(&part),
                snapshot: if active { mon.trace.last().filter(|s| s.iter == iter) } else { None },
            });
            if stop {
                stop_reason = if relres <= ctl.tau { StopReason::ResidualTol } else { StopReason::Indicators };
                break;
            }
        }
    }
    fill(&mut part, &mon, &dy, &xi1, &xi2);
    Ok(InnerOutcome {
        direction: part,
        iterations: iter,
        relres,
        stop_reason,
        trace: mon.trace,
        indicator_failure: mon.failed,
    })
}

/// CG on `(Q + Θ⁻¹)Δx = f` for problems without equality constraints,
/// tracking `ξ_Q = QΔx` from the products CG already forms.
pub fn ipcg_primal_solve(
    op: &PrimalNormalOperator,
    p: &dyn Preconditioner,
    f: &[f64],
    dx0: &[f64],
    ctx: &InnerContext,
    ctl: &InnerControl,
    observer: &mut dyn FnMut(&InnerProgress),
) -> Result<InnerOutcome> {
    let n = op.theta_inv.len();
    check_len(n, f.len())?;
    check_len(n, dx0.len())?;
    check_len(n, p.dim())?;
    check_len(n, ctx.view.gap_l.len())?;
    check_len(0, ctx.view.r_p.len())?;
    if !(ctl.tau > 0.0) {
        return Err(Error::Config(format!("CG tolerance must be positive, got {}", ctl.tau)));
    }
    let theta_inv = &op.theta_inv;

    let mut dx = dx0.to_vec();
    let mut xiq = vec![0.0; n];
    q_apply(&op.q, &dx, &mut xiq);
    let mut w = vec![0.0; n];
    primal_combine(theta_inv, &dx, &xiq, &mut w);
    let mut r: Vec<f64> = f.iter().zip(&w).map(|(b, v)| b - v).collect();
    let r0_norm = norm2(&r);
    let mut z = vec![0.0; n];
    p.solve_to(&r, &mut z);
    let mut u = z.clone();
    let mut rho = dot(&r, &z);

    let mut mon = Monitor::new(ctx, ctl);
    let mut part = TrackedDirection::zeros(n, 0);
    let fill = |part: &mut TrackedDirection, mon: &Monitor, dx: &[f64], xiq: &[f64]| {
        part.dx.copy_from_slice(dx);
        mon.complete(part);
        part.q_dx.copy_from_slice(xiq);
    };

    let mut iter = 0;
    let mut relres = 0.0;
    let mut stop_reason = StopReason::ResidualTol;
    if r0_norm > 0.0 {
        if rho <= 0.0 {
            return Err(Error::Indefinite(rho));
        }
        let mut wq = vec![0.0; n];
        let mut r_norm = r0_norm;
        relres = 1.0;
        loop {
            if !(r_norm > ctl.tau * r0_norm) {
                stop_reason = StopReason::ResidualTol;
                break;
            }
            if iter >= ctl.itmax {
                stop_reason = StopReason::MaxIter;
                break;
            }
            iter += 1;
            q_apply(&op.q, &u, &mut wq);
            primal_combine(theta_inv, &u, &wq, &mut w);
            let wu = dot(&w, &u);
            if wu <= 0.0 {
                return Err(Error::Indefinite(wu));
            }
            let alpha = rho / wu;
            axpy(alpha, &u, &mut dx);
            axpy(alpha, &wq, &mut xiq);
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
            relres = r_norm / r0_norm;

            let mut stop = false;
            let active = mon.active(iter);
            if active {
                fill(&mut part, &mon, &dx, &xiq);
                stop = mon.observe(&part, iter, relres);
            }
            observer(&InnerProgress {
                iter,
                relres,
                solution: &dx,
                byproducts: Byproducts::Primal { xi_q: &xiq },
                direction: active.then_some(&part),
                snapshot: if active { mon.trace.last().filter(|s| s.iter == iter) } else { None },
            });
            if stop {
                stop_reason = if relres <= ctl.tau { StopReason::ResidualTol } else { StopReason::Indicators };
                break;
            }
        }
    }
    fill(&mut part, &mon, &dx, &xiq);
    Ok(InnerOutcome {
        direction: part,
        iterations: iter,
        relres,
        stop_reason,
        trace: mon.trace,
        indicator_failure: mon.failed,
    })
}
