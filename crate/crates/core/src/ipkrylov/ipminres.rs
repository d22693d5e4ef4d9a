use super::{Byproducts, InnerContext, InnerControl, InnerOutcome, InnerProgress, Monitor, TrackedDirection};
use crate::error::{check_len, Error, Result};
use crate::ipm::{augmented_combine, AugmentedOperator};
use crate::krylov::{direct_relres, Preconditioner, StopReason, BREAKDOWN_TOL, DRIFT_CHECK_PERIOD};
use crate::vecops::{axpy, dot};

/// MINRES on the augmented system `f` that tracks `ξ = [QΔx; AΔx; AᵀΔy]`.
///
/// Each operator apply is split into its products `z = [Qv₁; Av₁; Aᵀv₂]`,
/// which are combined with the same coefficients MINRES uses for its search
/// vectors. Iterates are identical to [`crate::krylov::minres`].
pub fn ipminres_solve(
    op: &AugmentedOperator,
    p: &dyn Preconditioner,
    f: &[f64],
    ctx: &InnerContext,
    ctl: &InnerControl,
    observer: &mut dyn FnMut(&InnerProgress),
) -> Result<InnerOutcome> {
    let (n, m) = (op.n(), op.m());
    let size = n + m;
    let bsize = 2 * n + m;
    check_len(size, f.len())?;
    check_len(size, p.dim())?;
    check_len(n, ctx.view.gap_l.len())?;
    check_len(m, ctx.view.r_p.len())?;

    let mut mon = Monitor::new(ctx, ctl);
    let mut part = TrackedDirection::zeros(n, m);
    let fill = |part: &mut TrackedDirection, mon: &Monitor, x: &[f64], xi: &[f64]| {
        part.dx.copy_from_slice(&x[..n]);
        part.dy.copy_from_slice(&x[n..]);
        mon.complete(part);
        part.q_dx.copy_from_slice(&xi[..n]);
        part.a_dx.copy_from_slice(&xi[n..n + m]);
        part.at_dy.copy_from_slice(&xi[n + m..]);
    };

    let mut x = vec![0.0; size];
    let mut xi = vec![0.0; bsize];
    let mut r1 = f.to_vec();
    let mut r2 = f.to_vec();
    let mut psi = vec![0.0; size];
    p.solve_to(&r1, &mut psi);
    let b2 = dot(&r1, &psi);
    if b2 < 0.0 {
        return Err(Error::PreconditionerNotSpd(b2));
    }
    if b2 == 0.0 {
        fill(&mut part, &mon, &x, &xi);
        return Ok(InnerOutcome {
            direction: part,
            iterations: 0,
            relres: 0.0,
            stop_reason: StopReason::ResidualTol,
            trace: Vec::new(),
            indicator_failure: false,
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
    let mut w = vec![0.0; size];
    let mut w1 = vec![0.0; size];
    let mut w2 = vec![0.0; size];
    let mut wv = vec![0.0; bsize];
    let mut wv1 = vec![0.0; bsize];
    let mut wv2 = vec![0.0; bsize];
    let mut zv = vec![0.0; bsize];
    let mut v = vec![0.0; size];
    let mut drift = 1.0;
    let mut relres = 1.0;
    let mut iter = 0;
    let stop_reason;

    loop {
        if !(relres > ctl.tau) {
            stop_reason = StopReason::ResidualTol;
            break;
        }
        if iter >= ctl.itmax {
            stop_reason = StopReason::MaxIter;
            break;
        }
        iter += 1;
        if beta <= BREAKDOWN_TOL {
            return Err(Error::Breakdown(iter));
        }
        let s = 1.0 / beta;
        for (vi, pi) in v.iter_mut().zip(&psi) {
            *vi = s * pi;
        }
        {
            let (zq, rest) = zv.split_at_mut(n);
            let (za, zy) = rest.split_at_mut(m);
            op.byproducts(&v, zq, za, zy);
            augmented_combine(&op.theta_inv, op.reg, &v, zq, za, zy, &mut psi);
        }
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
        std::mem::swap(&mut wv1, &mut wv2);
        std::mem::swap(&mut wv2, &mut wv);
        for i in 0..size {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        for i in 0..bsize {
            wv[i] = (zv[i] - oldeps * wv1[i] - delta * wv2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);
        axpy(phi, &wv, &mut xi);

        let est = phibar / beta1;
        relres = est * drift;
        if iter % DRIFT_CHECK_PERIOD == 0 || relres <= ctl.tau {
            let direct = direct_relres(op, p, f, &x, beta1);
            if est > 0.0 {
                drift = (direct / est).max(1.0);
            }
            relres = est * drift;
        }

        let mut stop = false;
        let active = mon.active(iter);
        if active {
            fill(&mut part, &mon, &x, &xi);
            stop = mon.observe(&part, iter, relres);
        }
        observer(&InnerProgress {
            iter,
            relres,
            solution: &x,
            byproducts: Byproducts::Augmented { xi_q: &xi[..n], xi_x: &xi[n..n + m], xi_y: &xi[n + m..] },
            direction: active.then_some(&part),
            snapshot: if active { mon.trace.last().filter(|s| s.iter == iter) } else { None },
        });
        if stop {
            stop_reason = if relres <= ctl.tau { StopReason::ResidualTol } else { StopReason::Indicators };
            break;
        }
    }
    fill(&mut part, &mon, &x, &xi);
    Ok(InnerOutcome {
        direction: part,
        iterations: iter,
        relres,
        stop_reason,
        trace: mon.trace,
        indicator_failure: mon.failed,
    })
}
