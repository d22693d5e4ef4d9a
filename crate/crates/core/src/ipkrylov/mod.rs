//! Krylov solvers instrumented for IPM Newton systems.
//!
//! Besides the Krylov iterate they maintain the products needed to evaluate
//! the outer method's infeasibilities, complementarity and stepsizes after
//! every inner iteration, using vector operations only. Those indicators drive
//! an early stopping test that replaces residual reduction.

mod indicators;
mod ipcg;
mod ipminres;

pub use indicators::{
    boundary_steps, early_stop_decision, indicator_snapshot, practical_stepsizes, reconstruct_directions,
    scaled_step, snapshot_at, step_to_boundary, update_variations, var_window, view_stepsizes, write_trace_csv,
    EarlyStopConfig, IndicatorSnapshot, TRACE_HEADER,
};
pub use ipcg::{ipcg_primal_solve, ipcg_solve};
pub use ipminres::ipminres_solve;

use crate::ipm::dual_steps;
use crate::krylov::StopReason;
use crate::vecops::axpy;

/// Point-dependent data of the current IPM iterate.
#[derive(Debug, Clone, Copy)]
pub struct IpmView<'a> {
    /// `x − l`, `+∞` where there is no lower bound.
    pub gap_l: &'a [f64],
    /// `u − x`, `+∞` where there is no upper bound.
    pub gap_u: &'a [f64],
    pub s: &'a [f64],
    pub z: &'a [f64],
    /// Current `b − Ax`.
    pub r_p: &'a [f64],
    /// Current `c + Qx − Aᵀy − s + z`.
    pub r_d: &'a [f64],
    /// Number of complementarity pairs.
    pub n_c: usize,
    /// Use `min(α_x, α_s)` for both steps.
    pub equal_steps: bool,
    pub step_factor: f64,
}

/// Right-hand side of the system being solved. For a predictor these are the
/// current residuals; a corrector solves for a correction with `r_P = r_D = 0`
/// and a modified complementarity target.
#[derive(Debug, Clone, Copy)]
pub struct NewtonRhs<'a> {
    pub r_p: &'a [f64],
    pub r_d: &'a [f64],
    pub r_mu: &'a [f64],
    pub r_mu_upper: &'a [f64],
}

impl NewtonRhs<'_> {
    /// `ζ`, which is `X⁻¹r_μ` when all variables are nonnegative.
    pub fn zeta(&self, view: &IpmView) -> Vec<f64> {
        (0..self.r_mu.len())
            .map(|j| {
                let mut v = 0.0;
                if view.gap_l[j].is_finite() {
                    v += self.r_mu[j] / view.gap_l[j];
                }
                if view.gap_u[j].is_finite() {
                    v -= self.r_mu_upper[j] / view.gap_u[j];
                }
                v
            })
            .collect()
    }
}

/// A Newton direction with the products that the indicators need.
///
/// Normal equations: `at_dy = ξ₁`, `a_dx = ξ₂ + v₃`. Augmented system:
/// `q_dx = ξ_Q`, `a_dx = ξ_x`, `at_dy = ξ_y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedDirection {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub ds: Vec<f64>,
    pub dz: Vec<f64>,
    /// `AΔx`
    pub a_dx: Vec<f64>,
    /// `AᵀΔy`
    pub at_dy: Vec<f64>,
    /// `QΔx`
    pub q_dx: Vec<f64>,
}

impl TrackedDirection {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            dx: vec![0.0; n],
            dy: vec![0.0; m],
            ds: vec![0.0; n],
            dz: vec![0.0; n],
            a_dx: vec![0.0; m],
            at_dy: vec![0.0; n],
            q_dx: vec![0.0; n],
        }
    }

    fn fields(&self) -> [&Vec<f64>; 7] {
        [&self.dx, &self.dy, &self.ds, &self.dz, &self.a_dx, &self.at_dy, &self.q_dx]
    }

    fn fields_mut(&mut self) -> [&mut Vec<f64>; 7] {
        [&mut self.dx, &mut self.dy, &mut self.ds, &mut self.dz, &mut self.a_dx, &mut self.at_dy, &mut self.q_dx]
    }

    /// `self += alpha·other`
    pub fn axpy(&mut self, alpha: f64, other: &TrackedDirection) {
        for (a, b) in self.fields_mut().into_iter().zip(other.fields()) {
            axpy(alpha, b, a);
        }
    }

    pub fn sum(&self, other: &TrackedDirection) -> TrackedDirection {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    fn assign_sum(&mut self, base: &TrackedDirection, part: &TrackedDirection) {
        for ((o, a), b) in self.fields_mut().into_iter().zip(base.fields()).zip(part.fields()) {
            for i in 0..o.len() {
                o[i] = a[i] + b[i];
            }
        }
    }
}

/// Shifts a corrector adds to the indicator formulas, taken from the
/// predictor's saved products.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorShift {
    /// `AΔxᴾ`, added to the primal infeasibility with factor `α_x`.
    pub primal: Vec<f64>,
    /// `AᵀΔyᴾ + Δsᴾ − Δzᴾ`, added to the dual infeasibility with factor `α_s`.
    pub dual: Vec<f64>,
    /// `QΔxᴾ`, subtracted from the dual infeasibility with factor `α_x`.
    pub dual_q: Vec<f64>,
}

pub fn corrector_residual_terms(predictor: &TrackedDirection) -> CorrectorShift {
    let dual = (0..predictor.dx.len())
        .map(|j| predictor.at_dy[j] + predictor.ds[j] - predictor.dz[j])
        .collect();
    CorrectorShift { primal: predictor.a_dx.clone(), dual, dual_q: predictor.q_dx.clone() }
}

/// Stop once the direction satisfies the bounded-direction and residual
/// reduction requirements of the inexact method analysed in theory mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryStop {
    pub m_bound: f64,
    pub omega: f64,
    pub rp_norm: f64,
    pub rd_norm: f64,
}

impl TheoryStop {
    pub fn accepts(&self, s: &IndicatorSnapshot) -> bool {
        let alpha = s.alpha_x.min(s.alpha_s);
        let factor = 1.0 - self.omega * alpha;
        s.m_x <= self.m_bound
            && s.m_s <= self.m_bound
            && s.p_inf <= factor * self.rp_norm
            && s.d_inf <= factor * self.rd_norm
    }
}

/// Stopping and recording controls of one inner solve.
#[derive(Debug, Clone, Copy)]
pub struct InnerControl {
    /// Relative residual tolerance.
    pub tau: f64,
    pub itmax: usize,
    pub early: Option<EarlyStopConfig>,
    pub theory: Option<TheoryStop>,
    /// Record snapshots from this iteration on without stopping on them.
    /// Ignored when `early` is set (its `itstart` applies).
    pub record_from: Option<usize>,
}

impl InnerControl {
    pub fn residual(tau: f64, itmax: usize) -> Self {
        Self { tau, itmax, early: None, theory: None, record_from: None }
    }

    fn snapshot_start(&self) -> Option<usize> {
        if let Some(e) = &self.early {
            return Some(e.itstart.max(1));
        }
        if self.theory.is_some() {
            return Some(1);
        }
        self.record_from.map(|r| r.max(1))
    }
}

/// Everything the instrumented solvers read from the IPM.
#[derive(Debug, Clone, Copy)]
pub struct InnerContext<'a> {
    pub view: IpmView<'a>,
    pub rhs: NewtonRhs<'a>,
    /// Direction being corrected; indicators are evaluated at `base + Δ`.
    pub base: Option<&'a TrackedDirection>,
}

/// Products maintained alongside the Krylov iterate.
#[derive(Debug, Clone, Copy)]
pub enum Byproducts<'a> {
    NormalEq { xi_1: &'a [f64], xi_2: &'a [f64] },
    Primal { xi_q: &'a [f64] },
    Augmented { xi_q: &'a [f64], xi_x: &'a [f64], xi_y: &'a [f64] },
}

/// Reported to the observer after every inner iteration.
#[derive(Debug, Clone, Copy)]
pub struct InnerProgress<'a> {
    pub iter: usize,
    pub relres: f64,
    /// `Δy` (normal equations), `Δx` (primal normal equations) or `[Δx; Δy]`.
    pub solution: &'a [f64],
    pub byproducts: Byproducts<'a>,
    /// This solve's direction, present at iterations where indicators were evaluated.
    pub direction: Option<&'a TrackedDirection>,
    pub snapshot: Option<&'a IndicatorSnapshot>,
}

#[derive(Debug, Clone)]
pub struct InnerOutcome {
    /// This solve's contribution (without the base direction).
    pub direction: TrackedDirection,
    pub iterations: usize,
    pub relres: f64,
    pub stop_reason: StopReason,
    pub trace: Vec<IndicatorSnapshot>,
    /// Some indicator became non-finite; indicator stopping was switched off.
    pub indicator_failure: bool,
}

/// Snapshot bookkeeping shared by the solvers.
struct Monitor<'a> {
    ctx: &'a InnerContext<'a>,
    ctl: &'a InnerControl,
    start: Option<usize>,
    has_equalities: bool,
    total: Option<TrackedDirection>,
    trace: Vec<IndicatorSnapshot>,
    failed: bool,
}

impl<'a> Monitor<'a> {
    fn new(ctx: &'a InnerContext<'a>, ctl: &'a InnerControl) -> Self {
        Self {
            ctx,
            ctl,
            start: ctl.snapshot_start(),
            has_equalities: !ctx.view.r_p.is_empty(),
            total: ctx.base.cloned(),
            trace: Vec::new(),
            failed: false,
        }
    }

    fn active(&self, iter: usize) -> bool {
        !self.failed && self.start.is_some_and(|s| iter >= s)
    }

    /// Fills `ds`, `dz` of `part` from its `dx`.
    fn complete(&self, part: &mut TrackedDirection) {
        let v = &self.ctx.view;
        let r = &self.ctx.rhs;
        dual_steps(v.gap_l, v.gap_u, v.s, v.z, r.r_mu, r.r_mu_upper, &part.dx, &mut part.ds, &mut part.dz);
    }

    /// Records a snapshot for `part`; returns whether to stop.
    fn observe(&mut self, part: &TrackedDirection, iter: usize, relres: f64) -> bool {
        let snap = match (&mut self.total, self.ctx.base) {
            (Some(total), Some(base)) => {
                total.assign_sum(base, part);
                indicator_snapshot(&self.ctx.view, total, iter, relres)
            }
            _ => indicator_snapshot(&self.ctx.view, part, iter, relres),
        };
        if !snap.is_finite() {
            self.failed = true;
            return false;
        }
        self.trace.push(snap);
        let mut stop = false;
        if let Some(cfg) = &self.ctl.early {
            update_variations(&mut self.trace, cfg.window);
            stop = early_stop_decision(self.trace.last().unwrap(), cfg, self.has_equalities);
        }
        if let Some(t) = &self.ctl.theory {
            stop |= t.accepts(self.trace.last().unwrap());
        }
        stop
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_predictor_gives_zero_shifts() {
        let s = corrector_residual_terms(&TrackedDirection::zeros(3, 2));
        assert_eq!(s.primal, vec![0.0; 2]);
        assert_eq!(s.dual, vec![0.0; 3]);
        assert_eq!(s.dual_q, vec![0.0; 3]);
    }

    #[test]
    fn theory_stop_requires_reduction() {
        let mut s = IndicatorSnapshot {
            iter: 1,
            relres: 0.1,
            p_inf: 0.5,
            d_inf: 0.5,
            mu: 1.0,
            alpha_x: 0.5,
            alpha_s: 0.5,
            m_x: 1.0,
            m_s: 1.0,
            var_p: None,
            var_d: None,
            var_mx: None,
            var_ms: None,
            var_mu: None,
        };
        let t = TheoryStop { m_bound: 2.0, omega: 0.9, rp_norm: 1.0, rd_norm: 1.0 };
        assert!(t.accepts(&s));
        s.p_inf = 0.6;
        assert!(!t.accepts(&s));
        s.p_inf = 0.5;
        s.m_x = 3.0;
        assert!(!t.accepts(&s));
    }
}
