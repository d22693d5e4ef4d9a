use std::io::Write;

use super::newton::{assemble_augmented, assemble_normal_equations, Barrier, NormalSystem};
use super::problem::{compute_residuals, Iterate, ProblemInstance, Residuals};
use super::theory::{neighborhood_check, TheoryConfig};
use crate::error::{Error, Result};
use crate::ipkrylov::{
    ipcg_primal_solve, ipcg_solve, ipminres_solve, view_stepsizes, EarlyStopConfig, IndicatorSnapshot,
    InnerContext, InnerControl, InnerOutcome, IpmView, NewtonRhs, TheoryStop, TrackedDirection,
};
use crate::krylov::{Preconditioner, StopReason};
use crate::vecops::norm2;

/// Which reduced system a preconditioner is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// `AΘAᵀ`
    NormalEq,
    /// `Q + Θ⁻¹`
    PrimalNormal,
    /// `[[−Q−Θ⁻¹, Aᵀ], [A, 0]]`
    Augmented,
}

/// Builds the preconditioner for one IPM iteration from the barrier diagonal.
pub trait PreconditionerFactory: Send + Sync {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>>;
}

/// Identity preconditioner of the right size.
#[derive(Debug, Clone, Copy)]
pub struct IdentityFactory {
    pub m: usize,
}

impl PreconditionerFactory for IdentityFactory {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>> {
        let dim = match kind {
            SystemKind::NormalEq => self.m,
            SystemKind::PrimalNormal => theta_inv.len(),
            SystemKind::Augmented => theta_inv.len() + self.m,
        };
        Ok(Box::new(crate::krylov::IdentityPreconditioner(dim)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearMode {
    /// Normal equations when `Q = 0` or there are no equality constraints,
    /// otherwise the augmented system.
    Auto,
    NormalEq,
    Augmented,
}

/// Centring parameter choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSchedule {
    /// Affine predictor, then a corrector with `σ = (μ_aff/μ)³` clamped to `[min, max]`.
    Mehrotra { min: f64, max: f64 },
    /// One solve per iteration with this `σ`.
    Fixed(f64),
}

impl Default for SigmaSchedule {
    fn default() -> Self {
        SigmaSchedule::Mehrotra { min: 1e-4, max: 0.9 }
    }
}

/// Inner stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoppingPolicy {
    /// Relative residual below a fixed tolerance.
    FixTol { tol: f64 },
    /// Relative residual below `max(tolmax, tol0·μ/μ₀)`.
    VarTol { tol0: f64, tolmax: f64 },
    /// Indicator stagnation (or relative residual below `tau_inner`).
    IpStop(EarlyStopConfig),
}

impl StoppingPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            StoppingPolicy::FixTol { .. } => "fixtol",
            StoppingPolicy::VarTol { .. } => "vartol",
            StoppingPolicy::IpStop(_) => "ipstop",
        }
    }
}

/// `max(tolmax, (μ_k/μ₀)·tol0)`.
pub fn vartol_tolerance(mu_k: f64, mu_0: f64, tol0: f64, tolmax: f64) -> f64 {
    tolmax.max(mu_k / mu_0 * tol0)
}

/// Step length rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Separate primal and dual steps for LPs, a common step when `Q ≠ 0`.
    Auto,
    Separate,
    Equal,
}

#[derive(Debug, Clone)]
pub struct IpmConfig {
    pub tau_p: f64,
    pub tau_d: f64,
    pub tau_mu: f64,
    pub max_iter: usize,
    pub sigma: SigmaSchedule,
    /// Additional centrality correctors after the Mehrotra corrector.
    pub max_correctors: usize,
    pub step_factor: f64,
    pub linear_mode: LinearMode,
    pub policy: StoppingPolicy,
    pub inner_itmax: usize,
    pub step_rule: StepRule,
    /// Keep the indicator trace of every inner solve.
    pub keep_traces: bool,
    /// Run the analysed variant: single step, neighbourhood and Armijo backtracking.
    pub theory: Option<TheoryConfig>,
    /// `δ` in the `(2,2)` block of the augmented system.
    pub regularization: f64,
    /// Primal and dual starting scales; see [`Iterate::scaled_start`].
    pub start: Option<(f64, f64)>,
}

impl Default for IpmConfig {
    fn default() -> Self {
        Self {
            tau_p: 1e-8,
            tau_d: 1e-8,
            tau_mu: 1e-8,
            max_iter: 200,
            sigma: SigmaSchedule::default(),
            max_correctors: 2,
            step_factor: 0.995,
            linear_mode: LinearMode::Auto,
            policy: StoppingPolicy::FixTol { tol: 1e-8 },
            inner_itmax: 1000,
            step_rule: StepRule::Auto,
            keep_traces: false,
            theory: None,
            regularization: 0.0,
            start: None,
        }
    }
}

impl IpmConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tau_p = tol;
        self.tau_d = tol;
        self.tau_mu = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0;
        if !(pos(self.tau_p) && pos(self.tau_d) && pos(self.tau_mu)) {
            return Err(Error::Config("IPM tolerances must be positive".into()));
        }
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::Config(format!("step factor {} outside (0,1)", self.step_factor)));
        }
        match self.sigma {
            SigmaSchedule::Mehrotra { min, max } if !(0.0 < min && min <= max && max <= 1.0) => {
                return Err(Error::Config(format!("σ range [{min}, {max}] invalid")));
            }
            SigmaSchedule::Fixed(s) if !(0.0 < s && s <= 1.0) => {
                return Err(Error::Config(format!("σ = {s} invalid")));
            }
            _ => {}
        }
        match self.policy {
            StoppingPolicy::FixTol { tol } if !pos(tol) => return Err(Error::Config("fixtol tolerance must be positive".into())),
            StoppingPolicy::VarTol { tol0, tolmax } if !(pos(tol0) && pos(tolmax)) => {
                return Err(Error::Config("vartol tolerances must be positive".into()));
            }
            StoppingPolicy::IpStop(cfg) => cfg.validate()?,
            _ => {}
        }
        if let Some(t) = &self.theory {
            t.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveKind {
    Predictor,
    /// Mehrotra second-order corrector, or the only solve with a fixed `σ`.
    Corrector,
    /// Additional centrality corrector.
    Centrality,
    /// Residual-stopped re-solve after an indicator-stopped direction gave a vanishing step.
    Fallback,
}

impl SolveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveKind::Predictor => "predictor",
            SolveKind::Corrector => "corrector",
            SolveKind::Centrality => "centrality",
            SolveKind::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub kind: SolveKind,
    pub iterations: usize,
    pub relres: f64,
    pub stop_reason: StopReason,
    pub accepted: bool,
    pub indicator_failure: bool,
    pub trace: Vec<IndicatorSnapshot>,
}

/// State at the start of an IPM iteration and the step it took.
#[derive(Debug, Clone)]
pub struct IpmIterStats {
    pub ipm_iter: usize,
    pub inner_its: usize,
    pub solves: Vec<SolveRecord>,
    pub alpha_x: f64,
    pub alpha_s: f64,
    pub sigma: f64,
    pub mu: f64,
    pub r_p: f64,
    pub r_d: f64,
}

impl IpmIterStats {
    /// Final relative residual of the first solve of the iteration.
    pub fn final_relres(&self) -> f64 {
        self.solves.first().map_or(0.0, |s| s.relres)
    }
}

pub const STATS_HEADER: &str = "ipm_iter,inner_its,final_relres,alpha_x,alpha_s,mu,rP,rD,stop_reason";

/// One row per IPM iteration; `final_relres` and `stop_reason` refer to the
/// predictor (first) solve.
pub fn write_stats_csv<W: Write>(mut w: W, stats: &[IpmIterStats]) -> Result<()> {
    writeln!(w, "{STATS_HEADER}")?;
    for s in stats {
        let reason = s.solves.first().map_or("none", |r| r.stop_reason.as_str());
        writeln!(
            w,
            "{},{},{:e},{},{},{:e},{:e},{:e},{}",
            s.ipm_iter,
            s.inner_its,
            s.final_relres(),
            s.alpha_x,
            s.alpha_s,
            s.mu,
            s.r_p,
            s.r_d,
            reason
        )?;
    }
    Ok(())
}

pub const SOLVES_HEADER: &str = "ipm_iter,solve,kind,iterations,final_relres,stop_reason,accepted";

/// One row per inner solve (predictors, correctors and fallbacks).
pub fn write_solves_csv<W: Write>(mut w: W, stats: &[IpmIterStats]) -> Result<()> {
    writeln!(w, "{SOLVES_HEADER}")?;
    for s in stats {
        for (k, r) in s.solves.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{:e},{},{}",
                s.ipm_iter,
                k,
                r.kind.as_str(),
                r.iterations,
                r.relres,
                r.stop_reason.as_str(),
                r.accepted as u8
            )?;
        }
    }
    Ok(())
}

#[derive(Debug)]
pub struct IpmReport {
    pub iterate: Iterate,
    pub stats: Vec<IpmIterStats>,
    /// `Ok` when the termination test was met.
    pub status: std::result::Result<(), Error>,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl IpmReport {
    pub fn converged(&self) -> bool {
        self.status.is_ok()
    }

    pub fn ipm_iterations(&self) -> usize {
        self.stats.len()
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.stats.iter().map(|s| s.inner_its).sum()
    }
}

#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub iterate: Iterate,
    pub stats: Vec<IpmIterStats>,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

pub fn ipm_solve(p: &ProblemInstance, precond: &dyn PreconditionerFactory, cfg: &IpmConfig) -> Result<IpmSolution> {
    let r = ipm_solve_report(p, precond, cfg);
    r.status?;
    Ok(IpmSolution { iterate: r.iterate, stats: r.stats, primal_objective: r.primal_objective, dual_objective: r.dual_objective })
}

/// Centring parameter for a given schedule. `mu_aff` is the complementarity
/// after the affine step (Mehrotra only); theory mode uses `1 − α_prev`
/// clamped to its interval.
pub fn choose_sigma(schedule: &SigmaSchedule, mu: f64, mu_aff: f64) -> f64 {
    match *schedule {
        SigmaSchedule::Mehrotra { min, max } => {
            let r = if mu > 0.0 { mu_aff / mu } else { 0.0 };
            (r * r * r).clamp(min, max)
        }
        SigmaSchedule::Fixed(s) => s,
    }
}

pub fn theory_sigma(t: &TheoryConfig, prev_alpha: f64) -> f64 {
    (1.0 - prev_alpha).clamp(t.sigma_min, t.sigma_max)
}

/// Relative norm: `‖r‖/‖ref‖`, or `‖r‖` when `ref = 0`.
fn relative(r: &[f64], reference: &[f64]) -> f64 {
    let d = norm2(reference);
    if d > 0.0 {
        norm2(r) / d
    } else {
        norm2(r)
    }
}

pub fn is_converged(p: &ProblemInstance, res: &Residuals, cfg: &IpmConfig) -> bool {
    relative(&res.r_p, &p.b) <= cfg.tau_p && relative(&res.r_d, &p.c) <= cfg.tau_d && res.mu <= cfg.tau_mu
}

enum System {
    Normal(NormalSystem),
    Augmented(super::newton::AugmentedOperator),
}

/// Per-iteration solve context.
struct Step<'a> {
    p: &'a ProblemInstance,
    system: System,
    precond: Box<dyn Preconditioner>,
    bar: Barrier,
    it: &'a Iterate,
    res: &'a Residuals,
    equal_steps: bool,
    step_factor: f64,
    keep_traces: bool,
}

impl Step<'_> {
    fn view(&self) -> IpmView<'_> {
        IpmView {
            gap_l: &self.bar.gap_l,
            gap_u: &self.bar.gap_u,
            s: &self.it.s,
            z: &self.it.z,
            r_p: &self.res.r_p,
            r_d: &self.res.r_d,
            n_c: self.p.n_complementarity(),
            equal_steps: self.equal_steps,
            step_factor: self.step_factor,
        }
    }

    fn steps(&self, d: &TrackedDirection) -> (f64, f64) {
        view_stepsizes(&self.view(), &d.dx, &d.ds, &d.dz)
    }

    /// Complementarity per pair after the given steps.
    fn trial_mu(&self, d: &TrackedDirection, ax: f64, as_: f64) -> f64 {
        let bar = &self.bar;
        let mut sum = 0.0;
        for j in 0..d.dx.len() {
            if bar.gap_l[j].is_finite() {
                sum += (bar.gap_l[j] + ax * d.dx[j]) * (self.it.s[j] + as_ * d.ds[j]);
            }
            if bar.gap_u[j].is_finite() {
                sum += (bar.gap_u[j] - ax * d.dx[j]) * (self.it.z[j] + as_ * d.dz[j]);
            }
        }
        let nc = self.p.n_complementarity();
        if nc == 0 {
            0.0
        } else {
            sum / nc as f64
        }
    }

    fn solve(&self, rhs: NewtonRhs, base: Option<&TrackedDirection>, ctl: &InnerControl) -> Result<InnerOutcome> {
        let (n, m) = (self.p.n(), self.p.m());
        let ctx = InnerContext { view: self.view(), rhs, base };
        let mut ctl = *ctl;
        if self.keep_traces && ctl.early.is_none() {
            ctl.record_from = Some(1);
        }
        let zeta = rhs.zeta(&ctx.view);
        let mut obs = |_: &crate::ipkrylov::InnerProgress| {};
        match &self.system {
            System::Normal(NormalSystem::Dual(op)) => {
                let t: Vec<f64> = (0..n).map(|j| op.theta[j] * (rhs.r_d[j] - zeta[j])).collect();
                let at = self.p.apply_a(&t);
                let f: Vec<f64> = rhs.r_p.iter().zip(&at).map(|(a, b)| a + b).collect();
                ipcg_solve(op, &*self.precond, &f, &vec![0.0; m], &ctx, &ctl, &mut obs)
            }
            System::Normal(NormalSystem::Primal(op)) => {
                let f: Vec<f64> = zeta.iter().zip(rhs.r_d).map(|(z, r)| z - r).collect();
                ipcg_primal_solve(op, &*self.precond, &f, &vec![0.0; n], &ctx, &ctl, &mut obs)
            }
            System::Augmented(op) => {
                let mut f: Vec<f64> = rhs.r_d.iter().zip(&zeta).map(|(r, z)| r - z).collect();
                f.extend_from_slice(rhs.r_p);
                ipminres_solve(op, &*self.precond, &f, &ctx, &ctl, &mut obs)
            }
        }
    }
}

/// Inner stopping controls for the current iteration.
fn inner_control(cfg: &IpmConfig, mu: f64, mu0: f64) -> InnerControl {
    match cfg.policy {
        StoppingPolicy::FixTol { tol } => InnerControl::residual(tol, cfg.inner_itmax),
        StoppingPolicy::VarTol { tol0, tolmax } => {
            InnerControl::residual(vartol_tolerance(mu, mu0, tol0, tolmax), cfg.inner_itmax)
        }
        StoppingPolicy::IpStop(e) => InnerControl { tau: e.tau_inner, itmax: cfg.inner_itmax, early: Some(e), theory: None, record_from: None },
    }
}

const FALLBACK_STEP: f64 = 1e-8;

/// The IPM gives up once `max(relative r_P, relative r_D, μ)` exceeds its
/// best value so far by this factor.
const DIVERGENCE_FACTOR: f64 = 1e6;

pub fn ipm_solve_report(p: &ProblemInstance, precond: &dyn PreconditionerFactory, cfg: &IpmConfig) -> IpmReport {
    let mut it = match cfg.start {
        Some((xp, xd)) => Iterate::scaled_start(p, xp, xd),
        None => Iterate::starting_point(p),
    };
    let mut stats = Vec::new();
    let status = run(p, precond, cfg, &mut it, &mut stats);
    IpmReport {
        primal_objective: p.primal_objective(&it.x),
        dual_objective: p.dual_objective(&it),
        iterate: it,
        stats,
        status,
    }
}

fn run(
    p: &ProblemInstance,
    precond: &dyn PreconditionerFactory,
    cfg: &IpmConfig,
    it: &mut Iterate,
    stats: &mut Vec<IpmIterStats>,
) -> std::result::Result<(), Error> {
    cfg.validate()?;
    let (n, m) = (p.n(), p.m());
    let use_augmented = match cfg.linear_mode {
        LinearMode::Augmented => true,
        LinearMode::NormalEq => false,
        LinearMode::Auto => p.q.is_some() && m > 0,
    };
    let equal_steps = match cfg.step_rule {
        StepRule::Auto => p.q.is_some() || cfg.theory.is_some(),
        StepRule::Separate => false,
        StepRule::Equal => true,
    };
    let res0 = compute_residuals(p, it, 0.0);
    let mu0 = res0.mu;
    let initial = (norm2(&res0.r_p), norm2(&res0.r_d), mu0);
    let mut prev_alpha = 0.0;
    let mut best_merit = f64::INFINITY;
    let zeros_m = vec![0.0; m];
    let zeros_n = vec![0.0; n];

    for k in 0..cfg.max_iter {
        let res = compute_residuals(p, it, 0.0);
        if !res.mu.is_finite() || res.r_p.iter().chain(&res.r_d).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("non-finite residuals at IPM iteration {k}")));
        }
        if is_converged(p, &res, cfg) {
            return Ok(());
        }
        let merit = relative(&res.r_p, &p.b).max(relative(&res.r_d, &p.c)).max(res.mu);
        best_merit = best_merit.min(merit);
        if merit > DIVERGENCE_FACTOR * best_merit {
            return Err(Error::NumericalBreakdown(format!(
                "diverging at IPM iteration {k}: infeasibility or μ grew from {best_merit:e} to {merit:e}"
            )));
        }
        if !it.is_interior(p) || it.x.iter().chain(&it.y).chain(&it.s).chain(&it.z).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("iterate left the interior at IPM iteration {k}")));
        }
        // Centring never targets a complementarity far below the tolerance.
        let sigma_floor = (0.1 * cfg.tau_mu / res.mu).min(1.0);
        let bar = Barrier::new(p, it);
        let (system, kind) = if use_augmented {
            let (mut op, _) = assemble_augmented(p, it, &res);
            op.reg = cfg.regularization;
            (System::Augmented(op), SystemKind::Augmented)
        } else {
            let (sys, _) = assemble_normal_equations(p, it, &res)?;
            let kind = match sys {
                NormalSystem::Dual(_) => SystemKind::NormalEq,
                NormalSystem::Primal(_) => SystemKind::PrimalNormal,
            };
            (System::Normal(sys), kind)
        };
        let pc = precond.build(kind, &bar.theta_inv)?;
        let step = Step { p, system, precond: pc, bar, it, res: &res, equal_steps, step_factor: cfg.step_factor, keep_traces: cfg.keep_traces };
        let mut ctl = inner_control(cfg, res.mu, mu0);
        let mut solves = Vec::new();
        let mut inner_its = 0;

        // Runs one inner solve, re-solving with residual stopping if the
        // indicator-stopped direction cannot be stepped along.
        let mut run_solve = |rhs: NewtonRhs, base: Option<&TrackedDirection>, kind: SolveKind, ctl: &InnerControl, solves: &mut Vec<SolveRecord>| -> std::result::Result<TrackedDirection, Error> {
            let out = step.solve(rhs, base, ctl)?;
            inner_its += out.iterations;
            let record = |out: &InnerOutcome, kind| SolveRecord {
                kind,
                iterations: out.iterations,
                relres: out.relres,
                stop_reason: out.stop_reason,
                accepted: true,
                indicator_failure: out.indicator_failure,
                trace: if cfg.keep_traces { out.trace.clone() } else { Vec::new() },
            };
            solves.push(record(&out, kind));
            if out.stop_reason == StopReason::MaxIter && out.relres > 0.5 {
                return Err(Error::InnerFailure { ipm_iter: k, relres: out.relres });
            }
            let total = |d: &TrackedDirection| match base {
                Some(b) => b.sum(d),
                None => d.clone(),
            };
            if out.stop_reason == StopReason::Indicators {
                let (ax, as_) = step.steps(&total(&out.direction));
                if ax.min(as_) < FALLBACK_STEP {
                    let strict = InnerControl { early: None, ..*ctl };
                    let again = step.solve(rhs, base, &strict)?;
                    inner_its += again.iterations;
                    solves.push(record(&again, SolveKind::Fallback));
                    if again.stop_reason == StopReason::MaxIter && again.relres > 0.5 {
                        return Err(Error::InnerFailure { ipm_iter: k, relres: again.relres });
                    }
                    return Ok(again.direction);
                }
            }
            Ok(out.direction)
        };

        let mut dir;
        let sigma;
        if let Some(t) = &cfg.theory {
            sigma = theory_sigma(t, prev_alpha);
            let omega = t.omega(sigma);
            ctl.theory = Some(TheoryStop { m_bound: t.m_bound, omega, rp_norm: norm2(&res.r_p), rd_norm: norm2(&res.r_d) });
            ctl.early = None;
            let target = compute_residuals(p, it, sigma);
            let rhs = NewtonRhs { r_p: &target.r_p, r_d: &target.r_d, r_mu: &target.r_mu, r_mu_upper: &target.r_mu_upper };
            dir = run_solve(rhs, None, SolveKind::Corrector, &ctl, &mut solves)?;
        } else {
            match cfg.sigma {
                SigmaSchedule::Fixed(s) => {
                    sigma = s.max(sigma_floor);
                    let target = compute_residuals(p, it, sigma);
                    let rhs = NewtonRhs { r_p: &target.r_p, r_d: &target.r_d, r_mu: &target.r_mu, r_mu_upper: &target.r_mu_upper };
                    dir = run_solve(rhs, None, SolveKind::Corrector, &ctl, &mut solves)?;
                }
                SigmaSchedule::Mehrotra { .. } => {
                    let rhs = NewtonRhs { r_p: &res.r_p, r_d: &res.r_d, r_mu: &res.r_mu, r_mu_upper: &res.r_mu_upper };
                    let aff = run_solve(rhs, None, SolveKind::Predictor, &ctl, &mut solves)?;
                    let (ax, as_) = step.steps(&aff);
                    let mu_aff = step.trial_mu(&aff, ax, as_);
                    sigma = choose_sigma(&cfg.sigma, res.mu, mu_aff).max(sigma_floor);
                    let target = sigma * res.mu;
                    let r_mu: Vec<f64> = (0..n)
                        .map(|j| if p.has_lower(j) { target - aff.dx[j] * aff.ds[j] } else { 0.0 })
                        .collect();
                    let r_mu_u: Vec<f64> = (0..n)
                        .map(|j| if p.has_upper(j) { target + aff.dx[j] * aff.dz[j] } else { 0.0 })
                        .collect();
                    let rhs = NewtonRhs { r_p: &zeros_m, r_d: &zeros_n, r_mu: &r_mu, r_mu_upper: &r_mu_u };
                    let corr = run_solve(rhs, Some(&aff), SolveKind::Corrector, &ctl, &mut solves)?;
                    dir = aff.sum(&corr);
                }
            }
            // Centrality correctors
            for _ in 0..cfg.max_correctors {
                let (ax, as_) = step.steps(&dir);
                let alpha = ax.min(as_);
                if alpha >= 0.999 {
                    break;
                }
                let trial = (alpha + 0.3).min(1.0);
                let target = sigma * res.mu;
                let (lo, hi) = (0.1 * target, 10.0 * target);
                let clip = |v: f64| -> f64 {
                    if v < lo {
                        lo - v
                    } else if v > hi {
                        (hi - v).max(-hi)
                    } else {
                        0.0
                    }
                };
                let bar = &step.bar;
                let r_mu: Vec<f64> = (0..n)
                    .map(|j| if p.has_lower(j) { clip((bar.gap_l[j] + trial * dir.dx[j]) * (it.s[j] + trial * dir.ds[j])) } else { 0.0 })
                    .collect();
                let r_mu_u: Vec<f64> = (0..n)
                    .map(|j| if p.has_upper(j) { clip((bar.gap_u[j] - trial * dir.dx[j]) * (it.z[j] + trial * dir.dz[j])) } else { 0.0 })
                    .collect();
                let rhs = NewtonRhs { r_p: &zeros_m, r_d: &zeros_n, r_mu: &r_mu, r_mu_upper: &r_mu_u };
                let corr = run_solve(rhs, Some(&dir), SolveKind::Centrality, &ctl, &mut solves)?;
                let cand = dir.sum(&corr);
                let (cx, cs) = step.steps(&cand);
                if cx.min(cs) > alpha {
                    dir = cand;
                } else {
                    if let Some(last) = solves.last_mut() {
                        last.accepted = false;
                    }
                    break;
                }
            }
        }

        let (mut ax, mut as_) = step.steps(&dir);
        if let Some(t) = &cfg.theory {
            let a = theory_step(p, it, &dir, ax.min(as_), t, initial)?;
            ax = a;
            as_ = a;
        }
        drop(step);
        stats.push(IpmIterStats {
            ipm_iter: k,
            inner_its,
            solves,
            alpha_x: ax,
            alpha_s: as_,
            sigma,
            mu: res.mu,
            r_p: norm2(&res.r_p),
            r_d: norm2(&res.r_d),
        });
        for j in 0..n {
            it.x[j] += ax * dir.dx[j];
            it.s[j] += as_ * dir.ds[j];
            it.z[j] += as_ * dir.dz[j];
        }
        for i in 0..m {
            it.y[i] += as_ * dir.dy[i];
        }
        prev_alpha = ax.min(as_);
    }
    let res = compute_residuals(p, it, 0.0);
    if is_converged(p, &res, cfg) {
        return Ok(());
    }
    Err(Error::IterationLimit(cfg.max_iter))
}

/// Largest `α` from `α_start·0.8ᵏ` keeping the next point in the neighbourhood
/// with the Armijo decrease; falls back to the guaranteed step.
fn theory_step(
    p: &ProblemInstance,
    it: &Iterate,
    dir: &TrackedDirection,
    alpha_start: f64,
    t: &TheoryConfig,
    initial: (f64, f64, f64),
) -> Result<f64> {
    let floor = t.alpha_tilde()?;
    let comp0 = it.complementarity(p);
    let ok = |a: f64| {
        let trial = Iterate {
            x: it.x.iter().zip(&dir.dx).map(|(v, d)| v + a * d).collect(),
            y: it.y.iter().zip(&dir.dy).map(|(v, d)| v + a * d).collect(),
            s: it.s.iter().zip(&dir.ds).map(|(v, d)| v + a * d).collect(),
            z: it.z.iter().zip(&dir.dz).map(|(v, d)| v + a * d).collect(),
        };
        neighborhood_check(p, &trial, t.gamma, t.beta_nbhd, initial) && trial.complementarity(p) <= (1.0 - 0.01 * a) * comp0
    };
    let mut a = alpha_start;
    while a > floor {
        if ok(a) {
            return Ok(a);
        }
        a *= 0.8;
    }
    Ok(floor.min(alpha_start))
}
