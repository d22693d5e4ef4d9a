use std::io::Write;

use super::{IpmView, TrackedDirection};
use crate::error::Result;

/// Largest `α` keeping `v + α dv ≥ 0`: `min_{dvⱼ<0} −vⱼ/dvⱼ`, or `+∞`.
pub fn step_to_boundary(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

/// `min(1, factor·α_max)`.
pub fn scaled_step(alpha_max: f64, factor: f64) -> f64 {
    (factor * alpha_max).min(1.0)
}

/// Separate primal and dual steps for `x, s ≥ 0` with the usual 0.995 factor.
pub fn practical_stepsizes(x: &[f64], dx: &[f64], s: &[f64], ds: &[f64]) -> (f64, f64) {
    (scaled_step(step_to_boundary(x, dx), 0.995), scaled_step(step_to_boundary(s, ds), 0.995))
}

/// `Δx = v₂ + Θξ₁`, `Δs = v₁ − Θ⁻¹Δx`.
pub fn reconstruct_directions(v1: &[f64], v2: &[f64], theta: &[f64], xi_1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dx: Vec<f64> = (0..v2.len()).map(|j| v2[j] + theta[j] * xi_1[j]).collect();
    let ds = (0..v1.len()).map(|j| v1[j] - dx[j] / theta[j]).collect();
    (dx, ds)
}

/// Largest primal and dual steps to the boundary for general bounds.
pub fn boundary_steps(view: &IpmView, dx: &[f64], ds: &[f64], dz: &[f64]) -> (f64, f64) {
    let mut ax = f64::INFINITY;
    let mut as_ = f64::INFINITY;
    for j in 0..dx.len() {
        if dx[j] < 0.0 {
            ax = ax.min(view.gap_l[j] / -dx[j]);
        } else if dx[j] > 0.0 {
            ax = ax.min(view.gap_u[j] / dx[j]);
        }
        if ds[j] < 0.0 {
            as_ = as_.min(view.s[j] / -ds[j]);
        }
        if dz[j] < 0.0 {
            as_ = as_.min(view.z[j] / -dz[j]);
        }
    }
    (ax, as_)
}

/// Practical steps at `view`, honouring `view.equal_steps`.
pub fn view_stepsizes(view: &IpmView, dx: &[f64], ds: &[f64], dz: &[f64]) -> (f64, f64) {
    let (mx, ms) = boundary_steps(view, dx, ds, dz);
    let ax = scaled_step(mx, view.step_factor);
    let as_ = scaled_step(ms, view.step_factor);
    if view.equal_steps {
        let a = ax.min(as_);
        (a, a)
    } else {
        (ax, as_)
    }
}

/// IPM convergence indicators as they would be if the inner solve stopped now.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorSnapshot {
    pub iter: usize,
    pub relres: f64,
    pub p_inf: f64,
    pub d_inf: f64,
    /// Complementarity at the trial point divided by the number of pairs.
    pub mu: f64,
    pub alpha_x: f64,
    pub alpha_s: f64,
    pub m_x: f64,
    pub m_s: f64,
    pub var_p: Option<f64>,
    pub var_d: Option<f64>,
    pub var_mx: Option<f64>,
    pub var_ms: Option<f64>,
    pub var_mu: Option<f64>,
}

impl IndicatorSnapshot {
    pub fn is_finite(&self) -> bool {
        [self.p_inf, self.d_inf, self.mu, self.alpha_x, self.alpha_s, self.m_x, self.m_s]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Evaluates the indicators for the full direction `dir` (already including
/// any predictor it corrects).
pub fn indicator_snapshot(view: &IpmView, dir: &TrackedDirection, iter: usize, relres: f64) -> IndicatorSnapshot {
    let (ax, as_) = view_stepsizes(view, &dir.dx, &dir.ds, &dir.dz);
    snapshot_at(view, dir, iter, relres, ax, as_)
}

/// As [`indicator_snapshot`] with prescribed stepsizes.
pub fn snapshot_at(view: &IpmView, dir: &TrackedDirection, iter: usize, relres: f64, ax: f64, as_: f64) -> IndicatorSnapshot {
    let n = dir.dx.len();
    let mut p2 = 0.0;
    for i in 0..view.r_p.len() {
        let v = -view.r_p[i] + ax * dir.a_dx[i];
        p2 += v * v;
    }
    let mut d2 = 0.0;
    let mut comp = 0.0;
    let mut m_x = 0.0_f64;
    let mut m_s = 0.0_f64;
    for j in 0..n {
        let v = -view.r_d[j] + as_ * (dir.at_dy[j] + dir.ds[j] - dir.dz[j]) - ax * dir.q_dx[j];
        d2 += v * v;
        if view.gap_l[j].is_finite() {
            comp += (view.gap_l[j] + ax * dir.dx[j]) * (view.s[j] + as_ * dir.ds[j]);
            m_x = m_x.max((dir.dx[j] / view.gap_l[j]).abs());
            m_s = m_s.max((dir.ds[j] / view.s[j]).abs());
        }
        if view.gap_u[j].is_finite() {
            comp += (view.gap_u[j] - ax * dir.dx[j]) * (view.z[j] + as_ * dir.dz[j]);
            m_x = m_x.max((dir.dx[j] / view.gap_u[j]).abs());
            m_s = m_s.max((dir.dz[j] / view.z[j]).abs());
        }
    }
    IndicatorSnapshot {
        iter,
        relres,
        p_inf: p2.sqrt(),
        d_inf: d2.sqrt(),
        mu: if view.n_c > 0 { comp / view.n_c as f64 } else { 0.0 },
        alpha_x: ax,
        alpha_s: as_,
        m_x,
        m_s,
        var_p: None,
        var_d: None,
        var_mx: None,
        var_ms: None,
        var_mu: None,
    }
}

/// Mean absolute relative change over the last `window` steps of `values`.
///
/// Returns `None` when fewer than `window + 1` values are available. The flag
/// is set when some denominator was zero; that term then contributes 0.
pub fn var_window(values: &[f64], window: usize) -> Option<(f64, bool)> {
    if window == 0 || values.len() < window + 1 {
        return None;
    }
    let j = values.len() - 1;
    let mut sum = 0.0;
    let mut zero = false;
    for i in 0..window {
        let prev = values[j - i - 1];
        if prev == 0.0 {
            zero = true;
            continue;
        }
        sum += ((values[j - i] - prev) / prev).abs();
    }
    Some((sum / window as f64, zero))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopConfig {
    pub epsilon: f64,
    pub itstart: usize,
    pub tau_inner: f64,
    pub window: usize,
    pub use_var_mu: bool,
}

impl EarlyStopConfig {
    pub fn new(epsilon: f64, itstart: usize, tau_inner: f64) -> Self {
        Self { epsilon, itstart, tau_inner, window: 5, use_var_mu: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || self.window == 0 || !(self.tau_inner > 0.0) {
            return Err(crate::Error::Config(format!("invalid early stopping configuration {self:?}")));
        }
        Ok(())
    }
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self::new(0.01, 5, 1e-6)
    }
}

/// Fills the `var_*` fields of the last snapshot in `trace` from its predecessors.
pub fn update_variations(trace: &mut [IndicatorSnapshot], window: usize) {
    let Some(k) = trace.len().checked_sub(1) else { return };
    if trace.len() < window + 1 {
        return;
    }
    let tail = &trace[k - window..];
    let series = |f: fn(&IndicatorSnapshot) -> f64| -> Option<f64> {
        let vals: Vec<f64> = tail.iter().map(f).collect();
        var_window(&vals, window).map(|(v, _)| v)
    };
    let (vp, vd, vx, vs, vm) =
        (series(|s| s.p_inf), series(|s| s.d_inf), series(|s| s.m_x), series(|s| s.m_s), series(|s| s.mu));
    let last = &mut trace[k];
    last.var_p = vp;
    last.var_d = vd;
    last.var_mx = vx;
    last.var_ms = vs;
    last.var_mu = vm;
}

/// Stops when every applicable variation is below `ε` or the residual test fires.
/// `var_P` is ignored without equality constraints.
pub fn early_stop_decision(last: &IndicatorSnapshot, cfg: &EarlyStopConfig, has_equalities: bool) -> bool {
    if last.relres < cfg.tau_inner {
        return true;
    }
    let below = |v: Option<f64>| v.is_some_and(|v| v < cfg.epsilon);
    (!has_equalities || below(last.var_p))
        && below(last.var_d)
        && below(last.var_mx)
        && below(last.var_ms)
        && (!cfg.use_var_mu || below(last.var_mu))
}

pub const TRACE_HEADER: &str = "iter,relres,p_inf,d_inf,mu,alpha_x,alpha_s,Mx,Ms,var_P,var_D,var_Mx,var_Ms";

pub fn write_trace_csv<W: Write>(mut w: W, trace: &[IndicatorSnapshot]) -> Result<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:e}"));
    writeln!(w, "{TRACE_HEADER}")?;
    for s in trace {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{},{},{:e},{:e},{},{},{},{}",
            s.iter,
            s.relres,
            s.p_inf,
            s.d_inf,
            s.mu,
            s.alpha_x,
            s.alpha_s,
            s.m_x,
            s.m_s,
            opt(s.var_p),
            opt(s.var_d),
            opt(s.var_mx),
            opt(s.var_ms)
        )?;
    }
    Ok(())
}
