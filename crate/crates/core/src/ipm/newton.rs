//! Newton system reductions: normal equations (`AΘAᵀ`, or `Q + Θ⁻¹` without
//! equality constraints) and the augmented system.
//!
//! The operators here perform exactly the same floating point operations as
//! the instrumented solvers in [`crate::ipkrylov`], which compute the same
//! products but keep the intermediate vectors.

use super::problem::{Iterate, ProblemInstance, Residuals};
use crate::error::{Error, Result};
use crate::linop::{LinearOperator, Op};

/// Diagonal quantities of the barrier at an iterate.
#[derive(Debug, Clone)]
pub struct Barrier {
    /// `x − l` (`+∞` where no lower bound)
    pub gap_l: Vec<f64>,
    /// `u − x` (`+∞` where no upper bound)
    pub gap_u: Vec<f64>,
    /// `Θ⁻¹ = S(X−L)⁻¹ + Z(U−X)⁻¹`; zero for free variables.
    pub theta_inv: Vec<f64>,
}

impl Barrier {
    pub fn new(p: &ProblemInstance, it: &Iterate) -> Self {
        let (gap_l, gap_u) = it.gaps(p);
        let theta_inv = (0..p.n())
            .map(|j| {
                let mut t = 0.0;
                if p.has_lower(j) {
                    t += it.s[j] / gap_l[j];
                }
                if p.has_upper(j) {
                    t += it.z[j] / gap_u[j];
                }
                t
            })
            .collect();
        Self { gap_l, gap_u, theta_inv }
    }

    /// `ζ = (X−L)⁻¹r_μ − (U−X)⁻¹r_μ^u`, i.e. `X⁻¹r_μ` for `x ≥ 0`.
    pub fn zeta(&self, r_mu: &[f64], r_mu_upper: &[f64]) -> Vec<f64> {
        (0..self.gap_l.len()).map(|j| zeta_j(self, r_mu, r_mu_upper, j)).collect()
    }
}

fn zeta_j(b: &Barrier, r_mu: &[f64], r_mu_upper: &[f64], j: usize) -> f64 {
    let mut v = 0.0;
    if b.gap_l[j].is_finite() {
        v += r_mu[j] / b.gap_l[j];
    }
    if b.gap_u[j].is_finite() {
        v -= r_mu_upper[j] / b.gap_u[j];
    }
    v
}

/// `Δs = (r_μ − SΔx)/(x − l)` and `Δz = (r_μ^u + ZΔx)/(u − x)`; zero where the
/// bound is absent. Built this way the linearised complementarity equation
/// holds for any `Δx`, exact or not.
pub fn dual_steps(
    gap_l: &[f64],
    gap_u: &[f64],
    s: &[f64],
    z: &[f64],
    r_mu: &[f64],
    r_mu_upper: &[f64],
    dx: &[f64],
    ds: &mut [f64],
    dz: &mut [f64],
) {
    for j in 0..dx.len() {
        ds[j] = if gap_l[j].is_finite() { (r_mu[j] - s[j] * dx[j]) / gap_l[j] } else { 0.0 };
        dz[j] = if gap_u[j].is_finite() { (r_mu_upper[j] + z[j] * dx[j]) / gap_u[j] } else { 0.0 };
    }
}

/// `w₁ = Aᵀu`, `t = Θw₁`, `w₂ = At`.
pub(crate) fn normal_apply(a: &dyn LinearOperator, theta: &[f64], u: &[f64], w1: &mut [f64], t: &mut [f64], w2: &mut [f64]) {
    a.adjoint_to(u, w1).expect("normal equations need Aᵀ");
    for j in 0..t.len() {
        t[j] = theta[j] * w1[j];
    }
    a.apply_to(t, w2);
}

/// `y = wq + Θ⁻¹u` where `wq = Qu`.
pub(crate) fn primal_combine(theta_inv: &[f64], u: &[f64], wq: &[f64], y: &mut [f64]) {
    for j in 0..y.len() {
        y[j] = wq[j] + theta_inv[j] * u[j];
    }
}

/// Assembles `[−Qv₁ − Θ⁻¹v₁ + Aᵀv₂; Av₁ − δv₂]` from the byproducts.
pub(crate) fn augmented_combine(
    theta_inv: &[f64],
    reg: f64,
    v: &[f64],
    zq: &[f64],
    za: &[f64],
    zy: &[f64],
    out: &mut [f64],
) {
    let n = theta_inv.len();
    for j in 0..n {
        out[j] = -zq[j] - theta_inv[j] * v[j] + zy[j];
    }
    if reg == 0.0 {
        out[n..].copy_from_slice(za);
    } else {
        for i in 0..za.len() {
            out[n + i] = za[i] - reg * v[n + i];
        }
    }
}

pub(crate) fn q_apply(q: &Option<Op>, v: &[f64], out: &mut [f64]) {
    match q {
        Some(q) => q.apply_to(v, out),
        None => out.fill(0.0),
    }
}

/// `AΘAᵀ`, applied matrix-free.
#[derive(Clone)]
pub struct NormalEqOperator {
    pub a: Op,
    pub theta: Vec<f64>,
}

impl LinearOperator for NormalEqOperator {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }
    fn ncols(&self) -> usize {
        self.a.nrows()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let n = self.theta.len();
        let mut w1 = vec![0.0; n];
        let mut t = vec![0.0; n];
        normal_apply(&*self.a, &self.theta, x, &mut w1, &mut t, y);
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_to(x, y);
        Ok(())
    }
}

/// `Q + Θ⁻¹` for problems without equality constraints.
#[derive(Clone)]
pub struct PrimalNormalOperator {
    pub q: Option<Op>,
    pub theta_inv: Vec<f64>,
}

impl LinearOperator for PrimalNormalOperator {
    fn nrows(&self) -> usize {
        self.theta_inv.len()
    }
    fn ncols(&self) -> usize {
        self.theta_inv.len()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let mut wq = vec![0.0; x.len()];
        q_apply(&self.q, x, &mut wq);
        primal_combine(&self.theta_inv, x, &wq, y);
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_to(x, y);
        Ok(())
    }
}

/// `[[−Q−Θ⁻¹, Aᵀ], [A, −δI]]` with `δ = reg` (zero by default).
#[derive(Clone)]
pub struct AugmentedOperator {
    pub q: Option<Op>,
    pub a: Option<Op>,
    pub theta_inv: Vec<f64>,
    pub reg: f64,
}

impl AugmentedOperator {
    pub fn n(&self) -> usize {
        self.theta_inv.len()
    }

    pub fn m(&self) -> usize {
        self.a.as_ref().map_or(0, |a| a.nrows())
    }

    /// Byproducts `Qv₁`, `Av₁`, `Aᵀv₂` of one apply.
    pub(crate) fn byproducts(&self, v: &[f64], zq: &mut [f64], za: &mut [f64], zy: &mut [f64]) {
        let n = self.n();
        q_apply(&self.q, &v[..n], zq);
        match &self.a {
            Some(a) => {
                a.apply_to(&v[..n], za);
                a.adjoint_to(&v[n..], zy).expect("augmented system needs Aᵀ");
            }
            None => zy.fill(0.0),
        }
    }
}

impl LinearOperator for AugmentedOperator {
    fn nrows(&self) -> usize {
        self.n() + self.m()
    }
    fn ncols(&self) -> usize {
        self.n() + self.m()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let (n, m) = (self.n(), self.m());
        let mut zq = vec![0.0; n];
        let mut za = vec![0.0; m];
        let mut zy = vec![0.0; n];
        self.byproducts(x, &mut zq, &mut za, &mut zy);
        augmented_combine(&self.theta_inv, self.reg, x, &zq, &za, &zy, y);
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_to(x, y);
        Ok(())
    }
}

/// Reduced normal-equations system.
#[derive(Clone)]
pub enum NormalSystem {
    /// `AΘAᵀΔy = r_P + AΘ(r_D − ζ)` (LP).
    Dual(NormalEqOperator),
    /// `(Q + Θ⁻¹)Δx = ζ − r_D` (no equality constraints).
    Primal(PrimalNormalOperator),
}

impl NormalSystem {
    pub fn operator(&self) -> &dyn LinearOperator {
        match self {
            NormalSystem::Dual(o) => o,
            NormalSystem::Primal(o) => o,
        }
    }
}

pub fn assemble_normal_equations(p: &ProblemInstance, it: &Iterate, res: &Residuals) -> Result<(NormalSystem, Vec<f64>)> {
    let bar = Barrier::new(p, it);
    let zeta = bar.zeta(&res.r_mu, &res.r_mu_upper);
    match (&p.a, &p.q) {
        (Some(_), Some(_)) => Err(Error::Mode("normal equations need Q = 0 or no equality constraints; use the augmented system".into())),
        (Some(a), None) => {
            if let Some(j) = bar.theta_inv.iter().position(|&t| !(t > 0.0)) {
                if p.has_lower(j) || p.has_upper(j) {
                    return Err(Error::NumericalBreakdown(format!("barrier weight of variable {j} is {}", bar.theta_inv[j])));
                }
                return Err(Error::Mode(format!("variable {j} is free; LP normal equations need every variable bounded")));
            }
            let theta: Vec<f64> = bar.theta_inv.iter().map(|t| 1.0 / t).collect();
            let t: Vec<f64> = (0..p.n()).map(|j| theta[j] * (res.r_d[j] - zeta[j])).collect();
            let at = p.apply_a(&t);
            let rhs = res.r_p.iter().zip(&at).map(|(r, v)| r + v).collect();
            Ok((NormalSystem::Dual(NormalEqOperator { a: a.clone(), theta }), rhs))
        }
        (None, q) => {
            let rhs = zeta.iter().zip(&res.r_d).map(|(z, r)| z - r).collect();
            Ok((NormalSystem::Primal(PrimalNormalOperator { q: q.clone(), theta_inv: bar.theta_inv }), rhs))
        }
    }
}

pub fn assemble_augmented(p: &ProblemInstance, it: &Iterate, res: &Residuals) -> (AugmentedOperator, Vec<f64>) {
    let bar = Barrier::new(p, it);
    let zeta = bar.zeta(&res.r_mu, &res.r_mu_upper);
    let mut rhs: Vec<f64> = res.r_d.iter().zip(&zeta).map(|(r, z)| r - z).collect();
    rhs.extend_from_slice(&res.r_p);
    (AugmentedOperator { q: p.q.clone(), a: p.a.clone(), theta_inv: bar.theta_inv, reg: 0.0 }, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipm::problem::{compute_residuals, BoundKind};
    use crate::linop::{to_dense, DenseMatrix};
    use std::sync::Arc;

    #[test]
    fn scalar_normal_equations() {
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0]]));
        let p = ProblemInstance::new(None, Some(a), vec![2.0], vec![1.0], &[BoundKind::NonNeg]).unwrap();
        // Θ = x/s = 2
        let it = Iterate { x: vec![2.0], y: vec![0.0], s: vec![1.0], z: vec![0.0] };
        let res = compute_residuals(&p, &it, 0.5);
        let (sys, rhs) = assemble_normal_equations(&p, &it, &res).unwrap();
        assert_eq!(to_dense(sys.operator())[(0, 0)], 2.0);
        // r_P = 0, r_D = 1 − 1 = 0, r_μ = 0.5·2 − 2 = −1, ζ = −0.5 → rhs = 2·(0 + 0.5) = 1
        assert_eq!(rhs, vec![1.0]);
    }

    #[test]
    fn scalar_augmented() {
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0]]));
        let p = ProblemInstance::new(None, Some(a), vec![1.0], vec![1.0], &[BoundKind::NonNeg]).unwrap();
        let it = Iterate { x: vec![1.0], y: vec![0.0], s: vec![1.0], z: vec![0.0] };
        let res = compute_residuals(&p, &it, 1.0);
        let (op, _) = assemble_augmented(&p, &it, &res);
        let d = to_dense(&op);
        assert_eq!(d.data(), &[-1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn mode_error_for_qp_with_constraints() {
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0, 1.0]]));
        let q: Op = Arc::new(DenseMatrix::identity(2));
        let p = ProblemInstance::new(Some(q), Some(a), vec![1.0], vec![0.0; 2], &[BoundKind::NonNeg; 2]).unwrap();
        let it = Iterate::starting_point(&p);
        let res = compute_residuals(&p, &it, 0.1);
        assert!(matches!(assemble_normal_equations(&p, &it, &res), Err(Error::Mode(_))));
    }

    #[test]
    fn symmetric_box_theta() {
        let p = ProblemInstance::new(None, None, vec![], vec![0.0], &[BoundKind::Box(-1.0, 1.0)]).unwrap();
        let it = Iterate { x: vec![0.0], y: vec![], s: vec![0.5], z: vec![0.5] };
        let bar = Barrier::new(&p, &it);
        assert_eq!(bar.theta_inv, vec![1.0]);
        let free = ProblemInstance::new(None, None, vec![], vec![0.0], &[BoundKind::Box(f64::NEG_INFINITY, f64::INFINITY)]).unwrap();
        let it = Iterate { x: vec![0.3], y: vec![], s: vec![0.0], z: vec![0.0] };
        assert_eq!(Barrier::new(&free, &it).theta_inv, vec![0.0]);
    }
}
