//! Baseline preconditioned CG and MINRES with residual-based stopping.

mod minres;
mod pcg;

pub use minres::{minres, minres_observed, DRIFT_CHECK_PERIOD};
pub(crate) use minres::direct_relres;
pub use pcg::{pcg, pcg_observed};

use crate::linop::{DiagonalOperator, SpdFactorization};

/// Denominators below this are treated as exact zeros.
pub const BREAKDOWN_TOL: f64 = 1e-300;

/// Applies `z = P⁻¹ r` for a symmetric positive definite `P`.
pub trait Preconditioner: Send + Sync {
    fn dim(&self) -> usize;
    fn solve_to(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl Preconditioner for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        DiagonalOperator::solve_to(self, r, z)
    }
}

impl Preconditioner for SpdFactorization {
    fn dim(&self) -> usize {
        SpdFactorization::dim(self)
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
        self.solve_in_place(z);
    }
}

/// `blockdiag(P₁, …, P_k)` applied blockwise.
pub struct BlockDiagonalPreconditioner {
    pub blocks: Vec<Box<dyn Preconditioner>>,
}

impl Preconditioner for BlockDiagonalPreconditioner {
    fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        let mut off = 0;
        for b in &self.blocks {
            let d = b.dim();
            b.solve_to(&r[off..off + d], &mut z[off..off + d]);
            off += d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    ResidualTol,
    MaxIter,
    /// IPM indicator stagnation (instrumented solvers only).
    Indicators,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::ResidualTol => "residual",
            StopReason::MaxIter => "maxiter",
            StopReason::Indicators => "indicators",
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// CG: `‖r‖/‖r₀‖`. MINRES: the same ratio in the `P⁻¹` norm.
    pub relative_residual: f64,
    pub stop_reason: StopReason,
}
