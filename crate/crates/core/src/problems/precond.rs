//! Preconditioner factories for the IPM Newton systems.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ipm::{PreconditionerFactory, SystemKind};
use crate::krylov::{BlockDiagonalPreconditioner, Preconditioner};
use crate::linop::{CsrMatrix, DenseMatrix, DiagonalOperator, LinearOperator, SpdFactorization};

fn diagonal(d: Vec<f64>) -> Result<Box<dyn Preconditioner>> {
    if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::NotPositiveDefinite { row: i, pivot: d[i] });
    }
    Ok(Box::new(DiagonalOperator::new(d)))
}

/// Jacobi preconditioners from an explicit constraint matrix and `diag(Q)`.
///
/// Normal equations: `diag(AΘAᵀ)`. Primal: `diag(Q) + Θ⁻¹`. Augmented:
/// `blockdiag(diag(Q) + Θ⁻¹, diag(A D⁻¹ Aᵀ))` with `D = diag(Q) + Θ⁻¹`.
#[derive(Debug, Clone)]
pub struct JacobiFactory {
    pub a: Option<Arc<CsrMatrix>>,
    pub q_diag: Vec<f64>,
    /// Added to every diagonal entry to keep the blocks definite.
    pub shift: f64,
}

impl PreconditionerFactory for JacobiFactory {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>> {
        let d: Vec<f64> = theta_inv.iter().zip(&self.q_diag).map(|(t, q)| t + q + self.shift).collect();
        match kind {
            SystemKind::PrimalNormal => diagonal(d),
            SystemKind::NormalEq => {
                let a = self.a.as_ref().ok_or(Error::Capability("Jacobi normal equations need A"))?;
                let theta: Vec<f64> = theta_inv.iter().map(|t| 1.0 / t).collect();
                diagonal(a.weighted_row_norms_sq(&theta).into_iter().map(|v| v + self.shift).collect())
            }
            SystemKind::Augmented => {
                let a = self.a.as_ref().ok_or(Error::Capability("Jacobi augmented system needs A"))?;
                let dinv: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
                let schur: Vec<f64> = a.weighted_row_norms_sq(&dinv).into_iter().map(|v| v + self.shift).collect();
                Ok(Box::new(BlockDiagonalPreconditioner { blocks: vec![diagonal(d)?, diagonal(schur)?] }))
            }
        }
    }
}

/// Exact dense factorizations: `AΘAᵀ`, `Q + Θ⁻¹`, or for the augmented system
/// `blockdiag(Q + Θ⁻¹, A(Q + Θ⁻¹)⁻¹Aᵀ)`, with which MINRES terminates in at
/// most three steps in exact arithmetic.
#[derive(Debug, Clone)]
pub struct DenseExactFactory {
    pub a: Option<DenseMatrix>,
    pub q: Option<DenseMatrix>,
}

impl DenseExactFactory {
    fn q_plus(&self, theta_inv: &[f64]) -> DenseMatrix {
        let n = theta_inv.len();
        let mut h = self.q.clone().unwrap_or_else(|| DenseMatrix::zeros(n, n));
        for j in 0..n {
            h[(j, j)] += theta_inv[j];
        }
        h
    }
}

impl PreconditionerFactory for DenseExactFactory {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>> {
        match kind {
            SystemKind::PrimalNormal => Ok(Box::new(SpdFactorization::from_dense(&self.q_plus(theta_inv))?)),
            SystemKind::NormalEq => {
                let a = self.a.as_ref().ok_or(Error::Capability("exact normal equations need A"))?;
                let mut at = a.transpose();
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        at[(j, i)] /= theta_inv[j];
                    }
                }
                Ok(Box::new(SpdFactorization::from_dense(&a.matmul(&at))?))
            }
            SystemKind::Augmented => {
                let a = self.a.as_ref().ok_or(Error::Capability("exact augmented system needs A"))?;
                let h = SpdFactorization::from_dense(&self.q_plus(theta_inv))?;
                let (m, n) = (a.nrows(), a.ncols());
                // Columns of H⁻¹Aᵀ
                let mut hinv_at = DenseMatrix::zeros(n, m);
                for i in 0..m {
                    let col = h.solve(a.row(i))?;
                    for j in 0..n {
                        hinv_at[(j, i)] = col[j];
                    }
                }
                let schur = a.matmul(&hinv_at);
                Ok(Box::new(BlockDiagonalPreconditioner {
                    blocks: vec![Box::new(h), Box::new(SpdFactorization::from_dense(&schur)?)],
                }))
            }
        }
    }
}

/// `(C ⊗ I) + Θ⁻¹` for a symmetric 2×2 `C`, solved as independent 2×2 systems.
#[derive(Debug, Clone)]
pub struct Kron2DiagPreconditioner {
    pub c: [[f64; 2]; 2],
    pub theta_inv: Vec<f64>,
}

impl Kron2DiagPreconditioner {
    /// `P v` (for checking the solve).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.theta_inv.len() / 2;
        let c = &self.c;
        let mut out = vec![0.0; 2 * n];
        for j in 0..n {
            out[j] = (c[0][0] + self.theta_inv[j]) * v[j] + c[0][1] * v[n + j];
            out[n + j] = c[1][0] * v[j] + (c[1][1] + self.theta_inv[n + j]) * v[n + j];
        }
        out
    }
}

impl Preconditioner for Kron2DiagPreconditioner {
    fn dim(&self) -> usize {
        self.theta_inv.len()
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        let n = self.theta_inv.len() / 2;
        let c = &self.c;
        for j in 0..n {
            let a11 = c[0][0] + self.theta_inv[j];
            let a22 = c[1][1] + self.theta_inv[n + j];
            let a12 = c[0][1];
            let det = a11 * a22 - a12 * a12;
            z[j] = (a22 * r[j] - a12 * r[n + j]) / det;
            z[n + j] = (a11 * r[n + j] - a12 * r[j]) / det;
        }
    }
}

/// Factory for [`Kron2DiagPreconditioner`] on problems without equality
/// constraints.
#[derive(Debug, Clone)]
pub struct Kron2DiagFactory {
    pub c: [[f64; 2]; 2],
}

impl PreconditionerFactory for Kron2DiagFactory {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>> {
        if kind != SystemKind::PrimalNormal {
            return Err(Error::Mode(format!("2×2 block preconditioner is for Q + Θ⁻¹ only, not {kind:?}")));
        }
        if !theta_inv.len().is_multiple_of(2) {
            return Err(Error::Dimension { expected: theta_inv.len() + 1, got: theta_inv.len() });
        }
        Ok(Box::new(Kron2DiagPreconditioner { c: self.c, theta_inv: theta_inv.to_vec() }))
    }
}

/// `S̃⁻¹ = L⁻¹ M L⁻¹` with a factorized symmetric `L`.
#[derive(Debug, Clone)]
pub struct SchurPreconditioner {
    pub l: Arc<SpdFactorization>,
    pub m: Arc<CsrMatrix>,
}

impl Preconditioner for SchurPreconditioner {
    fn dim(&self) -> usize {
        self.l.dim()
    }
    fn solve_to(&self, r: &[f64], z: &mut [f64]) {
        let mut t = r.to_vec();
        self.l.solve_in_place(&mut t);
        self.m.apply_to(&t, z);
        self.l.solve_in_place(z);
    }
}
