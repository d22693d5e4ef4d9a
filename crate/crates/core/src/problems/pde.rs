//! Distributed Poisson control on the unit square with box-constrained
//! control, discretized with bilinear (Q1) elements on a uniform grid.
//!
//! Variables are `[y; u]`: the state is free, the control is boxed, and the
//! constraint is `K y − J u = f`.

use std::sync::Arc;

use super::precond::SchurPreconditioner;
use crate::error::{Error, Result};
use crate::ipm::{BoundKind, PreconditionerFactory, ProblemInstance, SystemKind};
use crate::krylov::{BlockDiagonalPreconditioner, Preconditioner};
use crate::linop::{Block, BlockOperator, CsrMatrix, DiagonalOperator, LinearOperator, Op, SpdFactorization};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeTarget {
    /// `sin(πx)·sin(πy)`
    Bump,
    /// `(2x−1)²(2y−1)²` on `[0, ½]²`, zero elsewhere.
    Corner,
}

impl PdeTarget {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            PdeTarget::Bump => (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin(),
            PdeTarget::Corner => {
                if x <= 0.5 && y <= 0.5 {
                    (2.0 * x - 1.0).powi(2) * (2.0 * y - 1.0).powi(2)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PdeTarget::Bump => "bump",
            PdeTarget::Corner => "corner",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bump" => Ok(PdeTarget::Bump),
            "corner" => Ok(PdeTarget::Corner),
            _ => Err(Error::Parse(format!("unknown PDE target {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeParams {
    pub nc: u32,
    pub beta: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub target: PdeTarget,
}

impl Default for PdeParams {
    fn default() -> Self {
        Self { nc: 5, beta: 1e-5, u_a: 0.0, u_b: 10.0, target: PdeTarget::Bump }
    }
}

impl PdeParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.nc) {
            return Err(Error::Config(format!("nc = {} out of range", self.nc)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config("β must be positive".into()));
        }
        if !(self.u_a < self.u_b) {
            return Err(Error::Config("need u_a < u_b".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PdeInstance {
    pub params: PdeParams,
    /// Nodes per side.
    pub side: usize,
    pub mass: Arc<CsrMatrix>,
    /// Stiffness with Dirichlet rows and columns replaced by the identity.
    pub stiffness: Arc<CsrMatrix>,
    /// Mass with Dirichlet rows and columns zeroed.
    pub j: Arc<CsrMatrix>,
    pub y0: Vec<f64>,
    pub f: Vec<f64>,
    pub u_a: Vec<f64>,
    pub u_b: Vec<f64>,
}

const MASS_ELEM: [[f64; 4]; 4] = [[4.0, 2.0, 1.0, 2.0], [2.0, 4.0, 2.0, 1.0], [1.0, 2.0, 4.0, 2.0], [2.0, 1.0, 2.0, 4.0]];
const STIFF_ELEM: [[f64; 4]; 4] =
    [[4.0, -1.0, -2.0, -1.0], [-1.0, 4.0, -1.0, -2.0], [-2.0, -1.0, 4.0, -1.0], [-1.0, -2.0, -1.0, 4.0]];

/// Q1 mass and stiffness matrices on a `2^nc × 2^nc` element grid, nodes
/// numbered row by row.
pub fn q1_matrices(nc: u32) -> (CsrMatrix, CsrMatrix) {
    let ne = 1usize << nc;
    let side = ne + 1;
    let h = 1.0 / ne as f64;
    let mut m = Vec::with_capacity(16 * ne * ne);
    let mut k = Vec::with_capacity(16 * ne * ne);
    for ey in 0..ne {
        for ex in 0..ne {
            let nodes = [ey * side + ex, ey * side + ex + 1, (ey + 1) * side + ex + 1, (ey + 1) * side + ex];
            for a in 0..4 {
                for b in 0..4 {
                    m.push((nodes[a], nodes[b], h * h / 36.0 * MASS_ELEM[a][b]));
                    k.push((nodes[a], nodes[b], STIFF_ELEM[a][b] / 6.0));
                }
            }
        }
    }
    let n = side * side;
    (CsrMatrix::from_triplets(n, n, &m), CsrMatrix::from_triplets(n, n, &k))
}

pub fn boundary_nodes(side: usize) -> Vec<bool> {
    (0..side * side)
        .map(|i| {
            let (x, y) = (i % side, i / side);
            x == 0 || y == 0 || x == side - 1 || y == side - 1
        })
        .collect()
}

impl PdeInstance {
    /// Assembles the discrete problem with zero source and zero boundary data.
    pub fn assemble(params: PdeParams) -> Result<Self> {
        params.validate()?;
        let side = (1usize << params.nc) + 1;
        let n = side * side;
        let h = 1.0 / (side - 1) as f64;
        let (mass, stiff) = q1_matrices(params.nc);
        let bnd = boundary_nodes(side);
        let stiffness = CsrMatrix::from_triplets(
            n,
            n,
            &stiff
                .triplets()
                .into_iter()
                .filter(|&(i, j, _)| !bnd[i] && !bnd[j])
                .chain((0..n).filter(|&i| bnd[i]).map(|i| (i, i, 1.0)))
                .collect::<Vec<_>>(),
        );
        let j = CsrMatrix::from_triplets(
            n,
            n,
            &mass.triplets().into_iter().filter(|&(i, j, _)| !bnd[i] && !bnd[j]).collect::<Vec<_>>(),
        );
        let y0 = (0..n).map(|i| params.target.eval((i % side) as f64 * h, (i / side) as f64 * h)).collect();
        Ok(Self {
            params,
            side,
            mass: Arc::new(mass),
            stiffness: Arc::new(stiffness),
            j: Arc::new(j),
            y0,
            f: vec![0.0; n],
            u_a: vec![params.u_a; n],
            u_b: vec![params.u_b; n],
        })
    }

    pub fn n(&self) -> usize {
        self.side * self.side
    }

    /// `blockdiag(M, βM)`
    pub fn q_operator(&self) -> Result<BlockOperator> {
        let n = self.n();
        let m: Op = self.mass.clone();
        BlockOperator::new(
            vec![n, n],
            vec![n, n],
            vec![
                Block { row: 0, col: 0, scale: 1.0, op: m.clone() },
                Block { row: 1, col: 1, scale: self.params.beta, op: m },
            ],
        )
    }

    /// `[K, −J]`
    pub fn a_operator(&self) -> Result<BlockOperator> {
        let n = self.n();
        BlockOperator::new(
            vec![n],
            vec![n, n],
            vec![
                Block { row: 0, col: 0, scale: 1.0, op: self.stiffness.clone() },
                Block { row: 0, col: 1, scale: -1.0, op: self.j.clone() },
            ],
        )
    }

    pub fn preconditioner(&self) -> Result<PdeFactory> {
        let l = self.stiffness.linear_combination(1.0, &self.j, 1.0 / self.params.beta.sqrt());
        Ok(PdeFactory {
            mass_diag: self.mass.diagonal(),
            beta: self.params.beta,
            schur: Arc::new(SpdFactorization::from_csr(&l)?),
            mass: self.mass.clone(),
        })
    }
}

/// The IPM form: state free, control boxed, `λ` is the equality dual.
pub fn ipm_variable_mapping_pde(inst: &PdeInstance) -> Result<ProblemInstance> {
    let n = inst.n();
    let my0 = inst.mass.apply(&inst.y0)?;
    let mut c = vec![0.0; 2 * n];
    for i in 0..n {
        c[i] = -my0[i];
    }
    let mut bounds = vec![BoundKind::Free; n];
    for i in 0..n {
        bounds.push(match (inst.u_a[i].is_finite(), inst.u_b[i].is_finite()) {
            (true, true) => BoundKind::Box(inst.u_a[i], inst.u_b[i]),
            (true, false) if inst.u_a[i] == 0.0 => BoundKind::NonNeg,
            (false, false) => BoundKind::Free,
            _ => return Err(Error::Config("one-sided control bounds other than u ≥ 0 are not supported".into())),
        });
    }
    ProblemInstance::new(Some(Arc::new(inst.q_operator()?)), Some(Arc::new(inst.a_operator()?)), inst.f.clone(), c, &bounds)
}

/// `blockdiag(M̃, βM̃ + Θ, S̃)` with `M̃ = diag(M)` and
/// `S̃⁻¹ = (K + J/√β)⁻¹ M (K + J/√β)⁻¹`.
#[derive(Debug, Clone)]
pub struct PdeFactory {
    pub mass_diag: Vec<f64>,
    pub beta: f64,
    pub schur: Arc<SpdFactorization>,
    pub mass: Arc<CsrMatrix>,
}

impl PreconditionerFactory for PdeFactory {
    fn build(&self, kind: SystemKind, theta_inv: &[f64]) -> Result<Box<dyn Preconditioner>> {
        if kind != SystemKind::Augmented {
            return Err(Error::Mode(format!("PDE preconditioner is for the augmented system, not {kind:?}")));
        }
        let n = self.mass_diag.len();
        if theta_inv.len() != 2 * n {
            return Err(Error::Dimension { expected: 2 * n, got: theta_inv.len() });
        }
        let mut d = Vec::with_capacity(2 * n);
        d.extend((0..n).map(|i| self.mass_diag[i] + theta_inv[i]));
        d.extend((0..n).map(|i| self.beta * self.mass_diag[i] + theta_inv[n + i]));
        Ok(Box::new(BlockDiagonalPreconditioner {
            blocks: vec![
                Box::new(DiagonalOperator::new(d)),
                Box::new(SchurPreconditioner { l: self.schur.clone(), m: self.mass.clone() }),
            ],
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_mass_rows_sum_to_cell_area() {
        let (m, _) = q1_matrices(3);
        let side = 9;
        let h = 1.0 / 8.0;
        let bnd = boundary_nodes(side);
        for i in (0..side * side).filter(|&i| !bnd[i]) {
            let (_, v) = m.row(i);
            assert!((v.iter().sum::<f64>() - h * h).abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_annihilates_constants_in_interior() {
        let (_, k) = q1_matrices(3);
        let side = 9;
        let bnd = boundary_nodes(side);
        let out = k.apply(&vec![1.0; side * side]).unwrap();
        for i in 0..side * side {
            if !bnd[i] {
                assert!(out[i].abs() < 1e-14);
            }
        }
        // the full Neumann matrix annihilates constants everywhere
        assert!(out.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn dirichlet_conventions() {
        let inst = PdeInstance::assemble(PdeParams { nc: 3, ..Default::default() }).unwrap();
        let bnd = boundary_nodes(inst.side);
        for i in 0..inst.n() {
            if bnd[i] {
                let (cols, vals) = inst.stiffness.row(i);
                assert_eq!((cols, vals), (&[i][..], &[1.0][..]));
                assert_eq!(inst.j.row(i).0.len(), 0);
            }
        }
        assert!(inst.stiffness.max_asymmetry() == 0.0);
    }
}
