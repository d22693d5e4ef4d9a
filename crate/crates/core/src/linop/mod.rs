//! Linear operators.
//!
//! Everything the solvers touch (constraint matrices, Hessians, projection
//! operators, preconditioner pieces) goes through [`LinearOperator`]. Operators
//! are immutable after construction and may be shared across threads.

mod csr;
mod dense;
mod factor;
pub mod mtx;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use factor::{factorize_spd, SpdFactorization};

use crate::error::{check_len, Error, Result};

pub type Op = Arc<dyn LinearOperator>;

pub trait LinearOperator: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `y = A x`. Lengths are the caller's responsibility; use [`apply`](Self::apply)
    /// for the checked version.
    fn apply_to(&self, x: &[f64], y: &mut [f64]);

    fn has_adjoint(&self) -> bool {
        true
    }

    /// `y = Aᵀ x`.
    fn adjoint_to(&self, _x: &[f64], _y: &mut [f64]) -> Result<()> {
        Err(Error::Capability("adjoint apply"))
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), v.len())?;
        let mut out = vec![0.0; self.nrows()];
        self.apply_to(v, &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if !self.has_adjoint() {
            return Err(Error::Capability("adjoint apply"));
        }
        check_len(self.nrows(), u.len())?;
        let mut out = vec![0.0; self.ncols()];
        self.adjoint_to(u, &mut out)?;
        Ok(out)
    }
}

/// Expands an operator column by column. Intended for tests and small systems.
pub fn to_dense(op: &dyn LinearOperator) -> DenseMatrix {
    let (m, n) = (op.nrows(), op.ncols());
    let mut d = DenseMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_to(&e, &mut col);
        for i in 0..m {
            d[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    d
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn nrows(&self) -> usize {
        self.0
    }
    fn ncols(&self) -> usize {
        self.0
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ZeroOperator {
    pub nrows: usize,
    pub ncols: usize,
}

impl LinearOperator for ZeroOperator {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply_to(&self, _x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
    }
    fn adjoint_to(&self, _x: &[f64], y: &mut [f64]) -> Result<()> {
        y.fill(0.0);
        Ok(())
    }
}

/// Diagonal scaling, e.g. `Θ = XS⁻¹`.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    pub diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn all_positive(&self) -> bool {
        self.diag.iter().all(|&d| d > 0.0)
    }

    /// `y = D⁻¹ x`
    pub fn solve_to(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi / di;
        }
    }
}

impl LinearOperator for DiagonalOperator {
    fn nrows(&self) -> usize {
        self.diag.len()
    }
    fn ncols(&self) -> usize {
        self.diag.len()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = xi * di;
        }
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_to(x, y);
        Ok(())
    }
}

/// `C ⊗ B` for a 2×2 matrix `C` and a square operator `B` of size n.
#[derive(Clone)]
pub struct Kron2Operator {
    pub c: [[f64; 2]; 2],
    pub b: Op,
}

impl Kron2Operator {
    pub fn new(c: [[f64; 2]; 2], b: Op) -> Self {
        assert_eq!(b.nrows(), b.ncols(), "Kron2Operator needs a square block");
        Self { c, b }
    }

    fn combine(c: &[[f64; 2]; 2], b1: &[f64], b2: &[f64], y: &mut [f64]) {
        let n = b1.len();
        let (top, bot) = y.split_at_mut(n);
        for i in 0..n {
            top[i] = c[0][0] * b1[i] + c[0][1] * b2[i];
            bot[i] = c[1][0] * b1[i] + c[1][1] * b2[i];
        }
    }
}

impl LinearOperator for Kron2Operator {
    fn nrows(&self) -> usize {
        2 * self.b.nrows()
    }
    fn ncols(&self) -> usize {
        2 * self.b.ncols()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let n = self.b.ncols();
        let mut b1 = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        self.b.apply_to(&x[..n], &mut b1);
        self.b.apply_to(&x[n..], &mut b2);
        Self::combine(&self.c, &b1, &b2, y);
    }
    fn has_adjoint(&self) -> bool {
        self.b.has_adjoint()
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.b.nrows();
        let mut b1 = vec![0.0; n];
        let mut b2 = vec![0.0; n];
        self.b.adjoint_to(&x[..n], &mut b1)?;
        self.b.adjoint_to(&x[n..], &mut b2)?;
        let ct = [[self.c[0][0], self.c[1][0]], [self.c[0][1], self.c[1][1]]];
        Self::combine(&ct, &b1, &b2, y);
        Ok(())
    }
}

/// `RᵀR` applied as two products.
#[derive(Clone)]
pub struct GramOperator {
    pub r: Op,
}

impl LinearOperator for GramOperator {
    fn nrows(&self) -> usize {
        self.r.ncols()
    }
    fn ncols(&self) -> usize {
        self.r.ncols()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.r.nrows()];
        self.r.apply_to(x, &mut t);
        self.r
            .adjoint_to(&t, y)
            .expect("GramOperator requires an operator with an adjoint");
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_to(x, y);
        Ok(())
    }
}

/// `Σ wᵢ Aᵢ` over operators of identical shape.
#[derive(Clone)]
pub struct SumOperator {
    pub terms: Vec<(f64, Op)>,
}

impl SumOperator {
    pub fn new(terms: Vec<(f64, Op)>) -> Self {
        assert!(!terms.is_empty());
        let (m, n) = (terms[0].1.nrows(), terms[0].1.ncols());
        assert!(terms.iter().all(|(_, t)| t.nrows() == m && t.ncols() == n));
        Self { terms }
    }
}

impl LinearOperator for SumOperator {
    fn nrows(&self) -> usize {
        self.terms[0].1.nrows()
    }
    fn ncols(&self) -> usize {
        self.terms[0].1.ncols()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let mut t = vec![0.0; y.len()];
        for (w, op) in &self.terms {
            op.apply_to(x, &mut t);
            crate::vecops::axpy(*w, &t, y);
        }
    }
    fn has_adjoint(&self) -> bool {
        self.terms.iter().all(|(_, t)| t.has_adjoint())
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.fill(0.0);
        let mut t = vec![0.0; y.len()];
        for (w, op) in &self.terms {
            op.adjoint_to(x, &mut t)?;
            crate::vecops::axpy(*w, &t, y);
        }
        Ok(())
    }
}

/// One nonzero block of a [`BlockOperator`].
#[derive(Clone)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub scale: f64,
    pub op: Op,
}

/// Block-structured operator; missing blocks are zero.
#[derive(Clone)]
pub struct BlockOperator {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    blocks: Vec<Block>,
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0;
    off.push(0);
    for s in sizes {
        acc += s;
        off.push(acc);
    }
    off
}

impl BlockOperator {
    pub fn new(row_sizes: Vec<usize>, col_sizes: Vec<usize>, blocks: Vec<Block>) -> Result<Self> {
        for b in &blocks {
            if b.row >= row_sizes.len() || b.col >= col_sizes.len() {
                return Err(Error::Config("block index out of range".into()));
            }
            check_len(row_sizes[b.row], b.op.nrows())?;
            check_len(col_sizes[b.col], b.op.ncols())?;
        }
        Ok(Self {
            row_offsets: offsets(&row_sizes),
            col_offsets: offsets(&col_sizes),
            row_sizes,
            col_sizes,
            blocks,
        })
    }
}

impl LinearOperator for BlockOperator {
    fn nrows(&self) -> usize {
        self.row_sizes.iter().sum()
    }
    fn ncols(&self) -> usize {
        self.col_sizes.iter().sum()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for b in &self.blocks {
            let xs = &x[self.col_offsets[b.col]..self.col_offsets[b.col + 1]];
            let mut t = vec![0.0; self.row_sizes[b.row]];
            b.op.apply_to(xs, &mut t);
            let ys = &mut y[self.row_offsets[b.row]..self.row_offsets[b.row + 1]];
            crate::vecops::axpy(b.scale, &t, ys);
        }
    }
    fn has_adjoint(&self) -> bool {
        self.blocks.iter().all(|b| b.op.has_adjoint())
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.fill(0.0);
        for b in &self.blocks {
            let xs = &x[self.row_offsets[b.row]..self.row_offsets[b.row + 1]];
            let mut t = vec![0.0; self.col_sizes[b.col]];
            b.op.adjoint_to(xs, &mut t)?;
            let ys = &mut y[self.col_offsets[b.col]..self.col_offsets[b.col + 1]];
            crate::vecops::axpy(b.scale, &t, ys);
        }
        Ok(())
    }
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Operator known only through closures, e.g. a projection routine.
pub struct MatrixFree {
    nrows: usize,
    ncols: usize,
    apply: Box<ApplyFn>,
    adjoint: Option<Box<ApplyFn>>,
}

impl MatrixFree {
    pub fn new(
        nrows: usize,
        ncols: usize,
        apply: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { nrows, ncols, apply: Box::new(apply), adjoint: None }
    }

    pub fn with_adjoint(mut self, adjoint: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.adjoint = Some(Box::new(adjoint));
        self
    }
}

impl LinearOperator for MatrixFree {
    fn nrows(&self) -> usize {
        self.nrows
    }
    fn ncols(&self) -> usize {
        self.ncols
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        (self.apply)(x, y)
    }
    fn has_adjoint(&self) -> bool {
        self.adjoint.is_some()
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        match &self.adjoint {
            Some(f) => {
                f(x, y);
                Ok(())
            }
            None => Err(Error::Capability("adjoint apply")),
        }
    }
}

/// Wraps an operator and counts forward and adjoint applications.
pub struct CountingOperator {
    inner: Op,
    applies: AtomicUsize,
    adjoints: AtomicUsize,
}

impl CountingOperator {
    pub fn new(inner: Op) -> Self {
        Self { inner, applies: AtomicUsize::new(0), adjoints: AtomicUsize::new(0) }
    }

    pub fn applies(&self) -> usize {
        self.applies.load(Ordering::Relaxed)
    }

    pub fn adjoints(&self) -> usize {
        self.adjoints.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.applies.store(0, Ordering::Relaxed);
        self.adjoints.store(0, Ordering::Relaxed);
    }
}

impl LinearOperator for CountingOperator {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        self.applies.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_to(x, y)
    }
    fn has_adjoint(&self) -> bool {
        self.inner.has_adjoint()
    }
    fn adjoint_to(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.adjoints.fetch_add(1, Ordering::Relaxed);
        self.inner.adjoint_to(x, y)
    }
}
