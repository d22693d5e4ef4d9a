use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::ipm::{BoundKind, Iterate, ProblemInstance};
use crate::linop::{CsrMatrix, DenseMatrix, LinearOperator, Op};

/// Random LP or convex QP constructed around a known primal-dual solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub m: usize,
    pub n: usize,
    pub qp: bool,
    /// Rank of `Q = BᵀB` (clamped to `n`); ignored for LPs.
    pub q_rank: usize,
    /// Fraction of variables with a finite upper bound.
    pub box_fraction: f64,
}

impl RandomSpec {
    pub fn lp(m: usize, n: usize) -> Self {
        Self { m, n, qp: false, q_rank: 0, box_fraction: 0.0 }
    }

    pub fn qp(m: usize, n: usize) -> Self {
        Self { m, n, qp: true, q_rank: n / 2 + 1, box_fraction: 0.0 }
    }
}

#[derive(Clone)]
pub struct RandomInstance {
    pub spec: RandomSpec,
    pub a: DenseMatrix,
    pub q: Option<DenseMatrix>,
    pub bounds: Vec<BoundKind>,
    pub problem: ProblemInstance,
    /// A primal-dual optimal point.
    pub solution: Iterate,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gen_random(spec: RandomSpec, seed: u64) -> Result<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (m, n) = (spec.m, spec.n);
    let a = DenseMatrix::from_row_major(m, n, (0..m * n).map(|_| normal(&mut rng)).collect());
    let q = if spec.qp {
        let k = spec.q_rank.clamp(1, n);
        let b = DenseMatrix::from_row_major(k, n, (0..k * n).map(|_| normal(&mut rng) / (k as f64).sqrt()).collect());
        let mut q = b.transpose().matmul(&b);
        // exact symmetry
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (q[(i, j)] + q[(j, i)]);
                q[(i, j)] = v;
                q[(j, i)] = v;
            }
        }
        Some(q)
    } else {
        None
    };

    let mut bounds = Vec::with_capacity(n);
    let mut x = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    for j in 0..n {
        let boxed = rng.random::<f64>() < spec.box_fraction;
        // Strict complementarity: each variable is at a bound or strictly inside.
        let state = rng.random_range(0..3u8);
        if boxed {
            let (l, u) = (-rng.random_range(0.0..1.0), rng.random_range(1.0..3.0));
            bounds.push(BoundKind::Box(l, u));
            match state {
                0 => {
                    x[j] = l;
                    s[j] = rng.random_range(0.5..2.0);
                }
                1 => {
                    x[j] = u;
                    z[j] = rng.random_range(0.5..2.0);
                }
                _ => x[j] = rng.random_range(l + 0.2..u - 0.2),
            }
        } else {
            bounds.push(BoundKind::NonNeg);
            if state == 0 {
                s[j] = rng.random_range(0.5..2.0);
            } else {
                x[j] = rng.random_range(0.5..2.0);
            }
        }
    }
    let y: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();

    let b = a.apply(&x)?;
    let aty = a.apply_adjoint(&y)?;
    let qx = match &q {
        Some(q) => q.apply(&x)?,
        None => vec![0.0; n],
    };
    let c: Vec<f64> = (0..n).map(|j| aty[j] + s[j] - z[j] - qx[j]).collect();

    let a_op: Option<Op> = (m > 0).then(|| Arc::new(a.clone()) as Op);
    let q_op: Option<Op> = q.as_ref().map(|q| Arc::new(q.clone()) as Op);
    let problem = ProblemInstance::new(q_op, a_op, b, c, &bounds)?;
    Ok(RandomInstance { spec, a, q, bounds, problem, solution: Iterate { x, y, s, z } })
}

impl RandomInstance {
    pub fn jacobi(&self) -> super::JacobiFactory {
        let q_diag = match &self.q {
            Some(q) => (0..self.spec.n).map(|j| q[(j, j)]).collect(),
            None => vec![0.0; self.spec.n],
        };
        super::JacobiFactory { a: Some(Arc::new(CsrMatrix::from_dense(&self.a))), q_diag, shift: 0.0 }
    }

    pub fn exact(&self) -> super::DenseExactFactory {
        super::DenseExactFactory { a: (self.spec.m > 0).then(|| self.a.clone()), q: self.q.clone() }
    }
}
