//! Compressed sensing: `min τeᵀz + ½‖Fᵀz − b‖²`, `z = [u; v] ≥ 0`, `Fᵀ = [A, −A]`.

use std::sync::Arc;

use rand::{seq::index::sample, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::precond::Kron2DiagFactory;
use crate::error::{Error, Result};
use crate::ipm::{BoundKind, ProblemInstance};
use crate::linop::{DenseMatrix, GramOperator, Kron2Operator, LinearOperator};
use crate::vecops::norm_inf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsParams {
    pub m: usize,
    pub n: usize,
    pub k_sparse: usize,
    /// `τ = tau_rel · ‖Aᵀb‖∞`.
    pub tau_rel: f64,
    /// Absolute noise standard deviation on `b`.
    pub noise_sigma: f64,
    /// Rows of the Gaussian matrix are scaled geometrically from 1 down to
    /// `1/row_decay` before the columns are normalized.
    pub row_decay: f64,
}

impl Default for CsParams {
    fn default() -> Self {
        Self { m: 512, n: 2048, k_sparse: 64, tau_rel: 1e-3, noise_sigma: 1e-3, row_decay: 100.0 }
    }
}

impl CsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_sparse < self.m && self.m < self.n) {
            return Err(Error::Config(format!("need k < m < n (k = {}, m = {}, n = {})", self.k_sparse, self.m, self.n)));
        }
        if !(self.tau_rel > 0.0 && self.noise_sigma >= 0.0 && self.row_decay >= 1.0) {
            return Err(Error::Config("need τ > 0, nonnegative noise and row_decay ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CsInstance {
    pub params: CsParams,
    pub seed: u64,
    /// Gaussian with unit-norm columns.
    pub a: Arc<DenseMatrix>,
    pub x_true: Vec<f64>,
    pub b: Vec<f64>,
    pub tau: f64,
    /// Mean diagonal of `AᵀA`.
    pub eta: f64,
}

impl CsInstance {
    pub fn generate(params: CsParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let (m, n) = (params.m, params.n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        for (i, row) in data.chunks_exact_mut(n).enumerate() {
            let t = if m > 1 { i as f64 / (m - 1) as f64 } else { 0.0 };
            let scale = params.row_decay.powf(-t);
            row.iter_mut().for_each(|v| *v *= scale);
        }
        let mut a = DenseMatrix::from_row_major(m, n, data);
        let norms = a.column_norms();
        a.scale_columns(&norms.iter().map(|v| 1.0 / v).collect::<Vec<_>>());
        let mut x_true = vec![0.0; n];
        for j in sample(&mut rng, n, params.k_sparse) {
            let mag = 1.0 + rng.sample::<f64, _>(StandardNormal).abs();
            x_true[j] = if rng.random::<bool>() { mag } else { -mag };
        }
        let mut b = a.apply(&x_true)?;
        for v in &mut b {
            *v += params.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let tau = params.tau_rel * norm_inf(&a.apply_adjoint(&b)?);
        let eta = a.column_norms().iter().map(|v| v * v).sum::<f64>() / n as f64;
        Ok(Self { params, seed, a: Arc::new(a), x_true, b, tau, eta })
    }

    pub fn problem(&self) -> Result<ProblemInstance> {
        let n = self.params.n;
        let atb = self.a.apply_adjoint(&self.b)?;
        let mut c = vec![self.tau; 2 * n];
        for j in 0..n {
            c[j] -= atb[j];
            c[n + j] += atb[j];
        }
        let q = Kron2Operator::new([[1.0, -1.0], [-1.0, 1.0]], Arc::new(GramOperator { r: self.a.clone() }));
        ProblemInstance::new(Some(Arc::new(q)), None, Vec::new(), c, &vec![BoundKind::NonNeg; 2 * n])
    }

    /// `[[1, −1], [−1, 1]] ⊗ ηI + Θ⁻¹`.
    pub fn preconditioner(&self) -> Kron2DiagFactory {
        let e = self.eta;
        Kron2DiagFactory { c: [[e, -e], [-e, e]] }
    }

    /// `x = u − v`.
    pub fn recover(&self, z: &[f64]) -> Vec<f64> {
        let n = self.params.n;
        (0..n).map(|j| z[j] - z[n + j]).collect()
    }
}
