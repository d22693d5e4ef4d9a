//! Test oracles built on nalgebra: a dense reference IPM and dense
//! recomputations of Newton-system quantities.

#![allow(dead_code)]

use ipstop::ipkrylov::{InnerContext, IpmView, NewtonRhs};
use ipstop::ipm::{compute_residuals, Barrier, Iterate, ProblemInstance, Residuals};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ipstop::linop::{to_dense, LinearOperator};
use nalgebra::{DMatrix, DVector};

pub fn dmat(op: &dyn LinearOperator) -> DMatrix<f64> {
    let d = to_dense(op);
    DMatrix::from_fn(op.nrows(), op.ncols(), |i, j| d[(i, j)])
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub struct DenseQp {
    pub q: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
}

pub struct ReferenceResult {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub s: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    let mut a: f64 = 1.0;
    for i in 0..v.len() {
        if dv[i] < 0.0 {
            a = a.min(-v[i] / dv[i]);
        }
    }
    a
}

/// Mehrotra predictor-corrector on `min cᵀx + ½xᵀQx, Ax = b, x ≥ 0`; every
/// Newton system is the full `(2n + m)` KKT matrix factorized by LU.
pub fn reference_ipm(p: &DenseQp, tol: f64, max_iter: usize) -> ReferenceResult {
    let (m, n) = (p.a.nrows(), p.a.ncols());
    let rho = 1.0_f64.max(p.b.amax()).max(p.c.amax());
    let mut x = DVector::from_element(n, rho);
    let mut y = DVector::zeros(m);
    let mut s = DVector::from_element(n, rho);
    let nb = 1.0 + p.b.norm();
    let nc = 1.0 + p.c.norm();
    for k in 0..max_iter {
        let r_p = &p.b - &p.a * &x;
        let r_d = &p.c + &p.q * &x - p.a.transpose() * &y - &s;
        let mu = x.dot(&s) / n as f64;
        if r_p.norm() / nb <= tol && r_d.norm() / nc <= tol && mu <= tol {
            let objective = p.c.dot(&x) + 0.5 * x.dot(&(&p.q * &x));
            return ReferenceResult { x, y, s, objective, iterations: k };
        }
        // [−Q Aᵀ I; A 0 0; S 0 X] [dx; dy; ds] = [r_D; r_P; r_μ]
        let dim = 2 * n + m;
        let mut kkt = DMatrix::zeros(dim, dim);
        kkt.view_mut((0, 0), (n, n)).copy_from(&(-&p.q));
        kkt.view_mut((0, n), (n, m)).copy_from(&p.a.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&p.a);
        for j in 0..n {
            kkt[(j, n + m + j)] = 1.0;
            kkt[(n + m + j, j)] = s[j];
            kkt[(n + m + j, n + m + j)] = x[j];
        }
        let lu = kkt.lu();
        let solve = |r_mu: &DVector<f64>| {
            let mut rhs = DVector::zeros(dim);
            rhs.rows_mut(0, n).copy_from(&r_d);
            rhs.rows_mut(n, m).copy_from(&r_p);
            rhs.rows_mut(n + m, n).copy_from(r_mu);
            let d = lu.solve(&rhs).expect("singular KKT matrix");
            (d.rows(0, n).into_owned(), d.rows(n, m).into_owned(), d.rows(n + m, n).into_owned())
        };
        let xs = x.component_mul(&s);
        let (dxa, _, dsa) = solve(&(-&xs));
        let (ax, as_) = (max_step(&x, &dxa), max_step(&s, &dsa));
        let mu_aff = (&x + ax * &dxa).dot(&(&s + as_ * &dsa)) / n as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);
        let r_mu = DVector::from_fn(n, |j, _| sigma * mu - xs[j] - dxa[j] * dsa[j]);
        let (dx, dy, ds) = solve(&r_mu);
        let ax = (0.995 * max_step(&x, &dx)).min(1.0);
        let as_ = (0.995 * max_step(&s, &ds)).min(1.0);
        let a = if m > 0 && p.q.amax() == 0.0 { (ax, as_) } else { (ax.min(as_), ax.min(as_)) };
        x += a.0 * dx;
        y += a.1 * dy;
        s += a.1 * ds;
    }
    panic!("reference IPM did not converge in {max_iter} iterations");
}

/// An interior IPM state away from the central path.
pub struct State {
    pub it: Iterate,
    pub res: Residuals,
    pub bar: Barrier,
    pub n_c: usize,
}

impl State {
    pub fn new(p: &ProblemInstance, seed: u64, sigma: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut it = Iterate::starting_point(p);
        for j in 0..p.n() {
            it.x[j] *= rng.random_range(0.2..3.0);
            it.s[j] *= rng.random_range(0.2..3.0);
        }
        for v in &mut it.y {
            *v = rng.random_range(-1.0..1.0);
        }
        let res = compute_residuals(p, &it, sigma);
        let bar = Barrier::new(p, &it);
        Self { it, res, bar, n_c: p.n_complementarity() }
    }

    pub fn view(&self) -> IpmView<'_> {
        IpmView {
            gap_l: &self.bar.gap_l,
            gap_u: &self.bar.gap_u,
            s: &self.it.s,
            z: &self.it.z,
            r_p: &self.res.r_p,
            r_d: &self.res.r_d,
            n_c: self.n_c,
            equal_steps: false,
            step_factor: 0.995,
        }
    }

    pub fn rhs(&self) -> NewtonRhs<'_> {
        NewtonRhs { r_p: &self.res.r_p, r_d: &self.res.r_d, r_mu: &self.res.r_mu, r_mu_upper: &self.res.r_mu_upper }
    }

    pub fn context(&self) -> InnerContext<'_> {
        InnerContext { view: self.view(), rhs: self.rhs(), base: None }
    }

    /// `‖SΔx + XΔs − r_μ‖ / ‖r_μ‖` for nonnegative variables.
    pub fn complementarity_residual(&self, dx: &[f64], ds: &[f64]) -> f64 {
        let r: Vec<f64> = (0..dx.len()).map(|j| self.it.s[j] * dx[j] + self.bar.gap_l[j] * ds[j]).collect();
        rel_diff(&r, &self.res.r_mu)
    }
}
