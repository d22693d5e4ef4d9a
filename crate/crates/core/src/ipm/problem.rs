use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::linop::Op;
use crate::vecops::{dot, norm2};

/// Bound on a single variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    NonNeg,
    /// `l ≤ x ≤ u`; either side may be infinite.
    Box(f64, f64),
    Free,
}

impl BoundKind {
    fn limits(self) -> (f64, f64) {
        match self {
            BoundKind::NonNeg => (0.0, f64::INFINITY),
            BoundKind::Box(l, u) => (l, u),
            BoundKind::Free => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// `min cᵀx + ½xᵀQx  s.t. Ax = b, l ≤ x ≤ u`.
#[derive(Clone)]
pub struct ProblemInstance {
    pub q: Option<Op>,
    pub a: Option<Op>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("n", &self.n())
            .field("m", &self.m())
            .field("has_q", &self.q.is_some())
            .finish()
    }
}

impl ProblemInstance {
    pub fn new(
        q: Option<Op>,
        a: Option<Op>,
        b: Vec<f64>,
        c: Vec<f64>,
        bounds: &[BoundKind],
    ) -> Result<Self> {
        let n = c.len();
        check_len(n, bounds.len())?;
        if let Some(q) = &q {
            check_len(n, q.nrows())?;
            check_len(n, q.ncols())?;
        }
        match &a {
            Some(a) => {
                check_len(n, a.ncols())?;
                check_len(b.len(), a.nrows())?;
                if !a.has_adjoint() {
                    return Err(Error::Capability("constraint matrix needs an adjoint"));
                }
            }
            None => check_len(0, b.len())?,
        }
        let (lower, upper): (Vec<f64>, Vec<f64>) = bounds.iter().map(|b| b.limits()).unzip();
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l < u) {
                return Err(Error::Config(format!("variable {j}: lower bound {l} not below upper {u}")));
            }
        }
        let p = Self { q, a, b, c, lower, upper };
        let asym = p.q_asymmetry(3, 0);
        if asym > 1e-12 {
            return Err(Error::Config(format!("Q is not symmetric (probe asymmetry {asym:e})")));
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn has_lower(&self, j: usize) -> bool {
        self.lower[j].is_finite()
    }

    pub fn has_upper(&self, j: usize) -> bool {
        self.upper[j].is_finite()
    }

    /// Number of complementarity pairs (finite bounds).
    pub fn n_complementarity(&self) -> usize {
        (0..self.n()).map(|j| self.has_lower(j) as usize + self.has_upper(j) as usize).sum()
    }

    pub fn is_lp(&self) -> bool {
        self.q.is_none()
    }

    pub fn apply_q(&self, x: &[f64]) -> Vec<f64> {
        match &self.q {
            Some(q) => {
                let mut y = vec![0.0; self.n()];
                q.apply_to(x, &mut y);
                y
            }
            None => vec![0.0; self.n()],
        }
    }

    pub fn apply_a(&self, x: &[f64]) -> Vec<f64> {
        match &self.a {
            Some(a) => {
                let mut y = vec![0.0; self.m()];
                a.apply_to(x, &mut y);
                y
            }
            None => Vec::new(),
        }
    }

    pub fn apply_at(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        if let Some(a) = &self.a {
            a.adjoint_to(y, &mut out).expect("constraint matrix adjoint");
        }
        out
    }

    /// Largest `|uᵀQv − vᵀQu|` relative to `‖u‖‖v‖‖Q‖`-ish scale over random probes.
    pub fn q_asymmetry(&self, probes: usize, seed: u64) -> f64 {
        let Some(q) = &self.q else { return 0.0 };
        let n = self.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..probes {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qv = q.apply(&v).unwrap();
            let qu = q.apply(&u).unwrap();
            let a = dot(&u, &qv);
            let b = dot(&v, &qu);
            let scale = norm2(&u) * norm2(&qv).max(norm2(&qu)).max(f64::MIN_POSITIVE);
            worst = worst.max((a - b).abs() / scale);
        }
        worst
    }

    /// `cᵀx + ½xᵀQx`
    pub fn primal_objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) + 0.5 * dot(x, &self.apply_q(x))
    }

    /// `bᵀy − ½xᵀQx + Σ lⱼsⱼ − Σ uⱼzⱼ` over finite bounds.
    pub fn dual_objective(&self, it: &Iterate) -> f64 {
        let mut v = dot(&self.b, &it.y) - 0.5 * dot(&it.x, &self.apply_q(&it.x));
        for j in 0..self.n() {
            if self.has_lower(j) {
                v += self.lower[j] * it.s[j];
            }
            if self.has_upper(j) {
                v -= self.upper[j] * it.z[j];
            }
        }
        v
    }
}

/// Primal-dual point. `s` holds lower-bound duals (the usual `s` for `x ≥ 0`),
/// `z` upper-bound duals; entries for absent bounds stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub z: Vec<f64>,
}

impl Iterate {
    /// `x⁰ = s⁰ = ρe`, `ρ = max(1, ‖b‖∞, ‖c‖∞)`; boxed variables start at the
    /// midpoint, free variables at zero, all duals at `ρ`.
    pub fn starting_point(p: &ProblemInstance) -> Self {
        let rho = 1.0_f64.max(crate::vecops::norm_inf(&p.b)).max(crate::vecops::norm_inf(&p.c));
        Self::scaled_start(p, rho, rho)
    }

    /// Primal distance `primal` from one-sided bounds (midpoint of boxes, zero
    /// for free variables) and all dual slacks equal to `dual`.
    pub fn scaled_start(p: &ProblemInstance, primal: f64, dual: f64) -> Self {
        let n = p.n();
        let mut x = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut z = vec![0.0; n];
        for j in 0..n {
            let (l, u) = (p.lower[j], p.upper[j]);
            x[j] = match (l.is_finite(), u.is_finite()) {
                (true, true) => 0.5 * (l + u),
                (true, false) => l + primal,
                (false, true) => u - primal,
                (false, false) => 0.0,
            };
            if l.is_finite() {
                s[j] = dual;
            }
            if u.is_finite() {
                z[j] = dual;
            }
        }
        Self { x, y: vec![0.0; p.m()], s, z }
    }

    /// `(x − l, u − x)` with `+∞` where the bound is absent.
    pub fn gaps(&self, p: &ProblemInstance) -> (Vec<f64>, Vec<f64>) {
        let gl = self.x.iter().zip(&p.lower).map(|(x, l)| if l.is_finite() { x - l } else { f64::INFINITY }).collect();
        let gu = self.x.iter().zip(&p.upper).map(|(x, u)| if u.is_finite() { u - x } else { f64::INFINITY }).collect();
        (gl, gu)
    }

    /// Sum of complementarity products over finite bounds.
    pub fn complementarity(&self, p: &ProblemInstance) -> f64 {
        let mut sum = 0.0;
        for j in 0..p.n() {
            if p.has_lower(j) {
                sum += (self.x[j] - p.lower[j]) * self.s[j];
            }
            if p.has_upper(j) {
                sum += (p.upper[j] - self.x[j]) * self.z[j];
            }
        }
        sum
    }

    /// `μ = complementarity / (number of pairs)`.
    pub fn mu(&self, p: &ProblemInstance) -> f64 {
        let nc = p.n_complementarity();
        if nc == 0 {
            0.0
        } else {
            self.complementarity(p) / nc as f64
        }
    }

    pub fn is_interior(&self, p: &ProblemInstance) -> bool {
        (0..p.n()).all(|j| {
            (!p.has_lower(j) || (self.x[j] > p.lower[j] && self.s[j] > 0.0))
                && (!p.has_upper(j) || (self.x[j] < p.upper[j] && self.z[j] > 0.0))
        })
    }
}

/// Right-hand side of the Newton system at an iterate.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// `b − Ax`
    pub r_p: Vec<f64>,
    /// `c + Qx − Aᵀy − s + z`
    pub r_d: Vec<f64>,
    /// `σμe − (X−L)Se` (zero where no lower bound)
    pub r_mu: Vec<f64>,
    /// `σμe − (U−X)Ze` (zero where no upper bound)
    pub r_mu_upper: Vec<f64>,
    pub sigma: f64,
    pub mu: f64,
}

pub fn compute_residuals(p: &ProblemInstance, it: &Iterate, sigma: f64) -> Residuals {
    let ax = p.apply_a(&it.x);
    let r_p: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let qx = p.apply_q(&it.x);
    let aty = p.apply_at(&it.y);
    let r_d: Vec<f64> = (0..p.n()).map(|j| p.c[j] + qx[j] - aty[j] - it.s[j] + it.z[j]).collect();
    let mu = it.mu(p);
    let target = sigma * mu;
    let (gl, gu) = it.gaps(p);
    let r_mu = (0..p.n()).map(|j| if p.has_lower(j) { target - gl[j] * it.s[j] } else { 0.0 }).collect();
    let r_mu_upper = (0..p.n()).map(|j| if p.has_upper(j) { target - gu[j] * it.z[j] } else { 0.0 }).collect();
    Residuals { r_p, r_d, r_mu, r_mu_upper, sigma, mu }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DenseMatrix;
    use std::sync::Arc;

    #[test]
    fn scalar_lp_residuals() {
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0]]));
        let p = ProblemInstance::new(None, Some(a), vec![2.0], vec![1.0], &[BoundKind::NonNeg]).unwrap();
        let it = Iterate { x: vec![1.0], y: vec![0.0], s: vec![1.0], z: vec![0.0] };
        let r = compute_residuals(&p, &it, 0.5);
        assert_eq!(r.r_p, vec![1.0]);
        assert_eq!(r.r_d, vec![0.0]);
        assert_eq!(r.mu, 1.0);
        assert_eq!(r.r_mu, vec![-0.5]);
    }

    #[test]
    fn feasible_point_residuals() {
        // min x1 + x2 s.t. x1 + x2 = 2; point x = (1,1), y = 0.5, s = (0.5, 0.5)
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0, 1.0]]));
        let p = ProblemInstance::new(None, Some(a), vec![2.0], vec![1.0, 1.0], &[BoundKind::NonNeg; 2]).unwrap();
        let it = Iterate { x: vec![1.0, 1.0], y: vec![0.5], s: vec![0.5, 0.5], z: vec![0.0; 2] };
        let r = compute_residuals(&p, &it, 1.0);
        assert_eq!(r.r_p, vec![0.0]);
        assert_eq!(r.r_d, vec![0.0, 0.0]);
        assert_eq!(r.r_mu, vec![0.0, 0.0]);
    }

    #[test]
    fn asymmetric_q_rejected() {
        let q: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]));
        let err = ProblemInstance::new(Some(q), None, vec![], vec![0.0; 2], &[BoundKind::NonNeg; 2]);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn inverted_box_rejected() {
        let err = ProblemInstance::new(None, None, vec![], vec![0.0], &[BoundKind::Box(1.0, 0.0)]);
        assert!(err.is_err());
    }

    #[test]
    fn starting_point_is_interior() {
        let p = ProblemInstance::new(
            None,
            None,
            vec![],
            vec![3.0, -1.0, 0.0],
            &[BoundKind::NonNeg, BoundKind::Box(-1.0, 2.0), BoundKind::Free],
        )
        .unwrap();
        let it = Iterate::starting_point(&p);
        assert!(it.is_interior(&p));
        assert_eq!(it.x, vec![3.0, 0.5, 0.0]);
        assert_eq!(p.n_complementarity(), 3);
    }
}
