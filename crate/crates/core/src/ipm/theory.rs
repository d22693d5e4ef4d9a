//! Checks from the convergence analysis of the inexact method: neighbourhood
//! membership, direction acceptance, the guaranteed stepsize and the
//! inequalities it implies.

use super::problem::{Iterate, ProblemInstance};
use crate::error::{Error, Result};
use crate::ipkrylov::TrackedDirection;
use crate::vecops::norm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConfig {
    pub gamma: f64,
    pub beta_nbhd: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub delta: f64,
    /// Bound on `max|Δx/x|` and `max|Δs/s|`.
    pub m_bound: f64,
    /// `ω` is taken as `1 − σ + δ` plus this fraction of the rest of `[1−σ+δ, 1]`.
    pub omega_fraction: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self { gamma: 0.1, beta_nbhd: 10.0, sigma_min: 0.1, sigma_max: 0.5, delta: 0.05, m_bound: 10.0, omega_fraction: 0.0 }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 0.0
            && self.gamma < 1.0
            && self.beta_nbhd >= 1.0
            && self.delta > 0.0
            && self.delta < self.sigma_min
            && self.sigma_min <= self.sigma_max
            && self.sigma_max <= 1.0
            && self.m_bound > 0.0
            && (0.0..=1.0).contains(&self.omega_fraction);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid theory configuration {self:?}")))
        }
    }

    /// `ω ∈ [1 − σ + δ, 1]`.
    pub fn omega(&self, sigma: f64) -> f64 {
        let lo = (1.0 - sigma + self.delta).min(1.0);
        lo + self.omega_fraction * (1.0 - lo)
    }

    pub fn alpha_tilde(&self) -> Result<f64> {
        alpha_tilde(self.sigma_min, self.sigma_max, self.gamma, self.delta, self.m_bound)
    }
}

/// Stepsize guaranteed to keep the next iterate in the neighbourhood with
/// sufficient complementarity decrease.
pub fn alpha_tilde(sigma_min: f64, sigma_max: f64, gamma: f64, delta: f64, m: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0 && delta > 0.0 && delta < sigma_min && sigma_min <= sigma_max && sigma_max < 0.99 && m > 0.0) {
        return Err(Error::Config(format!(
            "alpha_tilde needs 0<γ<1, 0<δ<σ_min≤σ_max<0.99, M>0 (got γ={gamma}, δ={delta}, σ=[{sigma_min},{sigma_max}], M={m})"
        )));
    }
    let m2 = m * m;
    Ok([
        sigma_min * gamma * (1.0 - gamma) / (m2 * (1.0 + gamma * gamma)),
        sigma_min * (1.0 - gamma) / (2.0 * m2),
        (0.99 - sigma_max) / m2,
        delta / m2,
        1.0,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min))
}

/// Complementarity products over finite bounds.
pub fn products(p: &ProblemInstance, it: &Iterate) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.n_complementarity());
    for j in 0..p.n() {
        if p.has_lower(j) {
            out.push((it.x[j] - p.lower[j]) * it.s[j]);
        }
        if p.has_upper(j) {
            out.push((p.upper[j] - it.x[j]) * it.z[j]);
        }
    }
    out
}

/// Membership in `N∞(γ, β)`: strict interior, `γμ ≤ xⱼsⱼ ≤ μ/γ`, and
/// residuals shrinking at least in proportion to `μ`.
pub fn neighborhood_check(p: &ProblemInstance, it: &Iterate, gamma: f64, beta: f64, initial: (f64, f64, f64)) -> bool {
    let (rp0, rd0, mu0) = initial;
    if !it.is_interior(p) {
        return false;
    }
    let mu = it.mu(p);
    if !products(p, it).iter().all(|&v| gamma * mu <= v && v <= mu / gamma) {
        return false;
    }
    let res = super::compute_residuals(p, it, 0.0);
    norm2(&res.r_p) <= rp0 * beta * mu / mu0 && norm2(&res.r_d) <= rd0 * beta * mu / mu0
}

/// `max |Δx/(x−l)|, |Δx/(u−x)|` and `max |Δs/s|, |Δz/z|`.
pub fn direction_ratios(p: &ProblemInstance, it: &Iterate, dir: &TrackedDirection) -> (f64, f64) {
    let (mut mx, mut ms) = (0.0_f64, 0.0_f64);
    for j in 0..p.n() {
        if p.has_lower(j) {
            mx = mx.max((dir.dx[j] / (it.x[j] - p.lower[j])).abs());
            ms = ms.max((dir.ds[j] / it.s[j]).abs());
        }
        if p.has_upper(j) {
            mx = mx.max((dir.dx[j] / (p.upper[j] - it.x[j])).abs());
            ms = ms.max((dir.dz[j] / it.z[j]).abs());
        }
    }
    (mx, ms)
}

/// Accepts a direction whose relative components are bounded by `M` and whose
/// step `α̂` reduces both residual norms by the factor `1 − ωα̂` relative to
/// `prev`. Residuals at the trial point are evaluated from scratch.
pub fn theoretical_accept(
    p: &ProblemInstance,
    it: &Iterate,
    dir: &TrackedDirection,
    prev: (f64, f64),
    omega: f64,
    alpha_hat: f64,
    m: f64,
) -> bool {
    let (mx, ms) = direction_ratios(p, it, dir);
    if !(mx <= m && ms <= m) {
        return false;
    }
    let step = |v: &[f64], d: &[f64]| -> Vec<f64> { v.iter().zip(d).map(|(a, b)| a + alpha_hat * b).collect() };
    let trial = Iterate { x: step(&it.x, &dir.dx), y: step(&it.y, &dir.dy), s: step(&it.s, &dir.ds), z: step(&it.z, &dir.dz) };
    let res = super::compute_residuals(p, &trial, 0.0);
    let factor = 1.0 - omega * alpha_hat;
    norm2(&res.r_p) <= factor * prev.0 && norm2(&res.r_d) <= factor * prev.1
}

/// Evaluates, at `(x + αΔx, s + αΔs)` with `x, s > 0`:
/// `(a)` every product `≥ γ·mean`, `(b)` every product `≤ mean/γ`,
/// `(c)` `mean ≤ (1 − 0.01α)μ`, `(d)` `sum ≥ (1 − ωα)xᵀs`.
///
/// A relative slack of `1e-12` absorbs rounding, so `α = 0` gives all true.
pub fn lemma1_inequalities(x: &[f64], s: &[f64], dx: &[f64], ds: &[f64], alpha: f64, gamma: f64, omega: f64) -> [bool; 4] {
    let n = x.len() as f64;
    let prods: Vec<f64> = (0..x.len()).map(|j| (x[j] + alpha * dx[j]) * (s[j] + alpha * ds[j])).collect();
    let sum: f64 = prods.iter().sum();
    let mean = sum / n;
    let xs: f64 = x.iter().zip(s).map(|(a, b)| a * b).sum();
    let mu = xs / n;
    let tol = 1e-12;
    [
        prods.iter().all(|&v| v >= gamma * mean * (1.0 - tol)),
        prods.iter().all(|&v| v <= mean / gamma * (1.0 + tol)),
        mean <= (1.0 - 0.01 * alpha) * mu * (1.0 + tol),
        sum >= (1.0 - omega * alpha) * xs * (1.0 - tol),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipm::problem::BoundKind;
    use crate::linop::{DenseMatrix, Op};
    use std::sync::Arc;

    #[test]
    fn alpha_tilde_examples() {
        let v = alpha_tilde(0.1, 0.9, 0.1, 0.05, 10.0).unwrap();
        assert!((v - 0.1 * 0.1 * 0.9 / (100.0 * 1.01)).abs() < 1e-18);
        assert!((v - 8.9109e-5).abs() < 1e-9);
        assert_eq!(alpha_tilde(0.5, 0.6, 0.5, 0.1, 0.01).unwrap(), 1.0);
        assert!(alpha_tilde(0.1, 0.9, 0.1, 0.2, 10.0).is_err());
        let a1 = alpha_tilde(0.1, 0.5, 0.1, 0.05, 100.0).unwrap();
        let a2 = alpha_tilde(0.1, 0.5, 0.1, 0.05, 1000.0).unwrap();
        assert!(a2 < a1 && a1 < 1.0);
    }

    fn centred() -> (ProblemInstance, Iterate) {
        let a: Op = Arc::new(DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]));
        let p = ProblemInstance::new(None, Some(a), vec![3.0], vec![1.0; 3], &[BoundKind::NonNeg; 3]).unwrap();
        let it = Iterate { x: vec![1.0, 2.0, 0.5], y: vec![0.0], s: vec![1.0, 0.5, 2.0], z: vec![0.0; 3] };
        (p, it)
    }

    #[test]
    fn centred_point_is_in_neighbourhood() {
        let (p, it) = centred();
        assert!(neighborhood_check(&p, &it, 0.5, 1.0, (10.0, 10.0, 1.0)));
        let mut off = it.clone();
        // products (0.3, 1, 1): μ = 0.767 and γμ = 0.383 > 0.3
        off.s[0] = 0.3;
        assert!(!neighborhood_check(&p, &off, 0.5, 1.0, (10.0, 10.0, 1.0)));
        // residual condition
        assert!(!neighborhood_check(&p, &it, 0.5, 1.0, (1.0, 1.0, 1.0)));
    }

    #[test]
    fn accept_examples() {
        let (p, it) = centred();
        // r_P = 3 − 3.5 ≠ 0, so use a feasible variant
        let mut it = it;
        it.x = vec![1.0, 1.0, 1.0];
        it.s = vec![1.0; 3];
        it.y = vec![0.0];
        let zero = TrackedDirection::zeros(3, 1);
        assert!(theoretical_accept(&p, &it, &zero, (0.0, 0.0), 0.5, 0.5, 1.0));
        let mut big = zero.clone();
        big.dx[1] = 2.0;
        assert!(!theoretical_accept(&p, &it, &big, (1.0, 1.0), 0.5, 0.1, 1.0));
    }

    #[test]
    fn zero_step_satisfies_all_inequalities() {
        let x = [1.0, 2.0];
        let s = [1.0, 0.5];
        assert_eq!(lemma1_inequalities(&x, &s, &[1.0, -1.0], &[0.3, 0.2], 0.0, 0.5, 0.9), [true; 4]);
    }
}
