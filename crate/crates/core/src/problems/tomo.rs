//! Dual-energy tomography: nonnegative two-material reconstruction with an
//! inner-product coupling regularizer.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::precond::Kron2DiagFactory;
use crate::error::{Error, Result};
use crate::ipm::{BoundKind, ProblemInstance};
use crate::linop::{CsrMatrix, GramOperator, Identity, Kron2Operator, LinearOperator, Op, SumOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoParams {
    /// Pixels per side; a power of two, at least 8.
    pub level: usize,
    pub n_angles: usize,
    pub rho: f64,
    pub eta: f64,
    /// Noise standard deviation relative to the largest noiseless measurement.
    pub noise_sigma: f64,
    /// Attenuation `[[c₁₁, c₁₂], [c₂₁, c₂₂]]`: row = energy, column = material.
    pub atten: [[f64; 2]; 2],
}

impl Default for TomoParams {
    fn default() -> Self {
        Self { level: 32, n_angles: 16, rho: 1e-2, eta: 5e-3, noise_sigma: 0.01, atten: [[1.0, 0.3], [0.4, 1.0]] }
    }
}

impl TomoParams {
    pub fn validate(&self) -> Result<()> {
        if self.level < 8 || !self.level.is_power_of_two() {
            return Err(Error::Config(format!("tomography level {} must be a power of two ≥ 8", self.level)));
        }
        if self.n_angles == 0 {
            return Err(Error::Config("need at least one projection angle".into()));
        }
        if !(self.rho >= self.eta.abs() && self.eta.abs() >= 0.0) {
            return Err(Error::Config(format!("need ρ ≥ |η| (ρ = {}, η = {})", self.rho, self.eta)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Config("noise level must be nonnegative".into()));
        }
        Ok(())
    }

    /// `CᵀC`, the material coupling of `𝒢ᵀ𝒢`.
    pub fn gram_coefficients(&self) -> [[f64; 2]; 2] {
        let c = &self.atten;
        let off = c[0][0] * c[0][1] + c[1][0] * c[1][1];
        [[c[0][0] * c[0][0] + c[1][0] * c[1][0], off], [off, c[0][1] * c[0][1] + c[1][1] * c[1][1]]]
    }
}

#[derive(Clone)]
pub struct TomoInstance {
    pub params: TomoParams,
    pub seed: u64,
    /// Ray–pixel intersection lengths in pixel units.
    pub r: Arc<CsrMatrix>,
    pub x_true: Vec<f64>,
    pub w: Vec<f64>,
    /// Mean diagonal of `RᵀR`.
    pub nu: f64,
}

/// Parallel-beam projection matrix on `[0,1]²` with `level²` pixels.
///
/// Angles are `kπ/n_angles`; each angle has `⌈√2·level⌉` rays one pixel
/// apart, centred on the domain. Entries are intersection lengths divided by
/// the pixel size.
pub fn projection_matrix(level: usize, n_angles: usize) -> CsrMatrix {
    let n = level;
    let h = 1.0 / n as f64;
    let n_det = (std::f64::consts::SQRT_2 * n as f64).ceil() as usize;
    let mut trip = Vec::new();
    let mut cuts = Vec::with_capacity(2 * n + 4);
    for k in 0..n_angles {
        let th = k as f64 * std::f64::consts::PI / n_angles as f64;
        let d = [th.cos(), th.sin()];
        let nrm = [-th.sin(), th.cos()];
        for det in 0..n_det {
            let row = k * n_det + det;
            let t = (det as f64 + 0.5 - n_det as f64 / 2.0) * h;
            let p0 = [0.5 + t * nrm[0], 0.5 + t * nrm[1]];
            let (mut s_lo, mut s_hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut hits = true;
            for ax in 0..2 {
                if d[ax].abs() < 1e-14 {
                    if !(p0[ax] > 0.0 && p0[ax] < 1.0) {
                        hits = false;
                    }
                } else {
                    let a = -p0[ax] / d[ax];
                    let b = (1.0 - p0[ax]) / d[ax];
                    s_lo = s_lo.max(a.min(b));
                    s_hi = s_hi.min(a.max(b));
                }
            }
            if !hits || s_hi <= s_lo {
                continue;
            }
            cuts.clear();
            cuts.push(s_lo);
            cuts.push(s_hi);
            for ax in 0..2 {
                if d[ax].abs() < 1e-14 {
                    continue;
                }
                for i in 1..n {
                    let s = (i as f64 * h - p0[ax]) / d[ax];
                    if s > s_lo && s < s_hi {
                        cuts.push(s);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            for win in cuts.windows(2) {
                let len = win[1] - win[0];
                if len <= 1e-12 * h {
                    continue;
                }
                let mid = 0.5 * (win[0] + win[1]);
                let px = ((p0[0] + mid * d[0]) / h).floor().clamp(0.0, (n - 1) as f64) as usize;
                let py = ((p0[1] + mid * d[1]) / h).floor().clamp(0.0, (n - 1) as f64) as usize;
                trip.push((row, py * n + px, len / h));
            }
        }
    }
    CsrMatrix::from_triplets(n_angles * n_det, n * n, &trip)
}

/// Soft tissue in an ellipse with two bone inclusions, sampled at pixel centres.
pub fn phantom(level: usize) -> Vec<f64> {
    let n = level;
    let mut x = vec![0.0; 2 * n * n];
    for iy in 0..n {
        for ix in 0..n {
            let (px, py) = ((ix as f64 + 0.5) / n as f64, (iy as f64 + 0.5) / n as f64);
            let in_body = ((px - 0.5) / 0.42).powi(2) + ((py - 0.5) / 0.32).powi(2) <= 1.0;
            let bone = [(0.33, 0.5, 0.09), (0.64, 0.47, 0.07), (0.5, 0.68, 0.05)]
                .iter()
                .any(|&(cx, cy, r)| (px - cx).powi(2) + (py - cy).powi(2) <= r * r);
            let j = iy * n + ix;
            if bone {
                x[n * n + j] = 1.0;
            } else if in_body {
                x[j] = 1.0;
            }
        }
    }
    x
}

impl TomoInstance {
    pub fn generate(params: TomoParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let r = projection_matrix(params.level, params.n_angles);
        let x_true = phantom(params.level);
        let np = params.level * params.level;
        let nu = r.triplets().iter().map(|(_, _, v)| v * v).sum::<f64>() / np as f64;
        let mut inst = Self { params, seed, r: Arc::new(r), x_true, w: Vec::new(), nu };
        let clean = inst.forward(&inst.x_true);
        let scale = clean.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        inst.w = clean
            .iter()
            .map(|v| v + params.noise_sigma * scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(inst)
    }

    /// `𝒢x = (C ⊗ R)x`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let np = self.r.ncols();
        let c = &self.params.atten;
        let mut out = Vec::with_capacity(2 * self.r.nrows());
        for e in 0..2 {
            let mix: Vec<f64> = (0..np).map(|j| c[e][0] * x[j] + c[e][1] * x[np + j]).collect();
            let mut t = vec![0.0; self.r.nrows()];
            self.r.apply_to(&mix, &mut t);
            out.extend(t);
        }
        out
    }

    /// `𝒢ᵀw`.
    pub fn backward(&self, w: &[f64]) -> Vec<f64> {
        let (nr, np) = (self.r.nrows(), self.r.ncols());
        let c = &self.params.atten;
        let mut out = vec![0.0; 2 * np];
        let mut t = vec![0.0; np];
        for e in 0..2 {
            self.r.adjoint_to(&w[e * nr..(e + 1) * nr], &mut t).expect("CSR has an adjoint");
            for j in 0..np {
                out[j] += c[e][0] * t[j];
                out[np + j] += c[e][1] * t[j];
            }
        }
        out
    }

    /// `𝒬 = CᵀC ⊗ RᵀR + [[ρ, η], [η, ρ]] ⊗ I`.
    pub fn q_operator(&self) -> SumOperator {
        let p = &self.params;
        let np = self.r.ncols();
        let r: Op = self.r.clone();
        let data: Op = Arc::new(Kron2Operator::new(p.gram_coefficients(), Arc::new(GramOperator { r })));
        let reg: Op = Arc::new(Kron2Operator::new([[p.rho, p.eta], [p.eta, p.rho]], Arc::new(Identity(np))));
        SumOperator::new(vec![(1.0, data), (1.0, reg)])
    }

    pub fn problem(&self) -> Result<ProblemInstance> {
        let n = 2 * self.r.ncols();
        let c: Vec<f64> = self.backward(&self.w).into_iter().map(|v| -v).collect();
        ProblemInstance::new(Some(Arc::new(self.q_operator())), None, Vec::new(), c, &vec![BoundKind::NonNeg; n])
    }

    /// `[[(c₁₁²+c₂₁²)ν+ρ, (c₁₁c₁₂+c₂₁c₂₂)ν+η], [·, (c₁₂²+c₂₂²)ν+ρ]] ⊗ I + X⁻¹S`.
    pub fn preconditioner(&self) -> Kron2DiagFactory {
        let g = self.params.gram_coefficients();
        let (nu, rho, eta) = (self.nu, self.params.rho, self.params.eta);
        Kron2DiagFactory { c: [[g[0][0] * nu + rho, g[0][1] * nu + eta], [g[1][0] * nu + eta, g[1][1] * nu + rho]] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_ray_crosses_one_row() {
        // angle 0: rays travel along x, one per pixel row (plus corner rays that miss)
        let r = projection_matrix(8, 1);
        let total: f64 = r.triplets().iter().map(|t| t.2).sum();
        assert!((total - 64.0).abs() < 1e-9, "total length {total}");
        for i in 0..r.nrows() {
            let (_, vals) = r.row(i);
            let s: f64 = vals.iter().sum();
            assert!(s == 0.0 || (s - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn diagonal_ray_lengths_bounded() {
        let r = projection_matrix(16, 7);
        for (_, _, v) in r.triplets() {
            assert!(v > 0.0 && v <= std::f64::consts::SQRT_2 + 1e-12);
        }
    }

    #[test]
    fn phantom_materials_disjoint() {
        let x = phantom(32);
        let np = 32 * 32;
        assert!((0..np).all(|j| x[j] * x[np + j] == 0.0));
        assert!(x[..np].iter().sum::<f64>() > x[np..].iter().sum::<f64>());
    }
}
