use super::{CsrMatrix, DenseMatrix, LinearOperator};
use crate::error::{check_len, Error, Result};

/// Banded Cholesky factor `M = L Lᵀ`.
///
/// Dense input is treated as a full band. Row `i` stores `L[i][i-bw..=i]`.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

pub fn factorize_spd(m: &DenseMatrix) -> Result<SpdFactorization> {
    SpdFactorization::from_dense(m)
}

impl SpdFactorization {
    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        check_len(m.nrows(), m.ncols())?;
        let n = m.nrows();
        let bw = n.saturating_sub(1);
        Self::factor(n, bw, |i, j| m[(i, j)])
    }

    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        check_len(m.nrows(), m.ncols())?;
        Self::factor(m.nrows(), m.bandwidth(), |i, j| m.get(i, j))
    }

    fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        // L[i][j] lives at band[i*w + (j + bw - i)]
        let idx = |i: usize, j: usize| i * w + j + bw - i;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = entry(i, j);
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= band[idx(i, k)] * band[idx(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    band[idx(i, i)] = sum.sqrt();
                } else {
                    band[idx(i, j)] = sum / band[idx(j, j)];
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Solves `M x = v` in place.
    pub fn solve_in_place(&self, v: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let idx = |i: usize, j: usize| i * w + j + bw - i;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = v[i];
            for k in lo..i {
                s -= self.band[idx(i, k)] * v[k];
            }
            v[i] = s / self.band[idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = v[i];
            for k in i + 1..=hi {
                s -= self.band[idx(k, i)] * v[k];
            }
            v[i] = s / self.band[idx(i, i)];
        }
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        let mut x = v.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::{norm2, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solve() {
        let f = factorize_spd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_residual() {
        let m = DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = factorize_spd(&m).unwrap().solve(&[1.0, 1.0]).unwrap();
        // inverse of [[4,1],[1,3]] is [[3,-1],[-1,4]]/11
        assert!((x[0] - 2.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 3.0 / 11.0).abs() < 1e-15);
        let r = sub(&m.apply(&x).unwrap(), &[1.0, 1.0]);
        assert!(norm2(&r) <= 1e-12);
    }

    #[test]
    fn indefinite_is_rejected() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(factorize_spd(&m), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn banded_matches_dense_on_laplacian() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
            if i > 4 {
                t.push((i, i - 5, -0.2));
                t.push((i - 5, i, -0.2));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let fb = SpdFactorization::from_csr(&a).unwrap();
        assert_eq!(fb.bandwidth(), 5);
        let fd = SpdFactorization::from_dense(&a.to_dense()).unwrap();
        let v: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let xb = fb.solve(&v).unwrap();
        let xd = fd.solve(&v).unwrap();
        assert!(norm2(&sub(&xb, &xd)) <= 1e-12 * norm2(&xd));
        assert!(norm2(&sub(&a.apply(&xb).unwrap(), &v)) <= 1e-12 * norm2(&v));
    }

    #[test]
    fn random_spd_residuals() {
        // M = Q diag(λ) Qᵀ with λ log-spaced in [1, 1e6], Q from Gram-Schmidt.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [5usize, 12, 25] {
            let mut q: Vec<Vec<f64>> = Vec::new();
            while q.len() < n {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                for u in &q {
                    let d = crate::vecops::dot(u, &v);
                    crate::vecops::axpy(-d, u, &mut v);
                }
                let nv = norm2(&v);
                if nv > 1e-8 {
                    q.push(v.iter().map(|x| x / nv).collect());
                }
            }
            let lam: Vec<f64> = (0..n).map(|k| 10f64.powf(6.0 * k as f64 / (n - 1) as f64)).collect();
            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = (0..n).map(|k| q[k][i] * lam[k] * q[k][j]).sum();
                }
            }
            let f = factorize_spd(&m).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = f.solve(&v).unwrap();
            let r = norm2(&sub(&m.apply(&x).unwrap(), &v));
            assert!(r <= 1e-10 * norm2(&v), "n={n} residual {r}");
        }
    }
}
