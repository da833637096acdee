use crate::error::{Error, Result};

/// Determinant by LU with partial pivoting. Row-major n x n input.
pub fn determinant(a: &[f64], n: usize) -> Result<f64> {
    if a.len() != n * n {
        return Err(Error::bad_input("determinant", format!("expected {}x{} matrix", n, n)));
    }
    let mut m = a.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if m[row * n + col].abs() > m[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if m[pivot * n + col] == 0.0 {
            return Ok(0.0);
        }
        if pivot != col {
            for j in 0..n {
                m.swap(col * n + j, pivot * n + j);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for row in col + 1..n {
            let f = m[row * n + col] / p;
            for j in col..n {
                m[row * n + j] -= f * m[col * n + j];
            }
        }
    }
    Ok(det)
}

/// Lower Cholesky factor of a symmetric positive-definite matrix,
/// row-major. Errors if the matrix is not positive definite.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::bad_input("cholesky", format!("expected {}x{} matrix", n, n)));
    }
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::bad_input("cholesky", "matrix is not positive definite"));
                }
                l[i * n + j] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves L y = b for lower-triangular L in place.
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

pub const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Multivariate normal with a precomputed Cholesky factor of the
/// covariance, for repeated log-density evaluation.
#[derive(Debug, Clone)]
pub struct MvnDensity {
    pub mean: Vec<f64>,
    chol: Vec<f64>,
    dim: usize,
    log_norm: f64,
}

impl MvnDensity {
    /// `cov` is row-major dim x dim and must be positive definite.
    pub fn new(mean: Vec<f64>, cov: &[f64]) -> Result<MvnDensity> {
        let dim = mean.len();
        let chol = cholesky(cov, dim)?;
        let mut log_det_half = 0.0;
        for i in 0..dim {
            log_det_half += chol[i * dim + i].ln();
        }
        Ok(MvnDensity {
            log_norm: -(dim as f64) * 0.5 * LN_2PI - log_det_half,
            mean,
            chol,
            dim,
        })
    }

    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Result<MvnDensity> {
        if !(sigma > 0.0) {
            return Err(Error::bad_input("mvn", "sigma must be positive"));
        }
        let dim = mean.len();
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = sigma * sigma;
        }
        MvnDensity::new(mean, &cov)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut r: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        solve_lower(&self.chol, self.dim, &mut r);
        let q: f64 = r.iter().map(|v| v * v).sum();
        self.log_norm - 0.5 * q
    }

    /// Mean + L z for a standard-normal z: one exact draw.
    pub fn sample_with(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim);
        let mut out = self.mean.clone();
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += self.chol[i * self.dim + k] * z[k];
            }
            out[i] += acc;
        }
        out
    }
}

/// log(sum(exp(v))) with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    let s: f64 = v.iter().map(|e| (e - mx).exp()).sum();
    mx + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_known_values() {
        let a = [2.0, 0.0, 0.0, 3.0];
        assert!((determinant(&a, 2).unwrap() - 6.0).abs() < 1e-12);
        let b = [1.0, 2.0, 3.0, 4.0];
        assert!((determinant(&b, 2).unwrap() + 2.0).abs() < 1e-12);
        let singular = [1.0, 2.0, 2.0, 4.0];
        assert!(determinant(&singular, 2).unwrap().abs() < 1e-12);
        // Permutation parity flips the sign.
        let perm = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((determinant(&perm, 3).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_reconstructs_and_rejects_indefinite() {
        let cov = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&cov, 2).unwrap();
        // L L^T == cov
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = 0.0;
                for k in 0..2 {
                    acc += l[i * 2 + k] * l[j * 2 + k];
                }
                assert!((acc - cov[i * 2 + j]).abs() < 1e-12);
            }
        }
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&bad, 2).is_err());
    }

    #[test]
    fn mvn_log_pdf_matches_univariate_formula() {
        let d = MvnDensity::isotropic(vec![1.0], 0.5).unwrap();
        let x = 1.7;
        let want = -0.5 * ((x - 1.0) / 0.5_f64).powi(2) - (0.5_f64).ln() - 0.5 * LN_2PI;
        assert!((d.log_pdf(&[x]) - want).abs() < 1e-12);
    }

    #[test]
    fn mvn_log_pdf_correlated_case() {
        // Hand-checked 2d density with covariance [[2, 0.6], [0.6, 1]].
        let cov = [2.0, 0.6, 0.6, 1.0];
        let d = MvnDensity::new(vec![0.0, 0.0], &cov).unwrap();
        let x = [1.0, -1.0];
        let det: f64 = 2.0 * 1.0 - 0.36;
        // Quadratic form via explicit inverse.
        let inv = [1.0 / det, -0.6 / det, -0.6 / det, 2.0 / det];
        let q = x[0] * (inv[0] * x[0] + inv[1] * x[1]) + x[1] * (inv[2] * x[0] + inv[3] * x[1]);
        let want = -0.5 * q - 0.5 * det.ln() - LN_2PI;
        assert!((d.log_pdf(&x) - want).abs() < 1e-12);
    }

    #[test]
    fn sample_with_applies_factor() {
        let cov = [4.0, 0.0, 0.0, 9.0];
        let d = MvnDensity::new(vec![1.0, -1.0], &cov).unwrap();
        let s = d.sample_with(&[1.0, 1.0]);
        assert!((s[0] - 3.0).abs() < 1e-12);
        assert!((s[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2.0_f64.ln())).abs() < 1e-9);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
