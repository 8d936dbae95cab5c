//! Cyclic Jacobi eigensolver and PSD pseudoinverse.

use crate::error::{Error, Result};

use super::Matrix;

/// Eigenvalues at or below this fraction of the largest are treated as zero.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues, in no particular order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: Matrix,
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    let asym = a.asymmetry();
    if asym.is_nan() || asym > 1e-12 * a.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigendecomposition `A = V diag(values) V^T` of a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    check_symmetric(a)?;
    let n = a.rows();
    let mut m = a.clone();
    // symmetrize exactly so rotations see one value per pair
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = Matrix::identity(n);
    let norm = m.frobenius_norm();
    let x = m.as_mut_slice();
    let vv = v.as_mut_slice();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| x[i * n + j] * x[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * norm || norm == 0.0 {
            return Ok(finish(x, n, v));
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = x[p * n + q];
                let app = x[p * n + p];
                let aqq = x[q * n + q];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() || apq.abs() < 1e-300 {
                    x[p * n + q] = 0.0;
                    x[q * n + p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = x[k * n + p];
                    let akq = x[k * n + q];
                    x[k * n + p] = c * akp - s * akq;
                    x[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = x[p * n + k];
                    let aqk = x[q * n + k];
                    x[p * n + k] = c * apk - s * aqk;
                    x[q * n + k] = s * apk + c * aqk;
                }
                x[p * n + q] = 0.0;
                x[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = vv[k * n + p];
                    let vkq = vv[k * n + q];
                    vv[k * n + p] = c * vkp - s * vkq;
                    vv[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            return Ok(finish(x, n, v));
        }
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

fn finish(x: &[f64], n: usize, vectors: Matrix) -> SymmetricEigen {
    SymmetricEigen { values: (0..n).map(|i| x[i * n + i]).collect(), vectors }
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
pub fn pseudoinverse_psd(o: &Matrix, tol_rel: f64) -> Result<Matrix> {
    pseudoinverse_psd_ranked(o, tol_rel).map(|(m, _)| m)
}

/// Pseudoinverse together with the number of retained eigenvalues.
pub fn pseudoinverse_psd_ranked(o: &Matrix, tol_rel: f64) -> Result<(Matrix, usize)> {
    if !(tol_rel > 0.0 && tol_rel < 1.0) {
        return Err(crate::error::invalid(format!("tol_rel must lie in (0, 1), got {tol_rel}")));
    }
    let eig = symmetric_eigen(o)?;
    let n = o.rows();
    let norm = o.frobenius_norm();
    let lmax = eig.values.iter().fold(0.0f64, |m, &v| m.max(v));
    if let Some(&neg) = eig.values.iter().find(|&&v| v < -1e-10 * norm) {
        return Err(Error::NotPositiveSemidefinite(neg));
    }
    let cut = tol_rel * lmax;
    let mut out = Matrix::zeros(n, n);
    let mut rank = 0;
    for (k, &lam) in eig.values.iter().enumerate() {
        if lam <= cut || lam <= 0.0 {
            continue;
        }
        rank += 1;
        let inv = 1.0 / lam;
        for i in 0..n {
            let vi = eig.vectors.get(i, k) * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..n {
                let cur = out.get(i, j);
                out.set(i, j, cur + vi * eig.vectors.get(j, k));
            }
        }
    }
    // exact symmetry
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok((out, rank))
}
