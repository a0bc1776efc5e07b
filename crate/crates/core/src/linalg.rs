//! Cyclic Jacobi eigensolver for small dense symmetric and Hermitian matrices.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix; `vectors[i][j]` is component `i`
/// of eigenvector `j`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                s += v * v;
            }
        }
    }
    s.sqrt()
}

/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-12 * max(1, ‖A‖_F)`.
pub fn jacobi_symmetric(matrix: &[Vec<f64>]) -> Result<SymmetricEigen> {
    let n = matrix.len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Shape("matrix is not square".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let frob = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12 * frob.max(1.0);

    let mut sweeps = 0;
    while off_diagonal_norm(&a) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps (off-diagonal {:e})",
                off_diagonal_norm(&a)
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok(SymmetricEigen {
        values: (0..n).map(|i| a[i][i]).collect(),
        vectors: v,
    })
}

/// Real embedding `[[Re H, -Im H], [Im H, Re H]]` of a complex matrix.
pub fn real_embedding(h: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let n = h.len();
    let mut out = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = h[i][j];
            out[i][j] = z.re;
            out[i][j + n] = -z.im;
            out[i + n][j] = z.im;
            out[i + n][j + n] = z.re;
        }
    }
    out
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue(matrix: &[Vec<f64>]) -> Result<f64> {
    let eig = jacobi_symmetric(matrix)?;
    Ok(eig.values.into_iter().fold(f64::INFINITY, f64::min))
}
