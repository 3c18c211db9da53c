//! Dense symmetric eigensolver (cyclic Jacobi).

use crate::error::{Error, Result};

pub const DEFAULT_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix. `vectors[k]` is a unit eigenvector for
/// `values[k]`; order is whatever the solver produced.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// `1e-15` times the norm of the input.
pub fn jacobi_eigen(matrix: &[Vec<f64>], max_sweeps: usize) -> Result<SymmetricEigen> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let norm = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-15 * norm;
    let off = |a: &[Vec<f64>]| {
        let mut s = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                s += a[p][q] * a[p][q];
            }
        }
        (2.0 * s).sqrt()
    };

    let mut converged = n < 2 || off(&a) <= tol;
    let mut sweep = 0;
    while !converged {
        if sweep == max_sweeps {
            return Err(Error::EigensolveFailure { sweeps: max_sweeps });
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p][p];
                let aqq = a[q][q];
                // once the rotation would not change the diagonal, drop the entry
                if sweep > 4
                    && (app.abs() + 100.0 * apq.abs() == app.abs())
                    && (aqq.abs() + 100.0 * apq.abs() == aqq.abs())
                {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
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
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        converged = off(&a) <= tol;
    }

    let values = (0..n).map(|i| a[i][i]).collect();
    let vectors = (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect();
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(m: &[Vec<f64>], e: &SymmetricEigen) -> f64 {
        let n = m.len();
        let mut worst: f64 = 0.0;
        for (lambda, v) in e.values.iter().zip(&e.vectors) {
            for i in 0..n {
                let mv: f64 = (0..n).map(|j| m[i][j] * v[j]).sum();
                worst = worst.max((mv - lambda * v[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn triangle_spectrum() {
        let m = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let e = jacobi_eigen(&m, DEFAULT_MAX_SWEEPS).unwrap();
        let mut vals = e.values.clone();
        vals.sort_by(f64::total_cmp);
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] + 1.0).abs() < 1e-14);
        assert!((vals[2] - 2.0).abs() < 1e-14);
        assert!(residual(&m, &e) < 1e-13);
    }

    #[test]
    fn matches_nalgebra_on_random_matrix() {
        let n = 9;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = ((i * 31 + j * 17) as f64).sin();
                m[i][j] = x;
                m[j][i] = x;
            }
        }
        let e = jacobi_eigen(&m, DEFAULT_MAX_SWEEPS).unwrap();
        let mut ours = e.values.clone();
        ours.sort_by(f64::total_cmp);
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
        let mut theirs: Vec<f64> = dm.symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!(residual(&m, &e) < 1e-12);
    }

    #[test]
    fn zero_matrix_is_diagonal() {
        let m = vec![vec![0.0; 4]; 4];
        let e = jacobi_eigen(&m, DEFAULT_MAX_SWEEPS).unwrap();
        assert!(e.values.iter().all(|&x| x == 0.0));
    }
}
