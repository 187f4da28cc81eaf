//! Small dense linear algebra: dot products, Householder least squares,
//! Cholesky, and a cyclic Jacobi eigensolver for symmetric matrices.

use rayon::prelude::*;

use crate::{Error, Result};

/// Dot product with four independent accumulators.
///
/// The summation order is fixed, so results are bit-reproducible.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `a / ‖a‖`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    Some(a.iter().map(|v| v / n).collect())
}

/// Solves `min ‖A c − b‖₂` by Householder QR.
///
/// `columns` holds `A` column by column; every column must have `b.len()`
/// rows and there must be at least as many rows as columns.
pub fn least_squares_qr(mut columns: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let p = columns.len();
    let rows = rhs.len();
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Usage("least squares columns have unequal lengths".into()));
    }
    if rows < p {
        return Err(Error::Usage(format!(
            "least squares needs at least {p} rows, got {rows}"
        )));
    }
    let mut diag = vec![0.0; p];
    for j in 0..p {
        let (head, tail) = columns.split_at_mut(j + 1);
        let col = &mut head[j];
        let norm_j = norm(&col[j..]);
        if norm_j == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let alpha = if col[j] > 0.0 { -norm_j } else { norm_j };
        let mut v = col[j..].to_vec();
        v[0] -= alpha;
        let v_norm_sq = dot(&v, &v);
        diag[j] = alpha;
        if v_norm_sq == 0.0 {
            continue;
        }
        let scale = 2.0 / v_norm_sq;
        tail.par_iter_mut().for_each(|c| {
            let s = dot(&v, &c[j..]) * scale;
            for (ci, vi) in c[j..].iter_mut().zip(&v) {
                *ci -= s * vi;
            }
        });
        let s = dot(&v, &rhs[j..]) * scale;
        for (bi, vi) in rhs[j..].iter_mut().zip(&v) {
            *bi -= s * vi;
        }
    }
    let max_diag = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(j) = diag.iter().position(|v| v.abs() <= 1e-12 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::Usage(format!(
            "feature matrix is rank deficient (column {j})"
        )));
    }
    // Back substitution with R[i][j] = columns[j][i] above the diagonal.
    let mut coef = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for j in i + 1..p {
            s -= columns[j][i] * coef[j];
        }
        coef[i] = s / diag[i];
    }
    Ok(coef)
}

/// Solves `G c = rhs` for a symmetric positive definite `G` (row-major `p × p`).
pub fn cholesky_solve(gram: &[f64], p: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    if gram.len() != p * p || rhs.len() != p {
        return Err(Error::Usage("cholesky_solve shape mismatch".into()));
    }
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let s = gram[i * p + j] - dot(&l[i * p..i * p + j], &l[j * p..j * p + j]);
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::Data(format!(
                        "Gram matrix is not positive definite (pivot {i} = {s:e})"
                    )));
                }
                l[i * p + i] = s.sqrt();
            } else {
                l[i * p + j] = s / l[j * p + j];
            }
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        z[i] = (rhs[i] - dot(&l[i * p..i * p + i], &z[..i])) / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    Ok(x)
}

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for a symmetric `n × n` matrix stored row-major.
///
/// Each sweep annihilates every off-diagonal entry once with a plane
/// rotation; the accumulated rotations are the eigenvectors.
pub fn eig_sym(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if matrix.len() != n * n {
        return Err(Error::Usage(format!(
            "expected {} entries for a {n}×{n} matrix, got {}",
            n * n,
            matrix.len()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("matrix has non-finite entries".into()));
    }
    // Symmetrize so tiny asymmetries from accumulation cannot bias the result.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (matrix[i * n + j] + matrix[j * n + i]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= f64::EPSILON * 1e-2 * frob || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + i]).collect();
            // Fix the sign so the largest-magnitude entry is positive.
            let lead = col
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    Ok(SymmetricEigen { values, vectors })
}
