//! Floating-point factorizations: symmetric eigendecomposition (cyclic
//! Jacobi), QR with positive diagonal, and one-sided Jacobi SVD.
//!
//! Jacobi methods are used throughout because they keep small singular
//! values relatively accurate on graded matrices such as `A·e^{tΛ}`.

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix<f64>,
}

/// Eigendecomposition of a symmetric matrix. The input is symmetrized first;
/// an asymmetric input beyond `1e-9` relative error is rejected.
pub fn eigensym(a: &Matrix<f64>) -> Result<SymEigen> {
    if !a.is_square() {
        return Err(Error::dims("eigensym needs a square matrix"));
    }
    if !a.is_symmetric(1e-9) {
        return Err(Error::NotSymmetric);
    }
    let n = a.rows();
    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::<f64>::identity(n);
    let scale = m.frobenius_norm();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[(b, b)].total_cmp(&m[(a, a)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(SymEigen { values, vectors })
}

/// Applies `f` to the eigenvalues of a symmetric matrix.
pub fn sym_apply(a: &Matrix<f64>, f: impl Fn(f64) -> f64) -> Result<Matrix<f64>> {
    let e = eigensym(a)?;
    let n = a.rows();
    let fv: Vec<f64> = e.values.iter().map(|&x| f(x)).collect();
    Ok(Matrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| e.vectors[(i, k)] * fv[k] * e.vectors[(j, k)]).sum()
    }))
}

/// Logarithm of a symmetric positive definite matrix.
pub fn sym_log(a: &Matrix<f64>) -> Result<Matrix<f64>> {
    let e = eigensym(a)?;
    if e.values.iter().any(|&x| x <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    sym_apply(a, f64::ln)
}

/// `A = U·B` with `U` orthogonal and `B` upper triangular with positive
/// diagonal. Modified Gram–Schmidt with one reorthogonalization pass.
pub fn qr(a: &Matrix<f64>) -> Result<(Matrix<f64>, Matrix<f64>)> {
    if !a.is_square() {
        return Err(Error::dims("qr needs a square matrix"));
    }
    let n = a.rows();
    let cols = a.to_cols();
    let mut qs: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut b = Matrix::<f64>::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        // Relative to the column itself, so column-graded input is accepted.
        let scale = norm(&col);
        let mut w = col;
        for _ in 0..2 {
            for (i, qv) in qs.iter().enumerate() {
                let r = dot(qv, &w);
                b[(i, j)] += r;
                for (wk, qk) in w.iter_mut().zip(qv) {
                    *wk -= r * qk;
                }
            }
        }
        let nw = norm(&w);
        if nw <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::Singular);
        }
        b[(j, j)] = nw;
        qs.push(w.iter().map(|x| x / nw).collect());
    }
    Ok((Matrix::from_cols(qs)?, b))
}

/// `A = B·Q` with `B` upper triangular (positive diagonal) and `Q` orthogonal.
pub fn rq(a: &Matrix<f64>) -> Result<(Matrix<f64>, Matrix<f64>)> {
    // Reverse rows and columns, take QR of the transpose.
    let n = a.rows();
    let flip = Matrix::from_fn(n, n, |i, j| a[(n - 1 - j, n - 1 - i)]);
    let (u, b) = qr(&flip)?;
    let r = Matrix::from_fn(n, n, |i, j| b[(n - 1 - j, n - 1 - i)]);
    let q = Matrix::from_fn(n, n, |i, j| u[(n - 1 - j, n - 1 - i)]);
    Ok((r, q))
}

/// Thin SVD `M = U·diag(σ)·Vᵀ` with σ descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix<f64>,
    pub sigma: Vec<f64>,
    pub v: Matrix<f64>,
}

/// One-sided Jacobi SVD. `U` is `m×r`, `V` is `n×r` with `r = min(m, n)`.
/// Columns of `U` for zero singular values are completed to an orthonormal
/// set.
pub fn svd(m: &Matrix<f64>) -> Svd {
    if m.rows() < m.cols() {
        let t = svd(&m.transpose());
        return Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    let rows = m.rows();
    let n = m.cols();
    let mut w = m.to_cols();
    let mut v: Vec<Vec<f64>> = (0..n).map(|j| crate::matrix::unit(n, j)).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&w[i], &w[i]);
                let beta = dot(&w[j], &w[j]);
                let gamma = dot(&w[i], &w[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sigma: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let smax = order.first().map_or(0.0, |&i| sigma[i]);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &k in &order {
        let s = sigma[k];
        if s > 1e-300 && s > smax * 1e-300 {
            ucols.push(w[k].iter().map(|x| x / s).collect());
        } else {
            ucols.push(complete(&ucols, rows));
        }
    }
    sigma = order.iter().map(|&k| sigma[k]).collect();
    let vcols: Vec<Vec<f64>> = order.iter().map(|&k| v[k].clone()).collect();
    Svd {
        u: Matrix::from_cols(ucols).expect("uniform columns"),
        sigma,
        v: Matrix::from_cols(vcols).expect("uniform columns"),
    }
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    for k in 0..cols[i].len() {
        let a = cols[i][k];
        let b = cols[j][k];
        cols[i][k] = c * a - s * b;
        cols[j][k] = s * a + c * b;
    }
}

/// A unit vector orthogonal to the given orthonormal vectors.
fn complete(basis: &[Vec<f64>], n: usize) -> Vec<f64> {
    let mut best = vec![0.0; n];
    let mut best_norm = -1.0;
    for e in 0..n {
        let mut w = crate::matrix::unit::<f64>(n, e);
        for _ in 0..2 {
            for b in basis {
                let r = dot(b, &w);
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= r * bk;
                }
            }
        }
        let nw = norm(&w);
        if nw > best_norm {
            best_norm = nw;
            best = w.iter().map(|x| x / nw).collect();
        }
    }
    best
}

/// Singular values only, descending.
pub fn singular_values(m: &Matrix<f64>) -> Vec<f64> {
    svd(m).sigma
}
