//! Dense row-major matrices over a [`Scalar`] backend.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar, DEFAULT_TOL};

#[derive(Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: fmt::Debug> fmt::Debug for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .map(|x| format!("{x:?}"))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<F: Scalar> Matrix<F> {
    pub fn new(rows: usize, cols: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("ragged rows"));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { F::one() } else { F::zero() })
    }

    pub fn diag(values: &[F]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i].clone() } else { F::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn to_cols(&self) -> Vec<Vec<F>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn from_cols(cols: Vec<Vec<F>>) -> Result<Self> {
        Ok(Self::from_rows(cols)?.transpose())
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<G: Scalar>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn scale(&self, s: &F) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    fn zip(&self, other: &Self, f: impl Fn(&F, &F) -> F) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }

    /// Matrix product, failing on incompatible shapes.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_negligible(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out[(i, j)].clone() + a.clone() * other[(k, j)].clone();
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[F]) -> Result<Vec<F>> {
        if v.len() != self.cols {
            return Err(Error::dims(format!(
                "vector of length {} for a {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// Largest entry magnitude, the reference scale for float tolerances.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| {
                let v = x.to_f64();
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let scale = self.max_abs();
        (0..self.rows).all(|i| {
            (0..i).all(|j| (self[(i, j)].clone() - self[(j, i)].clone()).is_negligible(scale, tol))
        })
    }

    /// Checks `M Mᵀ = I` within `tol`.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let p = self.matmul(&self.transpose()).expect("square");
        let id = Self::identity(self.rows);
        p.data
            .iter()
            .zip(&id.data)
            .all(|(a, b)| (a.clone() - b.clone()).is_negligible(1.0, tol))
    }

    /// Reduced row echelon form and the pivot columns.
    ///
    /// Pivots are chosen by largest magnitude within each column; entries
    /// below `tol` times the largest entry count as zero for floats.
    pub fn rref(&self, tol: f64) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = self.max_abs();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let best = (r..m.rows)
                .filter(|&i| !m[(i, c)].is_negligible(scale, tol))
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()));
            let Some(p) = best else {
                for i in r..m.rows {
                    m[(i, c)] = F::zero();
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = F::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                let v = m[(r, j)].clone() * inv.clone();
                m[(r, j)] = v;
            }
            m[(r, c)] = F::one();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m[(i, c)].clone();
                if f.is_negligible(0.0, 0.0) {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    m[(i, j)] = v;
                }
                m[(i, c)] = F::zero();
            }
            pivots.push(c);
            r += 1;
        }
        for i in r..m.rows {
            for j in 0..m.cols {
                m[(i, j)] = F::zero();
            }
        }
        (m, pivots)
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.rref(tol).1.len()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        self.inverse_with_tol(DEFAULT_TOL)
    }

    pub fn inverse_with_tol(&self, tol: f64) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::dims("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                F::one()
            } else {
                F::zero()
            }
        });
        let (r, pivots) = aug.rref_left(n, tol);
        if pivots.len() < n {
            return Err(Error::Singular);
        }
        Ok(Self::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
    }

    /// Row-reduces using only the first `k` columns as pivot candidates.
    fn rref_left(&self, k: usize, tol: f64) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let scale = Self::from_fn(self.rows, k, |i, j| self[(i, j)].clone()).max_abs();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..k {
            if r == m.rows {
                break;
            }
            let best = (r..m.rows)
                .filter(|&i| !m[(i, c)].is_negligible(scale, tol))
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()));
            let Some(p) = best else { continue };
            m.swap_rows(r, p);
            let inv = F::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                let v = m[(r, j)].clone() * inv.clone();
                m[(r, j)] = v;
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m[(i, c)].clone();
                if f.is_negligible(0.0, 0.0) {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    m[(i, j)] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    /// Determinant by Gaussian elimination.
    pub fn det(&self) -> Result<F> {
        if !self.is_square() {
            return Err(Error::dims("determinant of a non-square matrix"));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = F::one();
        for c in 0..n {
            let best = (c..n)
                .filter(|&i| !m[(i, c)].is_negligible(0.0, 0.0))
                .max_by(|&a, &b| m[(a, c)].magnitude().total_cmp(&m[(b, c)].magnitude()));
            let Some(p) = best else { return Ok(F::zero()) };
            if p != c {
                m.swap_rows(c, p);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                let f = m[(i, c)].clone() / piv.clone();
                for j in c..n {
                    let v = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
                    m[(i, j)] = v;
                }
            }
        }
        Ok(det)
    }

    /// A particular solution of `self · x = b`, or `None` if inconsistent.
    pub fn solve(&self, b: &[F], tol: f64) -> Result<Option<Vec<F>>> {
        if b.len() != self.rows {
            return Err(Error::dims("right-hand side length"));
        }
        let k = self.cols;
        let aug = Self::from_fn(self.rows, k + 1, |i, j| {
            if j < k {
                self[(i, j)].clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref_left(k, tol);
        let scale = aug.max_abs().max(f64::MIN_POSITIVE);
        for i in pivots.len()..self.rows {
            if !r[(i, k)].is_negligible(scale, tol) {
                return Ok(None);
            }
        }
        let mut x = vec![F::zero(); k];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = r[(i, k)].clone();
        }
        Ok(Some(x))
    }

    pub fn trace(&self) -> F {
        (0..self.rows.min(self.cols)).fold(F::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])].clone())
    }
}

impl Matrix<Rational> {
    /// Cayley transform `(I − S)(I + S)⁻¹` of the skew part of `s`. Gives a
    /// rational orthogonal matrix without a −1 eigenvalue.
    pub fn cayley(s: &Matrix<Rational>) -> Result<Self> {
        let n = s.rows;
        let skew = Self::from_fn(n, n, |i, j| {
            (s[(i, j)].clone() - s[(j, i)].clone()) / Rational::from_i64(2)
        });
        let id = Self::identity(n);
        let plus = id.add(&skew)?;
        let minus = id.sub(&skew)?;
        minus.matmul(&plus.inverse()?)
    }
}

impl<F> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl<F> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

/// Panics on shape mismatch; use [`Matrix::matmul`] for a checked product.
impl<F: Scalar> Mul for &Matrix<F> {
    type Output = Matrix<F>;
    fn mul(self, rhs: &Matrix<F>) -> Matrix<F> {
        self.matmul(rhs).expect("matrix shapes")
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn axpy<F: Scalar>(y: &mut [F], a: &F, x: &[F]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = yi.clone() + a.clone() * xi.clone();
    }
}

pub fn scale_vec<F: Scalar>(v: &[F], a: &F) -> Vec<F> {
    v.iter().map(|x| x.clone() * a.clone()).collect()
}

/// Standard basis vector `e_i` of length `n`.
pub fn unit<F: Scalar>(n: usize, i: usize) -> Vec<F> {
    (0..n).map(|j| if i == j { F::one() } else { F::zero() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn products_and_inverse() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert_eq!(&a * &inv, Matrix::identity(2));
        assert_eq!(a.det().unwrap(), qi(1));
        assert!(m(&[&[1, 2], &[2, 4]]).inverse().is_err());
        assert!(a.matmul(&Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn rref_and_rank() {
        let a = m(&[&[0, 2, 4], &[1, 1, 1], &[1, 2, 3]]);
        let (r, piv) = a.rref(0.0);
        assert_eq!(piv, vec![0, 1]);
        assert_eq!(r, m(&[&[1, 0, -1], &[0, 1, 2], &[0, 0, 0]]));
        assert_eq!(a.rank(0.0), 2);
    }

    #[test]
    fn solve_consistent_and_not() {
        let a = m(&[&[1, 1], &[2, 2]]);
        assert_eq!(a.solve(&[qi(2), qi(4)], 0.0).unwrap(), Some(vec![qi(2), qi(0)]));
        assert_eq!(a.solve(&[qi(2), qi(5)], 0.0).unwrap(), None);
    }

    #[test]
    fn cayley_is_orthogonal() {
        let s = m(&[&[0, 1, 2], &[0, 0, 3], &[0, 0, 0]]);
        let o = Matrix::cayley(&s).unwrap();
        assert!(o.is_orthogonal(0.0));
        assert_eq!(o.det().unwrap(), qi(1));
    }

    #[test]
    fn float_det_and_symmetry() {
        let a = Matrix::from_rows(vec![vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((a.det().unwrap() - 11.0).abs() < 1e-12);
        assert!(a.is_symmetric(1e-12));
        assert_eq!(Matrix::diag(&[q(1, 2), qi(3)]).trace(), q(7, 2));
    }
}
