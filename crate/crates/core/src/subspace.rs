//! Linear subspaces of `F^m` with canonical bases.
//!
//! Exact subspaces keep the nonzero rows of the reduced row echelon form, so
//! two equal subspaces have identical bases. Float subspaces keep an
//! orthonormal basis produced by pivoted Gram–Schmidt; rank decisions use a
//! relative tolerance stored on the subspace.

use std::f64::consts::FRAC_PI_2;

use crate::decomp::svd;
use crate::error::{Error, Result};
use crate::matrix::{dot, norm, unit, Matrix};
use crate::scalar::{Backend, Scalar, DEFAULT_TOL};

#[derive(Clone, Debug)]
pub struct Subspace<F> {
    ambient: usize,
    basis: Vec<Vec<F>>,
    tol: f64,
}

impl<F: Scalar> PartialEq for Subspace<F> {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl<F: Scalar> Subspace<F> {
    pub fn span(ambient: usize, vectors: &[Vec<F>]) -> Result<Self> {
        Self::span_with_tol(ambient, vectors, DEFAULT_TOL)
    }

    pub fn span_with_tol(ambient: usize, vectors: &[Vec<F>], tol: f64) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != ambient) {
            return Err(Error::dims(format!(
                "vector of length {} in F^{ambient}",
                v.len()
            )));
        }
        Ok(Subspace {
            ambient,
            basis: canonical_basis(vectors.to_vec(), tol),
            tol,
        })
    }

    pub fn from_rows_of(m: &Matrix<F>) -> Self {
        Subspace {
            ambient: m.cols(),
            basis: canonical_basis(m.to_rows(), DEFAULT_TOL),
            tol: DEFAULT_TOL,
        }
    }

    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Vec::new(),
            tol: DEFAULT_TOL,
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: (0..ambient).map(|i| unit(ambient, i)).collect(),
            tol: DEFAULT_TOL,
        }
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= ambient) {
            return Err(Error::dims(format!("coordinate {i} in F^{ambient}")));
        }
        let vs: Vec<Vec<F>> = indices.iter().map(|&i| unit(ambient, i)).collect();
        Self::span(ambient, &vs)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<F>] {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Basis vectors as the rows of a `dim × ambient` matrix.
    pub fn basis_matrix(&self) -> Matrix<F> {
        Matrix::from_fn(self.dim(), self.ambient, |i, j| self.basis[i][j].clone())
    }

    fn check_same_ambient(&self, other: &Self) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::dims(format!(
                "subspaces of F^{} and F^{}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }

    fn joint_tol(&self, other: &Self) -> f64 {
        self.tol.max(other.tol)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_same_ambient(other)?;
        let tol = self.joint_tol(other);
        let vs: Vec<Vec<F>> = self.basis.iter().chain(&other.basis).cloned().collect();
        Self::span_with_tol(self.ambient, &vs, tol)
    }

    pub fn orthocomplement(&self) -> Self {
        Subspace {
            ambient: self.ambient,
            basis: complement_basis(&self.basis, self.ambient, self.tol),
            tol: self.tol,
        }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_same_ambient(other)?;
        let tol = self.joint_tol(other);
        let s = self
            .orthocomplement()
            .with_tol(tol)
            .sum(&other.orthocomplement().with_tol(tol))?;
        Ok(s.orthocomplement())
    }

    pub fn contains_vector(&self, v: &[F]) -> bool {
        if v.len() != self.ambient {
            return false;
        }
        let mut vs = self.basis.clone();
        vs.push(v.to_vec());
        canonical_basis(vs, self.tol).len() == self.dim()
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> bool {
        if self.ambient != other.ambient || other.dim() > self.dim() {
            return false;
        }
        match self.sum(other) {
            Ok(s) => s.dim() == self.dim(),
            Err(_) => false,
        }
    }

    pub fn same_as(&self, other: &Self) -> bool {
        if self.ambient != other.ambient || self.dim() != other.dim() {
            return false;
        }
        match F::BACKEND {
            Backend::Exact => self.basis == other.basis,
            Backend::Float => self.contains(other),
        }
    }

    /// Image under a linear map given as an `m' × ambient` matrix.
    pub fn image(&self, m: &Matrix<F>) -> Result<Self> {
        if m.cols() != self.ambient {
            return Err(Error::dims(format!(
                "{}x{} map applied to a subspace of F^{}",
                m.rows(),
                m.cols(),
                self.ambient
            )));
        }
        let vs: Vec<Vec<F>> = self
            .basis
            .iter()
            .map(|b| m.mul_vec(b))
            .collect::<Result<_>>()?;
        Self::span_with_tol(m.rows(), &vs, self.tol)
    }

    /// Projection onto the coordinates `range`, as a subspace of `F^{range.len()}`.
    pub fn project_coords(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.ambient {
            return Err(Error::dims("coordinate range out of bounds"));
        }
        let vs: Vec<Vec<F>> = self.basis.iter().map(|b| b[range.clone()].to_vec()).collect();
        Self::span_with_tol(range.len(), &vs, self.tol)
    }

    /// Places this subspace in `F^total` starting at coordinate `offset`.
    pub fn embed(&self, total: usize, offset: usize) -> Result<Self> {
        if offset + self.ambient > total {
            return Err(Error::dims("embedding out of bounds"));
        }
        let vs: Vec<Vec<F>> = self
            .basis
            .iter()
            .map(|b| {
                let mut v = vec![F::zero(); total];
                v[offset..offset + self.ambient].clone_from_slice(b);
                v
            })
            .collect();
        Self::span_with_tol(total, &vs, self.tol)
    }

    /// Coefficients of `v` in the stored basis, or `None` when `v` is not in
    /// the subspace.
    pub fn coordinates_of(&self, v: &[F]) -> Result<Option<Vec<F>>> {
        if v.len() != self.ambient {
            return Err(Error::dims("vector length"));
        }
        if !self.contains_vector(v) {
            return Ok(None);
        }
        let bt = self.basis_matrix().transpose();
        bt.solve(v, self.tol)
    }

    pub fn to_f64(&self) -> Subspace<f64> {
        let vs: Vec<Vec<f64>> = self
            .basis
            .iter()
            .map(|b| b.iter().map(|x| x.to_f64()).collect())
            .collect();
        Subspace {
            ambient: self.ambient,
            basis: orthonormal_rows(vs, self.tol),
            tol: self.tol,
        }
    }

    /// Principal angles in `[0, π/2]`, ascending; `min(dim, dim')` of them.
    pub fn principal_angles(&self, other: &Self) -> Result<Vec<f64>> {
        self.check_same_ambient(other)?;
        Ok(principal_angles_f64(&self.to_f64(), &other.to_f64()))
    }

    /// Largest principal angle between subspaces of equal dimension, `π/2`
    /// when dimensions differ.
    pub fn angle_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_ambient(other)?;
        if self.dim() != other.dim() {
            return Ok(FRAC_PI_2);
        }
        Ok(self
            .principal_angles(other)?
            .into_iter()
            .fold(0.0, f64::max))
    }
}

fn canonical_basis<F: Scalar>(rows: Vec<Vec<F>>, tol: f64) -> Vec<Vec<F>> {
    if rows.is_empty() {
        return rows;
    }
    match F::BACKEND {
        Backend::Exact => {
            let m = Matrix::from_rows(rows).expect("uniform rows");
            let (r, piv) = m.rref(0.0);
            (0..piv.len()).map(|i| r.row(i).to_vec()).collect()
        }
        Backend::Float => {
            let fl: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64()).collect())
                .collect();
            orthonormal_rows(fl, tol)
                .into_iter()
                .map(|r| r.into_iter().map(|x| F::from_f64(x)).collect())
                .collect()
        }
    }
}

fn complement_basis<F: Scalar>(basis: &[Vec<F>], ambient: usize, tol: f64) -> Vec<Vec<F>> {
    match F::BACKEND {
        Backend::Exact => {
            if basis.is_empty() {
                return (0..ambient).map(|i| unit(ambient, i)).collect();
            }
            // The basis is already in RREF.
            let pivots: Vec<usize> = basis
                .iter()
                .map(|r| r.iter().position(|x| !x.is_negligible(0.0, 0.0)).expect("nonzero row"))
                .collect();
            let free: Vec<usize> = (0..ambient).filter(|c| !pivots.contains(c)).collect();
            let vs: Vec<Vec<F>> = free
                .iter()
                .map(|&f| {
                    let mut v = vec![F::zero(); ambient];
                    v[f] = F::one();
                    for (row, &p) in basis.iter().zip(&pivots) {
                        v[p] = -row[f].clone();
                    }
                    v
                })
                .collect();
            canonical_basis(vs, tol)
        }
        Backend::Float => {
            let q: Vec<Vec<f64>> = basis
                .iter()
                .map(|r| r.iter().map(|x| x.to_f64()).collect())
                .collect();
            let residuals: Vec<Vec<f64>> = (0..ambient)
                .map(|i| {
                    let mut w = unit::<f64>(ambient, i);
                    for _ in 0..2 {
                        for b in &q {
                            let r = dot(b, &w);
                            for (wk, bk) in w.iter_mut().zip(b) {
                                *wk -= r * bk;
                            }
                        }
                    }
                    w
                })
                .collect();
            let mut out = orthonormal_rows(residuals, tol.max(1e-12));
            out.truncate(ambient - q.len());
            out.into_iter()
                .map(|r| r.into_iter().map(|x| F::from_f64(x)).collect())
                .collect()
        }
    }
}

/// Rank-revealing modified Gram–Schmidt with column pivoting on rows.
pub(crate) fn orthonormal_rows(rows: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let scale = rows.iter().map(|r| norm(r)).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 || !scale.is_finite() {
        return out;
    }
    let mut work = rows;
    while !work.is_empty() {
        let (idx, nrm) = work
            .iter()
            .enumerate()
            .map(|(i, r)| (i, norm(r)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if nrm <= tol * scale {
            break;
        }
        let mut w = work.swap_remove(idx);
        for o in &out {
            let r = dot(o, &w);
            for (wk, ok) in w.iter_mut().zip(o) {
                *wk -= r * ok;
            }
        }
        let nw = norm(&w);
        if nw <= tol * scale {
            continue;
        }
        let qv: Vec<f64> = w.iter().map(|x| x / nw).collect();
        for r in work.iter_mut() {
            let c = dot(&qv, r);
            for (rk, qk) in r.iter_mut().zip(&qv) {
                *rk -= c * qk;
            }
        }
        out.push(qv);
    }
    out
}

/// Principal angles between two float subspaces with orthonormal bases.
/// Small angles come from sines and large ones from cosines, which keeps
/// both ends accurate.
pub(crate) fn principal_angles_f64(a: &Subspace<f64>, b: &Subspace<f64>) -> Vec<f64> {
    let (big, small) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    let k = small.dim();
    if k == 0 {
        return Vec::new();
    }
    let qa = big.basis_matrix();
    let qb = small.basis_matrix();
    let cross = qb.matmul(&qa.transpose()).expect("shapes");
    let cosines = svd(&cross).sigma;
    let proj = cross.matmul(&qa).expect("shapes");
    let resid = qb.sub(&proj).expect("shapes");
    let mut sines = svd(&resid).sigma;
    sines.truncate(k);
    sines.reverse();
    (0..k)
        .map(|i| {
            let c = cosines.get(i).copied().unwrap_or(0.0).min(1.0);
            let from_cos = c.acos();
            if from_cos < std::f64::consts::FRAC_PI_4 {
                sines.get(i).copied().unwrap_or(0.0).min(1.0).asin()
            } else {
                from_cos
            }
        })
        .collect()
}
