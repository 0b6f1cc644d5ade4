//! Linear relations `V ⇉ W`, stored as subspaces of `Fⁿ ⊕ Fⁿ`.
//!
//! The first `n` coordinates are the source `V`, the last `n` the target `W`.

use crate::decomp::eigensym;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::{Backend, Scalar};
use crate::subspace::Subspace;

#[derive(Clone, Debug)]
pub struct LinearRelation<F> {
    n: usize,
    space: Subspace<F>,
}

impl<F: Scalar> PartialEq for LinearRelation<F> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.space == other.space
    }
}

/// Kernel, image, domain and indefiniteness of a relation.
#[derive(Clone, Debug)]
pub struct RelationParts<F> {
    pub kernel: Subspace<F>,
    pub image: Subspace<F>,
    pub domain: Subspace<F>,
    pub indef: Subspace<F>,
    pub rank: usize,
}

impl<F: Scalar> PartialEq for RelationParts<F> {
    fn eq(&self, other: &Self) -> bool {
        self.rank == other.rank
            && self.kernel == other.kernel
            && self.image == other.image
            && self.domain == other.domain
            && self.indef == other.indef
    }
}

/// The invertible operator `Dom/Ker → Im/Indef`, written in bases of the
/// complements `Dom ∩ Ker^⊥` and `Im ∩ Indef^⊥`.
#[derive(Clone, Debug)]
pub struct InducedOperator<F> {
    pub source_basis: Vec<Vec<F>>,
    pub target_basis: Vec<Vec<F>>,
    /// Column `i` holds the coordinates of the image of `source_basis[i]`.
    pub matrix: Matrix<F>,
}

/// The symmetric bilinear form a relation induces on `Dom/Ker`.
#[derive(Clone, Debug)]
pub struct QuadraticFormOnQuotient<F> {
    pub base: Subspace<F>,
    pub modulo: Subspace<F>,
    /// Basis of `Dom ∩ Ker^⊥`, representing the quotient.
    pub basis: Vec<Vec<F>>,
    pub gram: Matrix<F>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Classification {
    pub is_symmetric: bool,
    pub is_nonnegative: bool,
}

impl<F: Scalar> LinearRelation<F> {
    /// Wraps a subspace of `F^{2n}`. Any dimension is accepted; see
    /// [`LinearRelation::is_grassmannian`].
    pub fn new(n: usize, space: Subspace<F>) -> Result<Self> {
        if space.ambient() != 2 * n {
            return Err(Error::dims(format!(
                "relation on F^{n} needs a subspace of F^{}, got F^{}",
                2 * n,
                space.ambient()
            )));
        }
        Ok(LinearRelation { n, space })
    }

    /// Span of the pairs `(v, w)`.
    pub fn from_pairs(n: usize, pairs: &[(Vec<F>, Vec<F>)]) -> Result<Self> {
        let vs: Vec<Vec<F>> = pairs
            .iter()
            .map(|(v, w)| {
                if v.len() != n || w.len() != n {
                    return Err(Error::dims("pair length"));
                }
                Ok(v.iter().chain(w).cloned().collect())
            })
            .collect::<Result<_>>()?;
        Self::new(n, Subspace::span(2 * n, &vs)?)
    }

    /// `{(v, A v)}`.
    pub fn graph(a: &Matrix<F>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("graph of a non-square matrix"));
        }
        let n = a.rows();
        let pairs: Vec<(Vec<F>, Vec<F>)> = (0..n)
            .map(|i| {
                let e = crate::matrix::unit(n, i);
                (e, a.col(i))
            })
            .collect();
        Self::from_pairs(n, &pairs)
    }

    /// `K ⊕ I = {(k, i)}`, a relation of rank 0.
    pub fn direct_sum(kernel: &Subspace<F>, indef: &Subspace<F>) -> Result<Self> {
        let n = kernel.ambient();
        if indef.ambient() != n {
            return Err(Error::dims("direct sum of subspaces of different spaces"));
        }
        let space = kernel.embed(2 * n, 0)?.sum(&indef.embed(2 * n, n)?)?;
        Self::new(n, space)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Subspace<F> {
        &self.space
    }

    /// `dim = n`, i.e. a point of the Grassmannian `Gr_n`.
    pub fn is_grassmannian(&self) -> bool {
        self.space.dim() == self.n
    }

    /// Basis of the relation split into `(v, w)` halves.
    pub fn pairs(&self) -> Vec<(Vec<F>, Vec<F>)> {
        self.space
            .basis()
            .iter()
            .map(|b| (b[..self.n].to_vec(), b[self.n..].to_vec()))
            .collect()
    }

    /// Some `w` with `(v, w) ∈ P`, if `v ∈ Dom P`.
    pub fn partner(&self, v: &[F]) -> Result<Option<Vec<F>>> {
        if v.len() != self.n {
            return Err(Error::dims("vector length"));
        }
        let pairs = self.pairs();
        if pairs.is_empty() {
            return Ok(if v.iter().all(|x| x.is_negligible(0.0, 0.0)) {
                Some(vec![F::zero(); self.n])
            } else {
                None
            });
        }
        let vpart = Matrix::from_cols(pairs.iter().map(|(a, _)| a.clone()).collect())?;
        let Some(x) = vpart.solve(v, self.space.tol())? else {
            return Ok(None);
        };
        let mut w = vec![F::zero(); self.n];
        for (xk, (_, wk)) in x.iter().zip(&pairs) {
            crate::matrix::axpy(&mut w, xk, wk);
        }
        Ok(Some(w))
    }

    /// Image under `(v, w) ↦ (a v, b w)`.
    pub fn transform(&self, a: &Matrix<F>, b: &Matrix<F>) -> Result<Self> {
        let n = self.n;
        if a.rows() != n || a.cols() != n || b.rows() != n || b.cols() != n {
            return Err(Error::dims("transform matrices"));
        }
        let block = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            if i < n && j < n {
                a[(i, j)].clone()
            } else if i >= n && j >= n {
                b[(i - n, j - n)].clone()
            } else {
                F::zero()
            }
        });
        Self::new(n, self.space.image(&block)?)
    }

    /// `(v, w) ↦ (w, v)`.
    pub fn transpose(&self) -> Result<Self> {
        let pairs: Vec<(Vec<F>, Vec<F>)> = self.pairs().into_iter().map(|(v, w)| (w, v)).collect();
        Self::from_pairs(self.n, &pairs)
    }

    pub fn to_f64(&self) -> LinearRelation<f64> {
        LinearRelation {
            n: self.n,
            space: self.space.to_f64(),
        }
    }
}

pub fn relation_parts<F: Scalar>(p: &LinearRelation<F>) -> Result<RelationParts<F>> {
    let n = p.n;
    let source = Subspace::<F>::coordinate(2 * n, &(0..n).collect::<Vec<_>>())?.with_tol(p.space.tol());
    let target = Subspace::<F>::coordinate(2 * n, &(n..2 * n).collect::<Vec<_>>())?.with_tol(p.space.tol());
    let kernel = p.space.intersect(&source)?.project_coords(0..n)?;
    let indef = p.space.intersect(&target)?.project_coords(n..2 * n)?;
    let domain = p.space.project_coords(0..n)?;
    let image = p.space.project_coords(n..2 * n)?;
    let rank = domain.dim() as isize - kernel.dim() as isize;
    let rank_im = image.dim() as isize - indef.dim() as isize;
    let rank_total = p.space.dim() as isize - kernel.dim() as isize - indef.dim() as isize;
    if F::BACKEND == Backend::Exact {
        assert!(
            rank == rank_im && rank == rank_total && rank >= 0,
            "rank identity failed: {rank} {rank_im} {rank_total}"
        );
    } else if rank != rank_im || rank != rank_total || rank < 0 {
        return Err(Error::NoConvergence(format!(
            "rank estimates disagree ({rank}, {rank_im}, {rank_total}); loosen the tolerance"
        )));
    }
    Ok(RelationParts {
        kernel,
        image,
        domain,
        indef,
        rank: rank as usize,
    })
}

/// `λ·P = {(v, λ w) : (v, w) ∈ P}`.
pub fn scale<F: Scalar>(lambda: &F, p: &LinearRelation<F>) -> Result<LinearRelation<F>> {
    if lambda.is_negligible(1.0, 0.0) {
        return Err(Error::ZeroScale);
    }
    let n = p.n;
    let d = Matrix::diag(
        &(0..2 * n)
            .map(|i| if i < n { F::one() } else { lambda.clone() })
            .collect::<Vec<_>>(),
    );
    LinearRelation::new(n, p.space.image(&d)?)
}

pub fn induced_operator<F: Scalar>(p: &LinearRelation<F>) -> Result<InducedOperator<F>> {
    let parts = relation_parts(p)?;
    let c = parts.domain.intersect(&parts.kernel.orthocomplement())?;
    let d = parts.image.intersect(&parts.indef.orthocomplement())?;
    let r = parts.rank;
    if c.dim() != r || d.dim() != r {
        return Err(Error::NoConvergence("complement dimensions do not match the rank".into()));
    }
    let mut cols = Vec::with_capacity(r);
    // Coordinates in the basis [D | Indef]; keep the D part.
    let mut frame: Vec<Vec<F>> = d.basis().to_vec();
    frame.extend(parts.indef.basis().iter().cloned());
    let frame_m = if frame.is_empty() {
        None
    } else {
        Some(Matrix::from_cols(frame)?)
    };
    for ci in c.basis() {
        let w = p
            .partner(ci)?
            .ok_or_else(|| Error::NoConvergence("domain vector without partner".into()))?;
        let coords = frame_m
            .as_ref()
            .expect("rank > 0 implies a nonempty frame")
            .solve(&w, p.space.tol())?
            .ok_or_else(|| Error::NoConvergence("image vector outside Im".into()))?;
        cols.push(coords[..r].to_vec());
    }
    let matrix = if r == 0 {
        Matrix::zeros(0, 0)
    } else {
        Matrix::from_cols(cols)?
    };
    Ok(InducedOperator {
        source_basis: c.basis().to_vec(),
        target_basis: d.basis().to_vec(),
        matrix,
    })
}

/// Gram matrix `G_ij = ⟨w_i, c_j⟩` where `(c_i, w_i) ∈ P` and the `c_i`
/// span a complement of `Ker` in `Dom`. For `graph(A)` this is `A` itself.
pub fn quadratic_form<F: Scalar>(p: &LinearRelation<F>) -> Result<QuadraticFormOnQuotient<F>> {
    if !classify(p).is_symmetric {
        return Err(Error::Relation {
            property: "symmetric".into(),
            detail: "the quotient form is only defined for symmetric relations".into(),
        });
    }
    let parts = relation_parts(p)?;
    let c = parts.domain.intersect(&parts.kernel.orthocomplement())?;
    let ws: Vec<Vec<F>> = c
        .basis()
        .iter()
        .map(|ci| {
            p.partner(ci)?
                .ok_or_else(|| Error::NoConvergence("domain vector without partner".into()))
        })
        .collect::<Result<_>>()?;
    let r = c.dim();
    let gram = Matrix::from_fn(r, r, |i, j| {
        let a = dot(&ws[i], &c.basis()[j]);
        let b = dot(&ws[j], &c.basis()[i]);
        (a + b) / F::from_i64(2)
    });
    Ok(QuadraticFormOnQuotient {
        base: parts.domain,
        modulo: parts.kernel,
        basis: c.basis().to_vec(),
        gram,
    })
}

/// Symmetric: `dim = n` and isotropic for `{(v,w);(v',w')} = ⟨v,w'⟩ − ⟨w,v'⟩`.
/// Nonnegative: symmetric and `⟨v,w⟩ ≥ 0` on `P`.
pub fn classify<F: Scalar>(p: &LinearRelation<F>) -> Classification {
    let pairs = p.pairs();
    let scale = pairs
        .iter()
        .flat_map(|(v, w)| v.iter().chain(w))
        .map(|x| x.magnitude())
        .fold(0.0, f64::max)
        .powi(2)
        .max(f64::MIN_POSITIVE);
    let tol = p.space.tol();
    let isotropic = pairs.iter().enumerate().all(|(i, (vi, wi))| {
        pairs[i + 1..].iter().all(|(vj, wj)| {
            (dot(vi, wj) - dot(wi, vj)).is_negligible(scale, tol)
        })
    });
    let is_symmetric = isotropic && p.is_grassmannian();
    let is_nonnegative = is_symmetric && {
        let k = pairs.len();
        let g = Matrix::from_fn(k, k, |i, j| {
            dot(&pairs[i].0, &pairs[j].1) + dot(&pairs[j].0, &pairs[i].1)
        });
        is_psd(&g, tol)
    };
    Classification {
        is_symmetric,
        is_nonnegative,
    }
}

/// Positive semidefiniteness of a symmetric matrix: exact by symmetric
/// elimination on positive diagonal pivots, float by Jacobi eigenvalues.
pub fn is_psd<F: Scalar>(m: &Matrix<F>, tol: f64) -> bool {
    definiteness(m, tol).0
}

pub fn is_positive_definite<F: Scalar>(m: &Matrix<F>, tol: f64) -> bool {
    definiteness(m, tol).1
}

/// `(psd, pd)`.
fn definiteness<F: Scalar>(m: &Matrix<F>, tol: f64) -> (bool, bool) {
    let n = m.rows();
    if n == 0 {
        return (true, true);
    }
    match F::BACKEND {
        Backend::Float => {
            let f = m.to_f64();
            let Ok(e) = eigensym(&f) else {
                return (false, false);
            };
            let scale = e.values.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            let min = e.values.iter().copied().fold(f64::INFINITY, f64::min);
            (min >= -tol * scale, min > tol * scale)
        }
        Backend::Exact => {
            let mut a = m.clone();
            let mut active: Vec<usize> = (0..n).collect();
            while !active.is_empty() {
                if active.iter().any(|&i| a[(i, i)].sign(0.0, 0.0) < 0) {
                    return (false, false);
                }
                let Some(pos) = active.iter().position(|&i| a[(i, i)].sign(0.0, 0.0) > 0) else {
                    // Zero diagonal: PSD only if the remaining block vanishes.
                    let zero = active
                        .iter()
                        .all(|&i| active.iter().all(|&j| a[(i, j)].is_negligible(0.0, 0.0)));
                    return (zero, false);
                };
                let p = active.remove(pos);
                let piv = a[(p, p)].clone();
                for &i in &active {
                    let f = a[(i, p)].clone() / piv.clone();
                    for &j in &active {
                        let v = a[(i, j)].clone() - f.clone() * a[(p, j)].clone();
                        a[(i, j)] = v;
                    }
                }
            }
            (true, true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{qi, Rational};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    fn rel(n: usize, rows: &[&[i64]]) -> LinearRelation<Rational> {
        let vs: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect();
        LinearRelation::new(n, Subspace::span(2 * n, &vs).unwrap()).unwrap()
    }

    // Five relations in F²⊕F²: (x,y) are free parameters.
    fn r1() -> LinearRelation<Rational> {
        rel(2, &[&[0, 0, 1, 0], &[0, 0, 0, 1]])
    }
    fn r2() -> LinearRelation<Rational> {
        rel(2, &[&[0, 0, 1, 0], &[0, 1, 0, 1]])
    }
    fn r4() -> LinearRelation<Rational> {
        rel(2, &[&[1, 0, 1, 0], &[0, 1, 0, 0]])
    }

    #[test]
    fn parts_of_identity_graph() {
        let p = LinearRelation::graph(&Matrix::<Rational>::identity(2)).unwrap();
        let parts = relation_parts(&p).unwrap();
        assert_eq!(parts.rank, 2);
        assert_eq!(parts.kernel.dim(), 0);
        assert_eq!(parts.indef.dim(), 0);
        assert_eq!(parts.domain.dim(), 2);
        assert_eq!(parts.image.dim(), 2);
    }

    #[test]
    fn parts_of_r4_and_r1() {
        let parts = relation_parts(&r4()).unwrap();
        assert_eq!(parts.kernel, Subspace::coordinate(2, &[1]).unwrap());
        assert_eq!(parts.image, Subspace::coordinate(2, &[0]).unwrap());
        assert_eq!(parts.domain, Subspace::full(2));
        assert_eq!(parts.indef.dim(), 0);
        assert_eq!(parts.rank, 1);
        assert_eq!(relation_parts(&r1()).unwrap().rank, 0);
    }

    #[test]
    fn scaling() {
        let a = m(&[&[1, 2], &[3, 4]]);
        let g = LinearRelation::graph(&a).unwrap();
        assert_eq!(scale(&qi(3), &g).unwrap(), LinearRelation::graph(&a.scale(&qi(3))).unwrap());
        assert_eq!(scale(&qi(1), &g).unwrap(), g);
        assert_eq!(scale(&qi(-5), &r1()).unwrap(), r1());
        assert_eq!(scale(&qi(0), &g), Err(Error::ZeroScale));
    }

    #[test]
    fn forms() {
        let d = LinearRelation::graph(&m(&[&[2, 0], &[0, 3]])).unwrap();
        let f = quadratic_form(&d).unwrap();
        assert_eq!(f.gram, m(&[&[2, 0], &[0, 3]]));
        let op = induced_operator(&d).unwrap();
        assert_eq!(op.matrix, m(&[&[2, 0], &[0, 3]]));
        let f2 = quadratic_form(&r2()).unwrap();
        assert_eq!(f2.basis, vec![vec![qi(0), qi(1)]]);
        assert_eq!(f2.gram, m(&[&[1]]));
        let f1 = quadratic_form(&r1()).unwrap();
        assert_eq!(f1.gram.rows(), 0);
    }

    #[test]
    fn classification() {
        let sym = LinearRelation::graph(&m(&[&[1, 2], &[2, 1]])).unwrap();
        assert!(classify(&sym).is_symmetric);
        let c2 = classify(&r2());
        assert!(c2.is_symmetric && c2.is_nonnegative);
        let ind = classify(&LinearRelation::graph(&m(&[&[1, 0], &[0, -1]])).unwrap());
        assert!(ind.is_symmetric && !ind.is_nonnegative);
        let skew = LinearRelation::graph(&m(&[&[1, 1], &[-1, 1]])).unwrap();
        assert!(!classify(&skew).is_symmetric);
        assert!(quadratic_form(&skew).is_err());
    }

    #[test]
    fn psd_exact() {
        assert!(is_psd(&m(&[&[1, 1], &[1, 1]]), 0.0));
        assert!(!is_positive_definite(&m(&[&[1, 1], &[1, 1]]), 0.0));
        assert!(is_positive_definite(&m(&[&[2, 1], &[1, 2]]), 0.0));
        assert!(!is_psd(&m(&[&[0, 1], &[1, 0]]), 0.0));
        assert!(is_psd(&m(&[&[0, 0], &[0, 0]]), 0.0));
        assert!(!is_psd(&m(&[&[1, 2], &[2, 1]]), 0.0));
    }
}
