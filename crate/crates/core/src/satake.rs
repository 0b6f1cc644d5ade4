//! The positive definite model of `SL(n,ℝ)/SO(n)` and its boundary in terms
//! of nonnegative hinges, or equivalently flags with positive forms on the
//! successive quotients.

use crate::error::{Error, Result};
use crate::hinge::{cartan_limit, validate_hinge, CartanPath, Hinge};
use crate::matrix::{dot, Matrix};
use crate::relation::{classify, is_positive_definite, quadratic_form, LinearRelation, QuadraticFormOnQuotient};
use crate::scalar::{Backend, Rational, Scalar, DEFAULT_TOL};
use crate::subspace::Subspace;

/// A symmetric positive definite matrix up to a positive multiple.
///
/// The matrix is kept as given (exact when rational); `scale` is the float
/// factor `det^{-1/n}` that normalizes it to unit determinant.
#[derive(Clone, Debug)]
pub struct SpdPoint<F> {
    matrix: Matrix<F>,
    scale: f64,
}

impl<F: Scalar> SpdPoint<F> {
    pub fn new(matrix: Matrix<F>) -> Result<Self> {
        if !matrix.is_symmetric(DEFAULT_TOL) {
            return Err(Error::NotSymmetric);
        }
        if !is_positive_definite(&matrix, DEFAULT_TOL) {
            return Err(Error::NotPositiveDefinite);
        }
        let n = matrix.rows() as f64;
        let det = matrix.det()?.to_f64();
        Ok(SpdPoint {
            scale: det.powf(-1.0 / n),
            matrix,
        })
    }

    pub fn matrix(&self) -> &Matrix<F> {
        &self.matrix
    }

    /// The unit-determinant representative, in floating point.
    pub fn normalized(&self) -> Matrix<f64> {
        self.matrix.to_f64().scale(&self.scale)
    }

    /// `A ↦ g A gᵀ`.
    pub fn act(&self, g: &Matrix<F>) -> Result<Self> {
        let m = g.matmul(&self.matrix)?.matmul(&g.transpose())?;
        Self::new(m)
    }

    /// Equality up to a positive multiple.
    pub fn same_point(&self, other: &Self) -> bool {
        let a = self.normalized();
        let b = other.normalized();
        a.rows() == b.rows() && a.sub(&b).map(|d| d.max_abs() <= 1e-9 * a.max_abs()).unwrap_or(false)
    }
}

/// Limit of `U·diag(e^{λt})·Uᵀ` for orthogonal `U`.
pub fn spd_cartan_limit<F: Scalar>(u: &Matrix<F>, lambda: &[Rational]) -> Result<Hinge<F>> {
    let tol = match F::BACKEND {
        Backend::Exact => 0.0,
        Backend::Float => DEFAULT_TOL,
    };
    if !u.is_orthogonal(tol) {
        return Err(Error::NotOrthogonal);
    }
    cartan_limit(&CartanPath::new(u.clone(), lambda.to_vec(), u.transpose())?)
}

/// Every component is symmetric and nonnegative.
pub fn is_positive_hinge<F: Scalar>(h: &Hinge<F>) -> bool {
    h.components().iter().all(|p| classify(p).is_nonnegative)
}

/// A flag `0 ⊂ V₁ ⊂ … ⊂ V_s ⊂ Fⁿ` with a positive definite form on each of
/// the `s + 1` successive quotients.
///
/// `forms[j]` lives on `V_{s+1−j}/V_{s−j}` (with `V₀ = 0`, `V_{s+1} = Fⁿ`),
/// so the forms are listed in the order of the hinge components they come
/// from.
#[derive(Clone, Debug)]
pub struct SatakeBoundaryPoint<F> {
    pub n: usize,
    pub flag: Vec<Subspace<F>>,
    pub forms: Vec<StepForm<F>>,
}

/// A form on a quotient, given on a basis of a complement.
#[derive(Clone, Debug)]
pub struct StepForm<F> {
    pub basis: Vec<Vec<F>>,
    pub gram: Matrix<F>,
}

impl<F: Scalar> From<QuadraticFormOnQuotient<F>> for StepForm<F> {
    fn from(q: QuadraticFormOnQuotient<F>) -> Self {
        StepForm {
            basis: q.basis,
            gram: q.gram,
        }
    }
}

impl<F: Scalar> SatakeBoundaryPoint<F> {
    /// Number of proper flag subspaces.
    pub fn s(&self) -> usize {
        self.flag.len()
    }

    /// Kernels `K₀ = Fⁿ ⊋ K₁ ⊋ … ⊋ K_{s+1} = 0` of the matching hinge.
    fn kernel_chain(&self) -> Vec<Subspace<F>> {
        let mut ks = vec![Subspace::full(self.n)];
        ks.extend(self.flag.iter().rev().cloned());
        ks.push(Subspace::zero(self.n));
        ks
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.flag.iter().any(|v| v.ambient() != n) {
            return Err(Error::dims("flag subspaces live in different spaces"));
        }
        let ks = self.kernel_chain();
        for w in ks.windows(2) {
            if !(w[0].contains(&w[1]) && w[0].dim() > w[1].dim()) {
                return Err(Error::invalid("flag is not strictly increasing"));
            }
        }
        if self.forms.len() != self.flag.len() + 1 {
            return Err(Error::invalid(format!(
                "{} forms for a flag with {} proper subspaces",
                self.forms.len(),
                self.flag.len()
            )));
        }
        for (j, f) in self.forms.iter().enumerate() {
            let q = ks[j].dim() - ks[j + 1].dim();
            if f.basis.len() != q || f.gram.rows() != q || f.gram.cols() != q {
                return Err(Error::dims(format!(
                    "form {} has size {}, quotient has dimension {q}",
                    j + 1,
                    f.basis.len()
                )));
            }
            if f.basis.iter().any(|b| b.len() != n || !ks[j].contains_vector(b)) {
                return Err(Error::invalid(format!(
                    "basis of form {} is not in the larger flag subspace",
                    j + 1
                )));
            }
            let span = Subspace::span(n, &f.basis)?.sum(&ks[j + 1])?;
            if span.dim() != ks[j].dim() {
                return Err(Error::invalid(format!(
                    "basis of form {} does not span the quotient",
                    j + 1
                )));
            }
            if !f.gram.is_symmetric(DEFAULT_TOL) || !is_positive_definite(&f.gram, DEFAULT_TOL) {
                return Err(Error::NotPositiveDefinite);
            }
        }
        Ok(())
    }
}

pub fn hinge_to_flag_forms<F: Scalar>(h: &Hinge<F>) -> Result<SatakeBoundaryPoint<F>> {
    if !is_positive_hinge(h) {
        return Err(Error::Relation {
            property: "nonnegative".into(),
            detail: "every component of the hinge must be symmetric and nonnegative".into(),
        });
    }
    let kernels = h.kernels()?;
    let flag: Vec<Subspace<F>> = kernels[..kernels.len() - 1].iter().rev().cloned().collect();
    let forms = h
        .components()
        .iter()
        .map(|p| quadratic_form(p).map(StepForm::from))
        .collect::<Result<Vec<_>>>()?;
    Ok(SatakeBoundaryPoint {
        n: h.n(),
        flag,
        forms,
    })
}

/// Rebuilds `P_j = (K_j ⊕ 0) + (0 ⊕ K_{j−1}^⊥) + {(c_i, w_i)}` with
/// `w_i ∈ K_{j−1} ∩ K_j^⊥` and `⟨w_i, c_l⟩ = G_il`.
pub fn flag_forms_to_hinge<F: Scalar>(p: &SatakeBoundaryPoint<F>) -> Result<Hinge<F>> {
    p.validate()?;
    let n = p.n;
    let ks = p.kernel_chain();
    let mut comps = Vec::with_capacity(p.forms.len());
    for (j, form) in p.forms.iter().enumerate() {
        let (outer, inner) = (&ks[j], &ks[j + 1]);
        let inner_perp = inner.orthocomplement();
        // Orthogonal projection of the form basis onto K_j^⊥.
        let projected: Vec<Vec<F>> = form
            .basis
            .iter()
            .map(|c| project(c, &inner_perp))
            .collect::<Result<_>>()?;
        let r = projected.len();
        let h = Matrix::from_fn(r, r, |a, b| dot(&projected[a], &projected[b]));
        let coeffs = if r == 0 {
            Matrix::zeros(0, 0)
        } else {
            form.gram.matmul(&h.inverse()?)?
        };
        let zero = vec![F::zero(); n];
        let mut pairs: Vec<(Vec<F>, Vec<F>)> = Vec::with_capacity(n);
        for k in inner.basis() {
            pairs.push((k.clone(), zero.clone()));
        }
        for d in outer.orthocomplement().basis() {
            pairs.push((zero.clone(), d.clone()));
        }
        for (i, c) in form.basis.iter().enumerate() {
            let mut w = zero.clone();
            for (a, pa) in projected.iter().enumerate() {
                crate::matrix::axpy(&mut w, &coeffs[(i, a)], pa);
            }
            pairs.push((c.clone(), w));
        }
        comps.push(LinearRelation::from_pairs(n, &pairs)?);
    }
    validate_hinge(comps)
}

/// Orthogonal projection of `v` onto `s`.
fn project<F: Scalar>(v: &[F], s: &Subspace<F>) -> Result<Vec<F>> {
    let b = s.basis();
    if b.is_empty() {
        return Ok(vec![F::zero(); v.len()]);
    }
    let g = Matrix::from_fn(b.len(), b.len(), |i, j| dot(&b[i], &b[j]));
    let rhs: Vec<F> = b.iter().map(|bi| dot(bi, v)).collect();
    let x = g
        .solve(&rhs, s.tol())?
        .ok_or(Error::Singular)?;
    let mut out = vec![F::zero(); v.len()];
    for (xi, bi) in x.iter().zip(b) {
        crate::matrix::axpy(&mut out, xi, bi);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::relation_parts;
    use crate::scalar::{q, qi};

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn two_block_positive_limit() {
        let h = spd_cartan_limit(&Matrix::<Rational>::identity(2), &[qi(1), qi(0)]).unwrap();
        assert!(is_positive_hinge(&h));
        let p = hinge_to_flag_forms(&h).unwrap();
        assert_eq!(p.flag, vec![Subspace::coordinate(2, &[1]).unwrap()]);
        assert_eq!(p.forms[0].basis, vec![vec![qi(1), qi(0)]]);
        assert_eq!(p.forms[0].gram, m(&[&[1]]));
        assert_eq!(p.forms[1].basis, vec![vec![qi(0), qi(1)]]);
        assert_eq!(p.forms[1].gram, m(&[&[1]]));
        assert_eq!(flag_forms_to_hinge(&p).unwrap(), h);
    }

    #[test]
    fn interior_point() {
        let a = m(&[&[2, 1], &[1, 3]]);
        let h = validate_hinge(vec![LinearRelation::graph(&a).unwrap()]).unwrap();
        let p = hinge_to_flag_forms(&h).unwrap();
        assert_eq!(p.s(), 0);
        assert_eq!(p.forms[0].gram, a);
        assert_eq!(flag_forms_to_hinge(&p).unwrap(), h);
    }

    #[test]
    fn tied_exponents() {
        let h = spd_cartan_limit(&Matrix::<Rational>::identity(3), &[qi(1), qi(1), qi(0)]).unwrap();
        assert_eq!(h.len(), 2);
        let ks = h.kernels().unwrap();
        assert_eq!(ks[0], Subspace::coordinate(3, &[2]).unwrap());
        assert_eq!(ks[1].dim(), 0);
        for p in h.components() {
            let parts = relation_parts(p).unwrap();
            assert_eq!(parts.image, parts.kernel.orthocomplement());
        }
    }

    #[test]
    fn rejects_non_orthogonal_and_indefinite() {
        assert!(matches!(
            spd_cartan_limit(&m(&[&[1, 1], &[0, 1]]), &[qi(1), qi(0)]),
            Err(Error::NotOrthogonal)
        ));
        let h = validate_hinge(vec![LinearRelation::graph(&m(&[&[1, 0], &[0, -1]])).unwrap()]).unwrap();
        assert!(!is_positive_hinge(&h));
        assert!(hinge_to_flag_forms(&h).is_err());
    }

    #[test]
    fn non_orthogonal_basis_of_quotient() {
        // Form basis not orthogonal to the smaller flag subspace.
        let n = 2;
        let p = SatakeBoundaryPoint {
            n,
            flag: vec![Subspace::coordinate(2, &[1]).unwrap()],
            forms: vec![
                StepForm {
                    basis: vec![vec![qi(1), qi(5)]],
                    gram: m(&[&[3]]),
                },
                StepForm {
                    basis: vec![vec![qi(0), qi(2)]],
                    gram: m(&[&[7]]),
                },
            ],
        };
        let h = flag_forms_to_hinge(&p).unwrap();
        assert!(is_positive_hinge(&h));
        let back = hinge_to_flag_forms(&h).unwrap();
        assert_eq!(back.flag, p.flag);
        // Same quotient forms in the canonical bases e1 and e2.
        assert_eq!(back.forms[0].gram, m(&[&[3]]));
        assert_eq!(back.forms[1].gram, Matrix::from_rows(vec![vec![q(7, 4)]]).unwrap());
    }

    #[test]
    fn spd_points() {
        let a = SpdPoint::new(m(&[&[2, 1], &[1, 2]])).unwrap();
        let b = SpdPoint::new(m(&[&[4, 2], &[2, 4]])).unwrap();
        assert!(a.same_point(&b));
        let n = a.normalized();
        assert!((n.det().unwrap() - 1.0).abs() < 1e-12);
        let rot = Matrix::cayley(&m(&[&[0, 1], &[0, 0]])).unwrap();
        let id = SpdPoint::new(Matrix::<Rational>::identity(2)).unwrap();
        assert!(id.act(&rot).unwrap().same_point(&id));
        let shear = m(&[&[1, 1], &[0, 1]]);
        assert!(!id.act(&shear).unwrap().same_point(&id));
        assert!(SpdPoint::new(m(&[&[1, 2], &[2, 1]])).is_err());
    }
}
