//! Hybrid compactifications: Satake limits paired with velocity limits.
//!
//! Inputs are paths `U·diag(e^{λ₁(j)}, …, e^{λₙ(j)})·Uᵀ` with `U` orthogonal
//! and polynomial exponents.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::hinge::{cartan_limit, CartanPath, Hinge};
use crate::matrix::Matrix;
use crate::satake::{is_positive_hinge, SpdPoint};
use crate::scalar::{Backend, Rational, Scalar};
use crate::sky::{multiplicity_breaks, Flag, GeodesicFromBase, SkyPoint};
use crate::subspace::Subspace;
use crate::velocity::{
    karpelevich_limit, simple_velocity_limit, KarpelevichPoint, NodeValue, Poly, PolySequence,
    VelocityLimit, VelocityPoint,
};

/// An orthogonal frame with polynomial exponent sequences.
#[derive(Clone, Debug)]
pub struct HybridInput<F> {
    frame: Matrix<F>,
    exponents: PolySequence,
}

impl<F: Scalar> HybridInput<F> {
    pub fn new(frame: Matrix<F>, exponents: PolySequence) -> Result<Self> {
        let n = exponents.len();
        if frame.rows() != n || frame.cols() != n {
            return Err(Error::dims(format!(
                "{}x{} frame for {n} exponents",
                frame.rows(),
                frame.cols()
            )));
        }
        let tol = match F::BACKEND {
            Backend::Exact => 0.0,
            Backend::Float => 1e-9,
        };
        if !frame.is_orthogonal(tol) {
            return Err(Error::NotOrthogonal);
        }
        Ok(HybridInput { frame, exponents })
    }

    pub fn frame(&self) -> &Matrix<F> {
        &self.frame
    }

    pub fn exponents(&self) -> &PolySequence {
        &self.exponents
    }

    pub fn n(&self) -> usize {
        self.exponents.len()
    }

    /// Maximal runs of indices whose exponents differ by constants.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let ps = self.exponents.polys();
        let mut out: Vec<Range<usize>> = Vec::new();
        for i in 0..ps.len() {
            match out.last_mut() {
                Some(r) if ps[r.start].sub(&ps[i]).is_constant() => r.end = i + 1,
                _ => out.push(i..i + 1),
            }
        }
        out
    }

    /// `U·diag(e^{c/2})` where `c_i` is the constant offset of `λ_i` from the
    /// leading exponent of its block.
    fn scaled_frame(&self) -> Result<Matrix<F>> {
        let ps = self.exponents.polys();
        let mut half = Vec::with_capacity(ps.len());
        for r in self.blocks() {
            for i in r.clone() {
                let c = ps[i].sub(&ps[r.start]).constant_term() / Rational::from_i64(2);
                half.push(F::exp_of(&c).ok_or_else(|| {
                    Error::NotExact(format!("e^{c} is irrational; use the float backend"))
                })?);
            }
        }
        self.frame.matmul(&Matrix::diag(&half))
    }

    /// The block level sequence: the leading exponent of each block.
    pub fn block_levels(&self) -> Result<PolySequence> {
        let ps = self.exponents.polys();
        let levels: Vec<Poly> = self.blocks().iter().map(|r| ps[r.start].clone()).collect();
        PolySequence::from_polys(levels)
    }

    /// The Satake limit as a hinge; a single block means the path converges
    /// inside the space and there is no boundary hinge.
    pub fn satake_limit(&self) -> Result<Hinge<F>> {
        let blocks = self.blocks();
        let s = blocks.len();
        let mut levels = Vec::with_capacity(self.n());
        for (b, r) in blocks.iter().enumerate() {
            for _ in r.clone() {
                levels.push(Rational::from_i64((s - 1 - b) as i64));
            }
        }
        let g = self.scaled_frame()?;
        cartan_limit(&CartanPath::new(g.clone(), levels, g.transpose())?)
    }

    /// The interior limit `U·diag(e^{c})·Uᵀ` of a bounded path.
    fn interior_limit(&self) -> Result<SpdPoint<f64>> {
        let ps = self.exponents.polys();
        let d: Vec<f64> = ps
            .iter()
            .map(|p| p.sub(&ps[0]).constant_term().to_f64().exp())
            .collect();
        let u = self.frame.to_f64();
        SpdPoint::new(&(&u * &Matrix::diag(&d)) * &u.transpose())
    }
}

/// A point of the Dynkin–Olshanetsky boundary: a positive hinge with a point
/// of the velocity simplex on its blocks.
#[derive(Clone, Debug)]
pub struct DynkinOlshanetskyPoint<F> {
    hinge: Hinge<F>,
    mu: Vec<Rational>,
    gammas: Vec<usize>,
}

impl<F: Scalar> PartialEq for DynkinOlshanetskyPoint<F> {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu && self.hinge == other.hinge
    }
}

impl<F: Scalar> DynkinOlshanetskyPoint<F> {
    /// `mu` has one entry per hinge component, from 1 down to 0.
    pub fn new(hinge: Hinge<F>, mu: Vec<Rational>) -> Result<Self> {
        let s = hinge.len();
        if s < 2 {
            return Err(Error::invalid("a one-component hinge is an interior point"));
        }
        if !is_positive_hinge(&hinge) {
            return Err(Error::Relation {
                property: "nonnegative".into(),
                detail: "every component must be symmetric and nonnegative".into(),
            });
        }
        if mu.len() != s {
            return Err(Error::dims(format!("{} velocities for {s} components", mu.len())));
        }
        if mu[0] != Rational::one() || mu[s - 1] != Rational::zero() {
            return Err(Error::invalid("velocities must run from 1 down to 0"));
        }
        if mu.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotMonotone("block velocities".into()));
        }
        let gammas: Vec<usize> = hinge.images()?.iter().map(|s| s.dim()).collect();
        if gammas.windows(2).any(|w| w[0] >= w[1]) || gammas.last() != Some(&hinge.n()) {
            return Err(Error::invalid(format!(
                "image dimensions {gammas:?} are not strictly increasing up to n"
            )));
        }
        Ok(DynkinOlshanetskyPoint { hinge, mu, gammas })
    }

    pub fn hinge(&self) -> &Hinge<F> {
        &self.hinge
    }

    pub fn mu(&self) -> &[Rational] {
        &self.mu
    }

    /// `γ_j = dim Im(P_j)`.
    pub fn gammas(&self) -> &[usize] {
        &self.gammas
    }

    /// Sizes of the blocks `γ_j − γ_{j−1}`.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut prev = 0;
        self.gammas
            .iter()
            .map(|&g| {
                let d = g - prev;
                prev = g;
                d
            })
            .collect()
    }

    /// Per-index velocities: `τ_i = μ_j` for `γ_{j−1} < i ≤ γ_j`.
    pub fn tau(&self) -> Vec<Rational> {
        unfold_mu(&self.mu, &self.gammas)
    }
}

pub fn unfold_mu(mu: &[Rational], gammas: &[usize]) -> Vec<Rational> {
    let mut out = Vec::new();
    let mut prev = 0;
    for (m, &g) in mu.iter().zip(gammas) {
        for _ in prev..g {
            out.push(m.clone());
        }
        prev = g;
    }
    out
}

/// Collapses per-index velocities to one value per block; fails when `τ` is
/// not constant on a block.
pub fn fold_tau(tau: &[Rational], gammas: &[usize]) -> Result<Vec<Rational>> {
    let mut out = Vec::with_capacity(gammas.len());
    let mut prev = 0;
    for &g in gammas {
        if g <= prev || g > tau.len() {
            return Err(Error::invalid("block ends must increase within the index range"));
        }
        if tau[prev..g].iter().any(|t| *t != tau[prev]) {
            return Err(Error::invalid(format!(
                "velocity is not constant on indices {}..={g}",
                prev + 1
            )));
        }
        out.push(tau[prev].clone());
        prev = g;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub enum DoLimit<F> {
    Boundary(DynkinOlshanetskyPoint<F>),
    Interior(SpdPoint<f64>),
}

pub fn do_limit<F: Scalar>(input: &HybridInput<F>) -> Result<DoLimit<F>> {
    let tau = match simple_velocity_limit(input.exponents()) {
        VelocityLimit::Bounded => return Ok(DoLimit::Interior(input.interior_limit()?)),
        VelocityLimit::Point(v) => v.mu,
    };
    let hinge = input.satake_limit()?;
    let gammas: Vec<usize> = hinge.images()?.iter().map(|s| s.dim()).collect();
    let mu = fold_tau(&tau, &gammas)?;
    let p = DynkinOlshanetskyPoint::new(hinge, mu)?;
    debug_assert_eq!(p.tau(), tau);
    Ok(DoLimit::Boundary(p))
}

/// The data of a boundary point seen from the sky: decreasing kernels and
/// per-index velocities.
#[derive(Clone, Debug)]
pub struct SkyProjectionData<F> {
    pub kernels: Vec<Subspace<F>>,
    pub tau: Vec<Rational>,
}

impl<F: Scalar> SkyProjectionData<F> {
    /// The sky point: the flag `Ker(P_j)^⊥`, kept at the breaks of `τ`.
    pub fn to_sky_point(&self) -> Result<SkyPoint<F>> {
        let n = self.tau.len();
        let complements: Vec<Subspace<F>> = self.kernels.iter().map(|k| k.orthocomplement()).collect();
        let full = Flag::new(n, complements)?;
        let flag = full.subflag(&multiplicity_breaks(&self.tau))?;
        SkyPoint::new(VelocityPoint { mu: self.tau.clone() }, flag)
    }
}

pub fn do_project_to_sky<F: Scalar>(p: &DynkinOlshanetskyPoint<F>) -> Result<SkyProjectionData<F>> {
    let mut kernels = p.hinge.kernels()?;
    kernels.pop();
    if kernels.iter().any(|k| k.dim() == 0) {
        return Err(Error::invalid("only the last kernel may vanish"));
    }
    Ok(SkyProjectionData {
        kernels,
        tau: p.tau(),
    })
}

fn linear_sequence(lambda: &[Rational]) -> Result<PolySequence> {
    PolySequence::from_polys(
        lambda
            .iter()
            .map(|l| Poly::new(vec![Rational::zero(), l.clone()]))
            .collect(),
    )
}

pub fn geodesic_do_limit<F: Scalar>(g: &GeodesicFromBase<F>) -> Result<DynkinOlshanetskyPoint<F>> {
    let input = HybridInput::new(g.frame().clone(), linear_sequence(g.lambda())?)?;
    match do_limit(&input)? {
        DoLimit::Boundary(p) => Ok(p),
        DoLimit::Interior(_) => Err(Error::invalid("zero velocity")),
    }
}

/// Limits of geodesics are exactly the points whose block velocities are
/// strictly decreasing.
pub fn is_geodesic_limit<F: Scalar>(p: &DynkinOlshanetskyPoint<F>) -> bool {
    p.mu.windows(2).all(|w| w[0] > w[1])
}

/// A point of the Karpelevich compactification: a positive hinge with a
/// boundary point of the velocity polyhedron on its blocks.
#[derive(Clone, Debug)]
pub struct KarpelevichCompactificationPoint<F> {
    hinge: Hinge<F>,
    kpoint: KarpelevichPoint,
}

impl<F: Scalar> KarpelevichCompactificationPoint<F> {
    pub fn new(hinge: Hinge<F>, kpoint: KarpelevichPoint) -> Result<Self> {
        if kpoint.interval != (1, hinge.len()) {
            return Err(Error::dims(format!(
                "velocity point on {:?} for a hinge of length {}",
                kpoint.interval,
                hinge.len()
            )));
        }
        if !matches!(kpoint.value, NodeValue::Simplex(_)) {
            return Err(Error::invalid("the velocity point must lie on the boundary"));
        }
        if !is_positive_hinge(&hinge) {
            return Err(Error::Relation {
                property: "nonnegative".into(),
                detail: "every component must be symmetric and nonnegative".into(),
            });
        }
        Ok(KarpelevichCompactificationPoint { hinge, kpoint })
    }

    pub fn hinge(&self) -> &Hinge<F> {
        &self.hinge
    }

    pub fn kpoint(&self) -> &KarpelevichPoint {
        &self.kpoint
    }

    /// Forgets the refinement below the root simplex.
    pub fn to_do_point(&self) -> Result<DynkinOlshanetskyPoint<F>> {
        match &self.kpoint.value {
            NodeValue::Simplex(mu) => DynkinOlshanetskyPoint::new(self.hinge.clone(), mu.clone()),
            NodeValue::Cone(_) => Err(Error::invalid("interior velocity point")),
        }
    }
}

pub fn karpelevich_limit_point<F: Scalar>(
    frame: &Matrix<F>,
    seq: &PolySequence,
) -> Result<KarpelevichCompactificationPoint<F>> {
    let input = HybridInput::new(frame.clone(), seq.clone())?;
    if input.blocks().len() < 2 {
        return Err(Error::invalid("bounded sequence: the limit is an interior point"));
    }
    let hinge = input.satake_limit()?;
    let kpoint = karpelevich_limit(&input.block_levels()?);
    KarpelevichCompactificationPoint::new(hinge, kpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};
    use crate::sky::sky_from_geodesic;
    use crate::velocity::poly_i64;

    fn seq(ps: &[&[i64]]) -> PolySequence {
        PolySequence::from_polys(ps.iter().map(|c| poly_i64(c)).collect()).unwrap()
    }

    fn id(n: usize) -> Matrix<Rational> {
        Matrix::identity(n)
    }

    fn span(vs: &[&[i64]]) -> Subspace<Rational> {
        let rows: Vec<Vec<Rational>> = vs.iter().map(|v| v.iter().map(|&x| qi(x)).collect()).collect();
        Subspace::span(vs[0].len(), &rows).unwrap()
    }

    #[test]
    fn three_blocks_fold() {
        let input = HybridInput::new(id(3), seq(&[&[0, 2], &[0, 1], &[]])).unwrap();
        let DoLimit::Boundary(p) = do_limit(&input).unwrap() else { panic!() };
        assert_eq!(p.hinge().len(), 3);
        assert_eq!(p.mu(), &[qi(1), q(1, 2), qi(0)]);
        assert_eq!(p.gammas(), &[1, 2, 3]);
        assert!(is_geodesic_limit(&p));
    }

    #[test]
    fn tied_exponents_fold_to_one_value() {
        let input = HybridInput::new(id(3), seq(&[&[0, 1], &[0, 1], &[]])).unwrap();
        let DoLimit::Boundary(p) = do_limit(&input).unwrap() else { panic!() };
        assert_eq!(p.hinge().len(), 2);
        assert_eq!(p.mu(), &[qi(1), qi(0)]);
        assert_eq!(p.tau(), vec![qi(1), qi(1), qi(0)]);
        assert_eq!(p.block_sizes(), vec![2, 1]);
    }

    #[test]
    fn constant_is_interior() {
        let input = HybridInput::new(id(2), seq(&[&[3], &[1]])).unwrap();
        let DoLimit::Interior(x) = do_limit(&input).unwrap() else { panic!() };
        let e2 = (2.0f64).exp();
        let expected = SpdPoint::new(Matrix::diag(&[e2, 1.0])).unwrap();
        assert!(x.same_point(&expected));
    }

    #[test]
    fn bounded_offsets_need_float() {
        let input = HybridInput::new(id(2), seq(&[&[1, 1], &[0, 1]])).unwrap();
        assert!(matches!(do_limit(&input), Ok(DoLimit::Interior(_))));
        let three = HybridInput::new(id(3), seq(&[&[1, 1], &[0, 1], &[]])).unwrap();
        assert!(matches!(do_limit(&three), Err(Error::NotExact(_))));
        let float = HybridInput::new(Matrix::<f64>::identity(3), seq(&[&[1, 1], &[0, 1], &[]])).unwrap();
        let DoLimit::Boundary(p) = do_limit(&float).unwrap() else { panic!() };
        assert_eq!(p.gammas(), &[2, 3]);
    }

    #[test]
    fn projection_matches_sky() {
        let g = GeodesicFromBase::new(id(3), vec![qi(2), qi(1), qi(0)]).unwrap();
        let p = geodesic_do_limit(&g).unwrap();
        let data = do_project_to_sky(&p).unwrap();
        assert_eq!(data.kernels, vec![span(&[&[0, 1, 0], &[0, 0, 1]]), span(&[&[0, 0, 1]])]);
        assert_eq!(data.tau, vec![qi(1), q(1, 2), qi(0)]);
        assert_eq!(data.to_sky_point().unwrap(), sky_from_geodesic(&g).unwrap());
    }

    #[test]
    fn strictness() {
        let g = GeodesicFromBase::new(id(2), vec![qi(1), qi(0)]).unwrap();
        assert!(is_geodesic_limit(&geodesic_do_limit(&g).unwrap()));
        // Separate blocks with tied velocities.
        let input = HybridInput::new(id(3), seq(&[&[0, 0, 1], &[0, -1, 1], &[]])).unwrap();
        let DoLimit::Boundary(p) = do_limit(&input).unwrap() else { panic!() };
        assert_eq!(p.mu(), &[qi(1), qi(1), qi(0)]);
        assert!(!is_geodesic_limit(&p));
        assert!(do_project_to_sky(&p).unwrap().to_sky_point().is_ok());
    }

    #[test]
    fn karpelevich_points() {
        let ex = seq(&[
            &[0, 0, 0, 2],
            &[0, 0, 0, 1],
            &[2, 1, 1],
            &[1, 1, 1],
            &[0, 1, 1],
            &[0, 2],
            &[0, 1],
            &[],
        ]);
        let kp = karpelevich_limit_point(&Matrix::<f64>::identity(8), &ex).unwrap();
        assert_eq!(kp.hinge().len(), 6);
        assert_eq!(kp.kpoint().interval, (1, 6));
        let dims: Vec<usize> = kp.hinge().images().unwrap().iter().map(|s| s.dim()).collect();
        assert_eq!(dims, vec![1, 2, 5, 6, 7, 8]);
        let dop = kp.to_do_point().unwrap();
        assert_eq!(dop.mu(), &[qi(1), q(1, 2), qi(0), qi(0), qi(0), qi(0)]);

        let small = karpelevich_limit_point(&id(2), &seq(&[&[0, 1], &[]])).unwrap();
        assert_eq!(small.hinge().len(), 2);
        assert_eq!(small.kpoint().tree().members().len(), 3);
        assert!(karpelevich_limit_point(&id(2), &seq(&[&[2], &[]])).is_err());
    }

    #[test]
    fn hybrid_is_finer() {
        // Same Satake limit, different velocities.
        let a = HybridInput::new(id(3), seq(&[&[0, 2], &[0, 1], &[]])).unwrap();
        let b = HybridInput::new(id(3), seq(&[&[0, 3], &[0, 1], &[]])).unwrap();
        let (DoLimit::Boundary(pa), DoLimit::Boundary(pb)) = (do_limit(&a).unwrap(), do_limit(&b).unwrap()) else {
            panic!()
        };
        assert!(pa.hinge() == pb.hinge());
        assert!(pa != pb);
        // Same DO point, different Karpelevich trees.
        let c = seq(&[&[0, 0, 0, 1], &[0, 0, 1], &[0, 1], &[]]);
        let d = seq(&[&[0, 0, 0, 1], &[0, 2], &[0, 1], &[]]);
        let kc = karpelevich_limit_point(&id(4), &c).unwrap();
        let kd = karpelevich_limit_point(&id(4), &d).unwrap();
        assert!(kc.to_do_point().unwrap() == kd.to_do_point().unwrap());
        assert_ne!(kc.kpoint(), kd.kpoint());
    }
}
