//! The space of oriented geodesics of `SL(n,ℝ)/SO(n)`: strata by velocity
//! pattern, stabilizers, limits of point sequences and rational velocities.

use crate::decomp::{rq, svd};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::satake::SpdPoint;
use crate::scalar::{Backend, Rational, Scalar};
use crate::sky::{connecting_flag, multiplicity_breaks, Flag};
use crate::velocity::VelocityPoint;

/// The multiplicity pattern of a velocity: block ends `α₁ < … < α_σ = n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumDescriptor {
    n: usize,
    breaks: Vec<usize>,
}

impl StratumDescriptor {
    pub fn new(n: usize, breaks: Vec<usize>) -> Result<Self> {
        if breaks.last() != Some(&n) || breaks.first() == Some(&0) {
            return Err(Error::invalid("block ends must finish at n"));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotMonotone("block ends".into()));
        }
        Ok(StratumDescriptor { n, breaks })
    }

    /// All blocks of size one.
    pub fn generic(n: usize) -> Self {
        StratumDescriptor {
            n,
            breaks: (1..=n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut prev = 0;
        self.breaks
            .iter()
            .map(|&b| {
                let d = b - prev;
                prev = b;
                d
            })
            .collect()
    }
}

/// `ℝ₊* × ∏ O(d_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerDescriptor {
    /// Dimensions of the orthogonal factors, `d_i(d_i − 1)/2`.
    pub factors: Vec<usize>,
    pub dim: usize,
}

pub fn stratum_of<F: Scalar>(v: &VelocityPoint<F>, tol: f64) -> Result<StratumDescriptor> {
    let n = v.mu.len();
    if n < 2 {
        return Err(Error::invalid("velocity needs at least two entries"));
    }
    let mut breaks = Vec::new();
    for i in 1..n {
        let d = v.mu[i - 1].clone() - v.mu[i].clone();
        match d.sign(1.0, tol) {
            s if s < 0 => return Err(Error::NotMonotone("velocity".into())),
            0 => {}
            _ => breaks.push(i),
        }
    }
    breaks.push(n);
    StratumDescriptor::new(n, breaks)
}

pub fn stabilizer(s: &StratumDescriptor) -> StabilizerDescriptor {
    let factors: Vec<usize> = s.block_sizes().iter().map(|d| d * (d - 1) / 2).collect();
    let dim = 1 + factors.iter().sum::<usize>();
    StabilizerDescriptor { factors, dim }
}

/// `dim Δ(A) + dim SL(n,ℝ) − dim G(A)`.
pub fn stratum_dimension(s: &StratumDescriptor) -> Result<usize> {
    let sigma = s.breaks.len();
    if sigma < 2 {
        return Err(Error::invalid("a single block has zero velocity and no stratum"));
    }
    let n = s.n;
    Ok(sigma - 2 + n * n - 1 - stabilizer(s).dim)
}

/// An oriented geodesic `s ↦ p^{1/2}·R·e^{λs}·Rᵀ·p^{1/2}`.
///
/// `point` is the point closest to the identity (unit determinant), `frame`
/// the orthogonal `R`, and `endpoint` the flag of the forward end.
#[derive(Clone, Debug)]
pub struct OrientedGeodesic<F> {
    point: SpdPoint<f64>,
    frame: Matrix<f64>,
    lambda: Vec<Rational>,
    endpoint: Flag<F>,
}

impl OrientedGeodesic<f64> {
    /// Rebuilds a geodesic from its closest point, frame and exponents; the
    /// endpoint flag is read off `p^{1/2}·R`.
    pub fn from_parts(point: SpdPoint<f64>, frame: Matrix<f64>, lambda: &[Rational]) -> Result<Self> {
        let lambda = normalize(lambda)?;
        if frame.rows() != lambda.len() || !frame.is_orthogonal(1e-9) {
            return Err(Error::NotOrthogonal);
        }
        let half = crate::decomp::sym_apply(&point.normalized(), f64::sqrt)?;
        let endpoint = Flag::from_frame(&(&half * &frame), &multiplicity_breaks(&lambda))?;
        Ok(OrientedGeodesic {
            point,
            frame,
            lambda,
            endpoint,
        })
    }
}

impl<F: Scalar> OrientedGeodesic<F> {
    /// The geodesic `s ↦ h·e^{λs}·hᵀ`; `endpoint` must be the flag of `h`.
    pub fn through(h: &Matrix<f64>, lambda: &[Rational], endpoint: Flag<F>) -> Result<Self> {
        let lambda = normalize(lambda)?;
        let lf: Vec<f64> = lambda.iter().map(|x| x.to_f64()).collect();
        let s0 = closest_parameter(h, &lf)?;
        let g = scale_cols(h, &lf, s0 / 2.0);
        let d = svd(&g);
        let gm = (d.sigma.iter().map(|x| x.ln()).sum::<f64>() / d.sigma.len() as f64).exp();
        let sq: Vec<f64> = d.sigma.iter().map(|x| (x / gm) * (x / gm)).collect();
        let p = &(&d.u * &Matrix::diag(&sq)) * &d.u.transpose();
        let p = Matrix::from_fn(p.rows(), p.cols(), |i, j| 0.5 * (p[(i, j)] + p[(j, i)]));
        let frame = &d.u * &d.v.transpose();
        Ok(OrientedGeodesic {
            point: SpdPoint::new(p)?,
            frame,
            lambda,
            endpoint,
        })
    }

    pub fn point(&self) -> &SpdPoint<f64> {
        &self.point
    }

    pub fn frame(&self) -> &Matrix<f64> {
        &self.frame
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn endpoint(&self) -> &Flag<F> {
        &self.endpoint
    }

    pub fn velocity(&self) -> VelocityPoint<Rational> {
        let top = self.lambda[0].clone();
        VelocityPoint {
            mu: self.lambda.iter().map(|l| l.clone() / top.clone()).collect(),
        }
    }

    pub fn stratum(&self) -> StratumDescriptor {
        let mut breaks = multiplicity_breaks(&self.lambda);
        breaks.push(self.lambda.len());
        StratumDescriptor {
            n: self.lambda.len(),
            breaks,
        }
    }

    /// `γ(s)` in floating point, with `s = 0` at the point closest to the
    /// identity.
    pub fn at(&self, s: f64) -> Result<Matrix<f64>> {
        let half = crate::decomp::sym_apply(&self.point.normalized(), f64::sqrt)?;
        let lf: Vec<f64> = self.lambda.iter().map(|x| x.to_f64()).collect();
        let d: Vec<f64> = lf.iter().map(|l| (l * s).exp()).collect();
        let rd = &self.frame * &Matrix::diag(&d);
        Ok(&(&(&half * &rd) * &self.frame.transpose()) * &half)
    }

    /// Same velocity, same endpoint flag and same closest point.
    pub fn same_geodesic(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.velocity() != other.velocity() {
            return Ok(false);
        }
        let flags_match = match F::BACKEND {
            Backend::Exact => self.endpoint == other.endpoint,
            Backend::Float => self.endpoint.angle_distance(&other.endpoint)? <= tol,
        };
        let a = self.point.normalized();
        let b = other.point.normalized();
        Ok(flags_match && a.sub(&b)?.max_abs() <= tol * a.max_abs().max(1.0))
    }
}

fn normalize(lambda: &[Rational]) -> Result<Vec<Rational>> {
    let n = lambda.len();
    if n == 0 {
        return Err(Error::invalid("empty exponents"));
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NotMonotone("exponents".into()));
    }
    let last = lambda[n - 1].clone();
    let out: Vec<Rational> = lambda.iter().map(|l| l.clone() - last.clone()).collect();
    if out[0] == <Rational as num_traits::Zero>::zero() {
        return Err(Error::invalid("zero velocity"));
    }
    Ok(out)
}

fn scale_cols(h: &Matrix<f64>, lambda: &[f64], s: f64) -> Matrix<f64> {
    Matrix::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * (lambda[j] * s).exp())
}

/// Half the derivative in `s` of the squared distance from the identity to
/// `h·e^{λs}·hᵀ` (modulo scalars).
fn distance_slope(h: &Matrix<f64>, lambda: &[f64], s: f64) -> f64 {
    let d = svd(&scale_cols(h, lambda, s / 2.0));
    let n = lambda.len() as f64;
    let logs: Vec<f64> = d.sigma.iter().map(|x| 2.0 * x.ln()).collect();
    let mean = logs.iter().sum::<f64>() / n;
    let lmean = lambda.iter().sum::<f64>() / n;
    (0..logs.len())
        .map(|i| {
            let vlv: f64 = (0..lambda.len())
                .map(|k| d.v[(k, i)] * d.v[(k, i)] * (lambda[k] - lmean))
                .sum();
            (logs[i] - mean) * vlv
        })
        .sum()
}

/// The parameter of the point closest to the identity, by bisection on the
/// (monotone) slope of the squared distance.
fn closest_parameter(h: &Matrix<f64>, lambda: &[f64]) -> Result<f64> {
    let f = |s: f64| distance_slope(h, lambda, s);
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut grow = 0;
    while f(lo) > 0.0 {
        lo *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::NoConvergence("no lower bracket for the closest point".into()));
        }
    }
    while f(hi) < 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 120 {
            return Err(Error::NoConvergence("no upper bracket for the closest point".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `x(t) = (M + e^{−t}D)·U·diag(e^{λt})·Uᵀ·(M + e^{−t}D)ᵀ`.
#[derive(Clone, Debug)]
pub struct PathDescriptor<F> {
    m: Matrix<F>,
    drift: Option<Matrix<F>>,
    frame: Matrix<F>,
    lambda: Vec<Rational>,
}

impl<F: Scalar> PathDescriptor<F> {
    pub fn new(m: Matrix<F>, drift: Option<Matrix<F>>, frame: Matrix<F>, lambda: Vec<Rational>) -> Result<Self> {
        let n = lambda.len();
        for x in [Some(&m), drift.as_ref(), Some(&frame)].into_iter().flatten() {
            if x.rows() != n || x.cols() != n {
                return Err(Error::dims("path matrices must be n×n"));
            }
        }
        let tol = match F::BACKEND {
            Backend::Exact => 0.0,
            Backend::Float => 1e-9,
        };
        if !frame.is_orthogonal(tol) {
            return Err(Error::NotOrthogonal);
        }
        if m.rank(1e-12) != n {
            return Err(Error::Singular);
        }
        let lambda = normalize(&lambda)?;
        Ok(PathDescriptor { m, drift, frame, lambda })
    }

    pub fn m(&self) -> &Matrix<F> {
        &self.m
    }

    pub fn drift(&self) -> Option<&Matrix<F>> {
        self.drift.as_ref()
    }

    pub fn frame(&self) -> &Matrix<F> {
        &self.frame
    }

    /// A geodesic from the identity translated by `m`.
    pub fn translated_geodesic(m: Matrix<F>, frame: Matrix<F>, lambda: Vec<Rational>) -> Result<Self> {
        Self::new(m, None, frame, lambda)
    }

    /// `(M + e^{−t}D)·U` in floating point.
    pub fn positioning(&self, t: f64) -> Matrix<f64> {
        let mut m = self.m.to_f64();
        if let Some(d) = &self.drift {
            m = m.add(&d.to_f64().scale(&(-t).exp())).expect("same shape");
        }
        &m * &self.frame.to_f64()
    }

    /// `M·U`, exact when the inputs are.
    pub fn limit_positioning(&self) -> Matrix<F> {
        self.m.matmul(&self.frame).expect("same shape")
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn at(&self, t: f64) -> Matrix<f64> {
        let h = self.positioning(t);
        let lf: Vec<f64> = self.lambda.iter().map(|x| x.to_f64()).collect();
        let g = scale_cols(&h, &lf, t / 2.0);
        &g * &g.transpose()
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicLimit<F> {
    pub geodesic: OrientedGeodesic<F>,
    /// Flag distance from the base point's view of each sample to the limit
    /// endpoint.
    pub step1_residuals: Vec<f64>,
    /// Distance between closest points of consecutive connecting geodesics.
    pub step2_residuals: Vec<f64>,
}

/// Two-step limit of the samples `x(t)`, `t ∈ times`: the direction `y` seen
/// from `base`, then the limit of the geodesics through `x(t)` ending at `y`.
pub fn sequence_to_geodesic_limit<F: Scalar>(
    path: &PathDescriptor<F>,
    base: &SpdPoint<f64>,
    times: &[f64],
    tol: f64,
) -> Result<GeodesicLimit<F>> {
    if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sample times must increase"));
    }
    let n = path.lambda.len();
    let lf: Vec<f64> = path.lambda.iter().map(|x| x.to_f64()).collect();
    let breaks = multiplicity_breaks(&path.lambda);
    let w_exact = path.limit_positioning();
    let endpoint = connecting_flag(&w_exact, &path.lambda)?;
    let endpoint_f = endpoint.to_f64();
    // Step 1: directions from the base point.
    let b = base.normalized();
    let b_half = crate::decomp::sym_apply(&b, f64::sqrt)?;
    let b_inv_half = crate::decomp::sym_apply(&b, |x| 1.0 / x.sqrt())?;
    let mut step1 = Vec::with_capacity(times.len());
    for &t in times {
        let c = &b_inv_half * &path.positioning(t);
        let d = svd(&scale_cols(&c, &lf, t / 2.0));
        let seen = Flag::from_frame(&(&b_half * &d.u), &breaks)?;
        step1.push(seen.angle_distance(&endpoint_f)?);
    }
    if *step1.last().expect("nonempty") > tol {
        return Err(Error::Divergence {
            step: 1,
            detail: format!("directions from the base do not settle: residuals {step1:?}"),
        });
    }
    // Step 2: geodesics through each sample asymptotic to the endpoint.
    // K(t) = W⁻¹·h(t) = I + e^{−t}·W⁻¹DU, formed in the input scalar so that
    // no rounding enters the part that is amplified by e^{λt/2}.
    let w = w_exact.to_f64();
    let correction = match &path.drift {
        Some(d) => Some(w_exact.inverse()?.matmul(&d.matmul(&path.frame)?)?.to_f64()),
        None => None,
    };
    let mut geodesics = Vec::with_capacity(times.len());
    for &t in times {
        let mut k = Matrix::<f64>::identity(n);
        if let Some(c) = &correction {
            k = k.add(&c.scale(&(-t).exp()))?;
        }
        let (r, _) = rq(&scale_cols(&k, &lf, t / 2.0))?;
        let p = scale_cols(&r, &lf, -t / 2.0);
        let h = &w * &p;
        geodesics.push(OrientedGeodesic::through(&h, &path.lambda, endpoint.clone())?);
    }
    let step2: Vec<f64> = geodesics
        .windows(2)
        .map(|g| {
            let a = g[0].point.normalized();
            let b = g[1].point.normalized();
            a.sub(&b).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
        })
        .collect();
    if step2.last().is_some_and(|&r| r > tol) {
        return Err(Error::Divergence {
            step: 2,
            detail: format!("connecting geodesics do not settle: residuals {step2:?}"),
        });
    }
    Ok(GeodesicLimit {
        geodesic: geodesics.pop().expect("nonempty"),
        step1_residuals: step1,
        step2_residuals: step2,
    })
}

/// Best rational approximation with denominator at most `max_den`, by
/// continued fractions.
pub fn best_rational(x: f64, max_den: u64) -> (i64, u64) {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    (h1 as i64, k1.max(1) as u64)
}

/// Rational velocity test. Exact geodesics always pass; float ones pass when
/// every `μ_j` is within `tol` of a fraction with denominator at most
/// `max_den`.
pub fn is_sea_urchin_point<F: Scalar>(g: &OrientedGeodesic<F>, max_den: u64, tol: f64) -> bool {
    match F::BACKEND {
        Backend::Exact => true,
        Backend::Float => g.velocity().mu.iter().all(|m| {
            let x = m.to_f64();
            let (p, q) = best_rational(x, max_den);
            (x - p as f64 / q as f64).abs() <= tol
        }),
    }
}

/// Tolerance used by [`is_sea_urchin_point`] when none is given.
pub const SEA_URCHIN_TOL: f64 = 1e-14;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn rl(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn strata_and_stabilizers() {
        let v = VelocityPoint { mu: vec![qi(1), q(1, 2), qi(0)] };
        let s = stratum_of(&v, 0.0).unwrap();
        assert_eq!(s, StratumDescriptor::generic(3));
        assert_eq!(stabilizer(&s).dim, 1);
        let t = stratum_of(&VelocityPoint { mu: vec![qi(1), qi(1), qi(0)] }, 0.0).unwrap();
        assert_eq!(t.block_sizes(), vec![2, 1]);
        assert_eq!(stabilizer(&t).dim, 2);
        assert_eq!(stabilizer(&StratumDescriptor::generic(4)).dim, 1);
        assert_eq!(stratum_dimension(&StratumDescriptor::generic(3)).unwrap(), 8);
        assert_eq!(stratum_dimension(&StratumDescriptor::generic(2)).unwrap(), 2);
        assert!(stratum_dimension(&StratumDescriptor::new(3, vec![3]).unwrap()).is_err());
    }

    #[test]
    fn fixed_geodesic_is_its_own_limit() {
        let u = Matrix::cayley(&Matrix::from_rows(vec![
            vec![qi(0), qi(1), q(1, 3)],
            vec![qi(-1), qi(0), qi(2)],
            vec![q(-1, 3), qi(-2), qi(0)],
        ])
        .unwrap())
        .unwrap();
        let lambda = rl(&[2, 1, 0]);
        let path = PathDescriptor::translated_geodesic(Matrix::identity(3), u.clone(), lambda.clone()).unwrap();
        let base = SpdPoint::new(Matrix::<f64>::identity(3)).unwrap();
        let lim = sequence_to_geodesic_limit(&path, &base, &[5.0, 10.0, 20.0], 1e-8).unwrap();
        let expected = Flag::from_frame(&u, &[1, 2]).unwrap();
        assert_eq!(lim.geodesic.endpoint(), &expected);
        assert_eq!(lim.geodesic.lambda(), lambda.as_slice());
        let p = lim.geodesic.point().normalized();
        assert!(p.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn translated_geodesic_limit_lies_on_it() {
        let m = Matrix::from_rows(vec![
            vec![qi(2), qi(1), qi(0)],
            vec![qi(0), qi(1), qi(0)],
            vec![qi(1), qi(0), q(1, 2)],
        ])
        .unwrap();
        let path = PathDescriptor::translated_geodesic(m.clone(), Matrix::identity(3), rl(&[3, 1, 0])).unwrap();
        let base = SpdPoint::new(Matrix::<f64>::identity(3)).unwrap();
        let lim = sequence_to_geodesic_limit(&path, &base, &[4.0, 8.0, 16.0], 1e-8).unwrap();
        assert_eq!(lim.geodesic.endpoint(), &Flag::from_frame(&m, &[1, 2]).unwrap());
        let mi = m.inverse().unwrap().to_f64();
        let back = &(&mi * lim.geodesic.point().matrix()) * &mi.transpose();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(back[(i, j)].abs() < 1e-8 * back.max_abs());
                }
            }
        }
    }

    #[test]
    fn drifting_path_settles() {
        let drift = Matrix::from_rows(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let path = PathDescriptor::new(
            Matrix::<f64>::identity(2),
            Some(drift),
            Matrix::identity(2),
            vec![qi(1), qi(0)],
        )
        .unwrap();
        let base = SpdPoint::new(Matrix::<f64>::identity(2)).unwrap();
        let lim = sequence_to_geodesic_limit(&path, &base, &[10.0, 20.0, 40.0], 1e-6).unwrap();
        let p = lim.geodesic.point().normalized();
        assert!(p.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(best_rational(0.5, 1_000_000), (1, 2));
        assert_eq!(best_rational(0.75, 10), (3, 4));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (p, q) = best_rational(h, 1_000_000);
        assert!(q <= 1_000_000 && (h - p as f64 / q as f64).abs() > SEA_URCHIN_TOL);
    }

    #[test]
    fn sea_urchin() {
        let h = Matrix::<f64>::identity(3);
        let flag = Flag::<f64>::coordinate(3, &[1, 2]).unwrap();
        let half = OrientedGeodesic::through(&h, &[qi(1), q(1, 2), qi(0)], flag.clone()).unwrap();
        assert!(is_sea_urchin_point(&half, 1_000_000, SEA_URCHIN_TOL));
        let irr = <Rational as Scalar>::from_f64(std::f64::consts::FRAC_1_SQRT_2);
        let g = OrientedGeodesic::through(&h, &[qi(1), irr, qi(0)], flag).unwrap();
        assert!(!is_sea_urchin_point(&g, 1_000_000, SEA_URCHIN_TOL));
        let exact = OrientedGeodesic::through(
            &h,
            &[qi(1), q(1, 3), qi(0)],
            Flag::<Rational>::coordinate(3, &[1, 2]).unwrap(),
        )
        .unwrap();
        assert!(is_sea_urchin_point(&exact, 10, 0.0));
    }
}
