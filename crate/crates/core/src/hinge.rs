//! Hinges: chains of relations that arise as limits of invertible matrices
//! in `Gr_n/ℝ*`, their admissible sets, and limits of Cartan paths
//! `A(t) = g₁·diag(e^{λ₁t}, …, e^{λₙt})·g₂`.

use std::ops::Range;

use crate::decomp::svd;
use crate::error::{Error, Result};
use crate::matrix::{dot, unit, Matrix};
use crate::relation::{induced_operator, relation_parts, scale, LinearRelation};
use crate::scalar::{Backend, Rational, Scalar};
use crate::subspace::Subspace;

#[derive(Clone, Debug)]
pub struct Hinge<F> {
    n: usize,
    components: Vec<LinearRelation<F>>,
}

/// Equality in `Gr_n/ℝ*`: componentwise up to nonzero scaling.
impl<F: Scalar> PartialEq for Hinge<F> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| same_orbit(a, b).unwrap_or(false))
    }
}

impl<F: Scalar> Hinge<F> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[LinearRelation<F>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn to_f64(&self) -> Hinge<f64> {
        Hinge {
            n: self.n,
            components: self.components.iter().map(|c| c.to_f64()).collect(),
        }
    }

    /// Kernels `Ker(P₁) ⊋ Ker(P₂) ⊋ … ⊋ Ker(P_k) = 0`.
    pub fn kernels(&self) -> Result<Vec<Subspace<F>>> {
        self.components
            .iter()
            .map(|p| relation_parts(p).map(|r| r.kernel))
            .collect()
    }

    /// Images `Im(P₁) ⊊ … ⊊ Im(P_k) = Fⁿ`.
    pub fn images(&self) -> Result<Vec<Subspace<F>>> {
        self.components
            .iter()
            .map(|p| relation_parts(p).map(|r| r.image))
            .collect()
    }
}

/// `Q₀, P₁, Q₁, …, P_k, Q_k`.
#[derive(Clone, Debug)]
pub struct AdmissibleSet<F> {
    pub fixed: Vec<LinearRelation<F>>,
    pub moving: Vec<LinearRelation<F>>,
}

impl<F: Scalar> AdmissibleSet<F> {
    pub fn sequence(&self) -> Vec<&LinearRelation<F>> {
        let mut out = Vec::with_capacity(self.fixed.len() + self.moving.len());
        for (i, q) in self.fixed.iter().enumerate() {
            out.push(q);
            if let Some(p) = self.moving.get(i) {
                out.push(p);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.fixed.len() + self.moving.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The family `A(t) = g₁·diag(e^{λ₁t}, …, e^{λₙt})·g₂`, `t → +∞`.
#[derive(Clone, Debug)]
pub struct CartanPath<F> {
    g1: Matrix<F>,
    lambda: Vec<Rational>,
    g2: Matrix<F>,
}

impl<F: Scalar> CartanPath<F> {
    pub fn new(g1: Matrix<F>, lambda: Vec<Rational>, g2: Matrix<F>) -> Result<Self> {
        let n = lambda.len();
        if n == 0 {
            return Err(Error::invalid("empty exponent vector"));
        }
        for (name, g) in [("g1", &g1), ("g2", &g2)] {
            if g.rows() != n || g.cols() != n {
                return Err(Error::dims(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    g.rows(),
                    g.cols()
                )));
            }
            if g.det()?.is_negligible(g.max_abs().powi(n as i32), 1e-12) {
                return Err(Error::Singular);
            }
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid("exponents must be nonincreasing"));
        }
        Ok(CartanPath { g1, lambda, g2 })
    }

    pub fn g1(&self) -> &Matrix<F> {
        &self.g1
    }

    pub fn g2(&self) -> &Matrix<F> {
        &self.g2
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Maximal runs of equal exponents, largest value first.
    pub fn blocks(&self) -> Vec<(Rational, Range<usize>)> {
        lambda_blocks(&self.lambda)
    }

    /// `A(t)` evaluated in floating point.
    pub fn at(&self, t: f64) -> Matrix<f64> {
        let d: Vec<f64> = self.lambda.iter().map(|l| (l.to_f64() * t).exp()).collect();
        &(&self.g1.to_f64() * &Matrix::diag(&d)) * &self.g2.to_f64()
    }

    pub fn to_f64(&self) -> CartanPath<f64> {
        CartanPath {
            g1: self.g1.to_f64(),
            lambda: self.lambda.clone(),
            g2: self.g2.to_f64(),
        }
    }
}

pub(crate) fn lambda_blocks(lambda: &[Rational]) -> Vec<(Rational, Range<usize>)> {
    let mut out: Vec<(Rational, Range<usize>)> = Vec::new();
    for (i, l) in lambda.iter().enumerate() {
        match out.last_mut() {
            Some((v, r)) if v == l => r.end = i + 1,
            _ => out.push((l.clone(), i..i + 1)),
        }
    }
    out
}

pub fn validate_hinge<F: Scalar>(candidate: Vec<LinearRelation<F>>) -> Result<Hinge<F>> {
    let Some(first) = candidate.first() else {
        return Err(Error::hinge("length", "a hinge has at least one component"));
    };
    let n = first.n();
    if candidate.iter().any(|p| p.n() != n) {
        return Err(Error::dims("components live in different spaces"));
    }
    if let Some((j, _)) = candidate.iter().enumerate().find(|(_, p)| !p.is_grassmannian()) {
        return Err(Error::invalid(format!(
            "component {} is not {n}-dimensional",
            j + 1
        )));
    }
    let parts = candidate
        .iter()
        .map(relation_parts)
        .collect::<Result<Vec<_>>>()?;
    if let Some(j) = parts.iter().position(|p| p.rank == 0) {
        return Err(Error::hinge("0°", format!("component {} has rank 0", j + 1)));
    }
    for j in 0..parts.len() - 1 {
        if parts[j].kernel != parts[j + 1].domain {
            return Err(Error::hinge(
                "1°",
                format!("Ker(P{}) != Dom(P{})", j + 1, j + 2),
            ));
        }
        if parts[j].image != parts[j + 1].indef {
            return Err(Error::hinge(
                "1°",
                format!("Im(P{}) != Indef(P{})", j + 1, j + 2),
            ));
        }
    }
    if parts[0].indef.dim() != 0 {
        return Err(Error::hinge("2°", "Indef(P1) != 0"));
    }
    let k = parts.len();
    if parts[k - 1].kernel.dim() != 0 {
        return Err(Error::hinge("2°", format!("Ker(P{k}) != 0")));
    }
    if k > n {
        return Err(Error::hinge("length", format!("{k} components in dimension {n}")));
    }
    Ok(Hinge {
        n,
        components: candidate,
    })
}

pub fn admissible_set<F: Scalar>(h: &Hinge<F>) -> Result<AdmissibleSet<F>> {
    let n = h.n;
    let mut fixed = vec![LinearRelation::direct_sum(
        &Subspace::full(n),
        &Subspace::zero(n),
    )?];
    for p in &h.components {
        let parts = relation_parts(p)?;
        fixed.push(LinearRelation::direct_sum(&parts.kernel, &parts.image)?);
    }
    Ok(AdmissibleSet {
        fixed,
        moving: h.components.clone(),
    })
}

/// Closed-form limit: block `c` contributes
/// `{(g₂⁻¹u, g₁w)}` with `w_j = u_j` where `λ_j = c`, `w_j = 0` where
/// `λ_j < c`, `u_j = 0` where `λ_j > c`.
pub fn cartan_limit<F: Scalar>(path: &CartanPath<F>) -> Result<Hinge<F>> {
    let n = path.n();
    let g2inv = path.g2.inverse()?;
    let mut comps = Vec::new();
    for (c, _) in path.blocks() {
        let pairs: Vec<(Vec<F>, Vec<F>)> = path
            .lambda
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let e = unit::<F>(n, j);
                let z = vec![F::zero(); n];
                if *l == c {
                    (e.clone(), e)
                } else if *l < c {
                    (e, z)
                } else {
                    (z, e)
                }
            })
            .collect();
        let block = LinearRelation::from_pairs(n, &pairs)?;
        let p = block.transform(&g2inv, &path.g1)?;
        comps.push(canonical_representative(&p)?);
    }
    validate_hinge(comps)
}

/// A fixed representative of the orbit `ℝ*·P`.
///
/// Exact: in the reduced row echelon basis, the first nonzero target entry
/// `a` of a row whose pivot lies in the source block is scaled to `±1`. The
/// sign is that of the first nonzero pairing `⟨x, y⟩` over those rows (or
/// of `a` if every pairing vanishes), so nonnegative relations keep their
/// nonnegative representative. Float: the induced operator is scaled to
/// unit spectral norm.
pub fn canonical_representative<F: Scalar>(p: &LinearRelation<F>) -> Result<LinearRelation<F>> {
    let n = p.n();
    match F::BACKEND {
        Backend::Exact => {
            let source_rows: Vec<&Vec<F>> = p
                .space()
                .basis()
                .iter()
                .filter(|row| {
                    row.iter()
                        .position(|x| !x.is_negligible(0.0, 0.0))
                        .is_some_and(|c| c < n)
                })
                .collect();
            let Some(a) = source_rows
                .iter()
                .find_map(|row| row[n..].iter().find(|x| !x.is_negligible(0.0, 0.0)))
            else {
                return Ok(p.clone());
            };
            let pairing_sign = source_rows
                .iter()
                .map(|row| dot(&row[..n], &row[n..]).sign(0.0, 0.0))
                .find(|&s| s != 0)
                .unwrap_or_else(|| a.sign(0.0, 0.0));
            let mut factor = F::one() / a.abs();
            if pairing_sign < 0 {
                factor = -factor;
            }
            scale(&factor, p)
        }
        Backend::Float => {
            let op = induced_operator(p)?;
            if op.matrix.rows() == 0 {
                return Ok(p.clone());
            }
            let smax = svd(&op.matrix.to_f64()).sigma[0];
            scale(&F::from_f64(1.0 / smax), p)
        }
    }
}

/// Whether `Q = α·P` for some nonzero `α`.
pub fn same_orbit<F: Scalar>(p: &LinearRelation<F>, q: &LinearRelation<F>) -> Result<bool> {
    if p.n() != q.n() {
        return Ok(false);
    }
    let pp = relation_parts(p)?;
    let qp = relation_parts(q)?;
    if pp != qp {
        return Ok(false);
    }
    if pp.rank == 0 {
        return Ok(true);
    }
    let op = induced_operator(p)?;
    // Q's operator in P's bases.
    let mut frame: Vec<Vec<F>> = op.target_basis.clone();
    frame.extend(pp.indef.basis().iter().cloned());
    let frame_m = Matrix::from_cols(frame)?;
    let r = pp.rank;
    let tol = p.space().tol().max(q.space().tol());
    let mut cols = Vec::with_capacity(r);
    for c in &op.source_basis {
        let Some(w) = q.partner(c)? else {
            return Ok(false);
        };
        let Some(x) = frame_m.solve(&w, tol)? else {
            return Ok(false);
        };
        cols.push(x[..r].to_vec());
    }
    let mq = Matrix::from_cols(cols)?;
    let mp = &op.matrix;
    let inner = |a: &Matrix<F>, b: &Matrix<F>| {
        a.data()
            .iter()
            .zip(b.data())
            .fold(F::zero(), |s, (x, y)| s + x.clone() * y.clone())
    };
    let alpha = inner(&mq, mp) / inner(mp, mp);
    if alpha.is_negligible(1.0, tol) {
        return Ok(false);
    }
    let resid = mq.sub(&mp.scale(&alpha))?;
    let scale_ref = mq.max_abs().max(f64::MIN_POSITIVE);
    Ok(resid.data().iter().all(|x| x.is_negligible(scale_ref, tol.max(1e-9))))
}

/// `(cos θ, sin θ)` for `tan θ = sign·e^{log_x}` without overflow.
fn cos_sin_from_log(sign: f64, log_x: f64) -> (f64, f64) {
    if log_x > 0.0 {
        let s = 1.0 / (1.0 + (-2.0 * log_x).exp()).sqrt();
        (s * (-log_x).exp(), sign * s)
    } else {
        let c = 1.0 / (1.0 + (2.0 * log_x).exp()).sqrt();
        (c, sign * c * log_x.exp())
    }
}

/// The orbit `ℝ*·P` of a float relation, parametrized by `±e^ℓ`.
struct OrbitCurve {
    n: usize,
    fixed_rows: Vec<Vec<f64>>,
    /// `(source direction, target direction, singular value)`.
    triples: Vec<(Vec<f64>, Vec<f64>, f64)>,
}

impl OrbitCurve {
    fn new(p: &LinearRelation<f64>) -> Result<Self> {
        let n = p.n();
        let parts = relation_parts(p)?;
        let op = induced_operator(p)?;
        let mut fixed_rows: Vec<Vec<f64>> = Vec::new();
        for k in parts.kernel.basis() {
            fixed_rows.push(k.iter().copied().chain(std::iter::repeat_n(0.0, n)).collect());
        }
        for i in parts.indef.basis() {
            fixed_rows.push(std::iter::repeat_n(0.0, n).chain(i.iter().copied()).collect());
        }
        let mut triples = Vec::new();
        if op.matrix.rows() > 0 {
            let s = svd(&op.matrix);
            for j in 0..s.sigma.len() {
                let mut src = vec![0.0; n];
                let mut dst = vec![0.0; n];
                for (a, c) in op.source_basis.iter().enumerate() {
                    crate::matrix::axpy(&mut src, &s.v[(a, j)], c);
                }
                for (b, d) in op.target_basis.iter().enumerate() {
                    crate::matrix::axpy(&mut dst, &s.u[(b, j)], d);
                }
                triples.push((src, dst, s.sigma[j]));
            }
        }
        Ok(OrbitCurve {
            n,
            fixed_rows,
            triples,
        })
    }

    fn at(&self, sign: f64, ell: f64) -> Subspace<f64> {
        let mut rows = self.fixed_rows.clone();
        for (src, dst, sigma) in &self.triples {
            let (c, s) = cos_sin_from_log(sign, ell + sigma.ln());
            rows.push(
                src.iter()
                    .map(|x| c * x)
                    .chain(dst.iter().map(|x| s * x))
                    .collect(),
            );
        }
        Subspace::span(2 * self.n, &rows).expect("consistent lengths")
    }
}

/// The curve `ℝ*·graph A(t)` for a Cartan path at fixed `t`.
struct PathCurve {
    n: usize,
    g1: Matrix<f64>,
    g2inv: Matrix<f64>,
    exponents: Vec<f64>,
}

impl PathCurve {
    fn at(&self, sign: f64, ell: f64) -> Subspace<f64> {
        let n = self.n;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let (c, s) = cos_sin_from_log(sign, ell + self.exponents[j]);
                (0..n)
                    .map(|i| c * self.g2inv[(i, j)])
                    .chain((0..n).map(|i| s * self.g1[(i, j)]))
                    .collect()
            })
            .collect();
        Subspace::span(2 * n, &rows).expect("consistent lengths")
    }
}

fn dist(a: &Subspace<f64>, b: &Subspace<f64>) -> f64 {
    a.angle_distance(b).expect("same ambient")
}

/// `min over ±, ℓ ∈ [lo, hi]` of the distance from `x` to `curve(±, ℓ)`.
fn min_along(x: &Subspace<f64>, curve: &dyn Fn(f64, f64) -> Subspace<f64>, lo: f64, hi: f64) -> f64 {
    const STEP: f64 = 0.5;
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let f = |ell: f64| dist(x, &curve(sign, ell));
        let steps = ((hi - lo) / STEP).ceil() as usize;
        let mut arg = lo;
        let mut val = f64::INFINITY;
        for i in 0..=steps {
            let ell = lo + i as f64 * STEP;
            let v = f(ell);
            if v < val {
                val = v;
                arg = ell;
            }
        }
        // Golden-section refinement around the best grid point.
        let (mut a, mut b) = (arg - STEP, arg + STEP);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = f(c);
        let mut fd = f(d);
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
        }
        best = best.min(val).min(fc).min(fd);
    }
    best
}

/// Sampled Hausdorff distance between the closure of `ℝ*·graph A(t)` and
/// the curve `Q₀ ∪ ℝ*P₁ ∪ Q₁ ∪ … ∪ Q_k` of the hinge.
///
/// Each curve is sampled at the scales `±s` (for the path, `±s·e^{−c_i t}`
/// for every exponent block `c_i`, plus the geometric midpoints between
/// blocks) and the fixed points; each sample's distance to the other curve
/// is then minimized continuously over the scale. The ground metric is the
/// largest principal angle.
pub fn curve_hausdorff<F: Scalar>(
    h: &Hinge<F>,
    path: &CartanPath<F>,
    t: f64,
    s_samples: &[f64],
) -> Result<f64> {
    if s_samples.is_empty() {
        return Err(Error::invalid("empty scale sample list"));
    }
    if s_samples.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("scale samples must be positive"));
    }
    if h.n() != path.n() {
        return Err(Error::dims("hinge and path dimensions differ"));
    }
    let n = h.n();
    let hf = h.to_f64();
    let adm = admissible_set(&hf)?;
    let fixed: Vec<Subspace<f64>> = adm.fixed.iter().map(|q| q.space().clone()).collect();
    let orbits = hf
        .components()
        .iter()
        .map(OrbitCurve::new)
        .collect::<Result<Vec<_>>>()?;
    let pathc = PathCurve {
        n,
        g1: path.g1.to_f64(),
        g2inv: path.g2.to_f64().inverse()?,
        exponents: path.lambda.iter().map(|l| l.to_f64() * t).collect(),
    };
    let levels: Vec<f64> = path.blocks().iter().map(|(c, _)| c.to_f64()).collect();
    let margin = 30.0;

    let mut gamma_samples: Vec<Subspace<f64>> = fixed.clone();
    for o in &orbits {
        for &s in s_samples {
            for sign in [1.0, -1.0] {
                gamma_samples.push(o.at(sign, s.ln()));
            }
        }
    }
    let source = Subspace::<f64>::coordinate(2 * n, &(0..n).collect::<Vec<_>>())?;
    let target = Subspace::<f64>::coordinate(2 * n, &(n..2 * n).collect::<Vec<_>>())?;
    let mut sigma_samples: Vec<Subspace<f64>> = vec![source.clone(), target.clone()];
    for (i, c) in levels.iter().enumerate() {
        for sign in [1.0, -1.0] {
            for &s in s_samples {
                sigma_samples.push(pathc.at(sign, s.ln() - c * t));
            }
            if let Some(next) = levels.get(i + 1) {
                sigma_samples.push(pathc.at(sign, -0.5 * (c + next) * t));
            }
        }
    }

    let to_gamma = |x: &Subspace<f64>| {
        let mut best = fixed.iter().map(|q| dist(x, q)).fold(f64::INFINITY, f64::min);
        for o in &orbits {
            best = best.min(min_along(x, &|sg, l| o.at(sg, l), -margin, margin));
        }
        best
    };
    let lo = -levels[0] * t - margin;
    let hi = -levels[levels.len() - 1] * t + margin;
    let to_sigma = |y: &Subspace<f64>| {
        dist(y, &source)
            .min(dist(y, &target))
            .min(min_along(y, &|sg, l| pathc.at(sg, l), lo, hi))
    };
    let d1 = sigma_samples.iter().map(to_gamma).fold(0.0, f64::max);
    let d2 = gamma_samples.iter().map(to_sigma).fold(0.0, f64::max);
    Ok(d1.max(d2))
}

/// [`curve_hausdorff`] at several times.
pub fn curve_hausdorff_profile<F: Scalar>(
    h: &Hinge<F>,
    path: &CartanPath<F>,
    t_samples: &[f64],
    s_samples: &[f64],
) -> Result<Vec<f64>> {
    if t_samples.is_empty() {
        return Err(Error::invalid("empty time sample list"));
    }
    t_samples
        .iter()
        .map(|&t| curve_hausdorff(h, path, t, s_samples))
        .collect()
}

/// Default scale samples for [`curve_hausdorff`].
pub fn default_scale_samples() -> Vec<f64> {
    (-4..=4).map(|k| 10f64.powf(k as f64 / 2.0)).collect()
}

#[derive(Clone, Debug)]
pub struct NumericHingeEstimate {
    pub hinge: Hinge<f64>,
    /// Fitted growth rate of each log singular value, descending.
    pub slopes: Vec<f64>,
    /// Block index of each singular value.
    pub clusters: Vec<usize>,
    /// Root-mean-square residual of the linear fit.
    pub residual: f64,
}

/// Estimates the hinge limit of a sampled family of invertible matrices.
///
/// The log singular values of each sample are regressed against the
/// sample's log spread `log σ₁ − log σₙ`; slopes are clustered with gap
/// threshold `0.5·(max − min)/n`. A gap within `tol` of the threshold is
/// reported as ambiguous. The hinge is the closed-form limit of the fitted
/// path built from the SVD of the last sample.
pub fn numeric_hinge_estimate(samples: &[Matrix<f64>], tol: f64) -> Result<NumericHingeEstimate> {
    if samples.len() < 3 {
        return Err(Error::invalid("at least three samples are needed"));
    }
    let n = samples[0].rows();
    if samples.iter().any(|m| m.rows() != n || m.cols() != n) {
        return Err(Error::dims("samples must be square and of equal size"));
    }
    let decomps: Vec<_> = samples.iter().map(svd).collect();
    for (i, d) in decomps.iter().enumerate() {
        let smax = d.sigma[0];
        if smax == 0.0 || d.sigma[n - 1] <= smax * 1e-14 {
            return Err(Error::RankDeficient(format!("sample {i} is not invertible")));
        }
    }
    let logs: Vec<Vec<f64>> = decomps
        .iter()
        .map(|d| d.sigma.iter().map(|s| s.ln()).collect())
        .collect();
    let xs: Vec<f64> = logs.iter().map(|l| l[0] - l[n - 1]).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let last = decomps.last().expect("nonempty");

    let spread_range = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if sxx <= 0.0 || spread_range <= tol.max(1e-12) * (1.0 + xbar.abs()) {
        // No degeneration: a single component.
        let hinge = validate_hinge(vec![canonical_representative(&LinearRelation::graph(
            samples.last().expect("nonempty"),
        )?)?])?;
        return Ok(NumericHingeEstimate {
            hinge,
            slopes: vec![0.0; n],
            clusters: vec![0; n],
            residual: 0.0,
        });
    }
    let mut slopes = Vec::with_capacity(n);
    let mut sq_resid = 0.0;
    for i in 0..n {
        let ys: Vec<f64> = logs.iter().map(|l| l[i]).collect();
        let ybar = ys.iter().sum::<f64>() / m;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
        let beta = sxy / sxx;
        let alpha = ybar - beta * xbar;
        sq_resid += xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - alpha - beta * x).powi(2))
            .sum::<f64>();
        slopes.push(beta);
    }
    let residual = (sq_resid / (m * n as f64)).sqrt();
    let range = slopes[0] - slopes[n - 1];
    let threshold = 0.5 * range / n as f64;
    let mut clusters = vec![0usize; n];
    for i in 1..n {
        let gap = slopes[i - 1] - slopes[i];
        if (gap - threshold).abs() < tol {
            return Err(Error::AmbiguousClustering(format!(
                "gap {gap:.3e} between slopes {} and {} is within {tol:.1e} of the threshold {threshold:.3e}",
                i,
                i + 1
            )));
        }
        clusters[i] = clusters[i - 1] + usize::from(gap > threshold);
    }
    let k = clusters[n - 1] + 1;
    let lambda: Vec<Rational> = clusters
        .iter()
        .map(|&c| Rational::from_i64((k - 1 - c) as i64))
        .collect();
    // Within-block singular value ratios of the last sample.
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let lead = clusters.iter().position(|&c| c == clusters[i]).expect("present");
        weights[i] = last.sigma[i] / last.sigma[lead];
    }
    let g1 = &last.u * &Matrix::diag(&weights);
    let g2 = last.v.transpose();
    let hinge = cartan_limit(&CartanPath::new(g1, lambda, g2)?)?;
    Ok(NumericHingeEstimate {
        hinge,
        slopes,
        clusters,
        residual,
    })
}

/// Rebuilds a float hinge with a specific tolerance on every component.
pub fn with_tolerance(h: &Hinge<f64>, tol: f64) -> Hinge<f64> {
    Hinge {
        n: h.n,
        components: h
            .components
            .iter()
            .map(|c| LinearRelation::new(c.n(), c.space().clone().with_tol(tol)).expect("same n"))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::classify;
    use crate::scalar::{q, qi};

    fn rel(rows: &[&[i64]]) -> LinearRelation<Rational> {
        let vs: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect();
        let n = vs[0].len() / 2;
        LinearRelation::new(n, Subspace::span(2 * n, &vs).unwrap()).unwrap()
    }

    fn r(i: usize) -> LinearRelation<Rational> {
        match i {
            1 => rel(&[&[0, 0, 1, 0], &[0, 0, 0, 1]]),
            2 => rel(&[&[0, 0, 1, 0], &[0, 1, 0, 1]]),
            3 => rel(&[&[0, 0, 1, 0], &[0, 1, 0, 0]]),
            4 => rel(&[&[1, 0, 1, 0], &[0, 1, 0, 0]]),
            5 => rel(&[&[1, 0, 0, 0], &[0, 1, 0, 0]]),
            _ => unreachable!(),
        }
    }

    fn id(n: usize) -> Matrix<Rational> {
        Matrix::identity(n)
    }

    #[test]
    fn two_block_limit_and_admissible_set() {
        let path = CartanPath::new(id(2), vec![qi(1), qi(0)], id(2)).unwrap();
        let h = cartan_limit(&path).unwrap();
        assert_eq!(h.components(), &[r(4), r(2)]);
        let adm = admissible_set(&h).unwrap();
        let seq: Vec<_> = adm.sequence().into_iter().cloned().collect();
        assert_eq!(seq, vec![r(5), r(4), r(3), r(2), r(1)]);
    }

    #[test]
    fn validation_conditions() {
        let g = LinearRelation::graph(&Matrix::from_rows(vec![vec![qi(1), qi(2)], vec![qi(3), qi(4)]]).unwrap()).unwrap();
        assert_eq!(validate_hinge(vec![g]).unwrap().len(), 1);
        assert_eq!(validate_hinge(vec![r(4), r(2)]).unwrap().len(), 2);
        let sing = LinearRelation::graph(&Matrix::from_rows(vec![vec![qi(1), qi(0)], vec![qi(0), qi(0)]]).unwrap()).unwrap();
        match validate_hinge(vec![sing]) {
            Err(Error::HingeCondition { condition, .. }) => assert_eq!(condition, "2°"),
            other => panic!("unexpected {other:?}"),
        }
        match validate_hinge(vec![r(4), r(1)]) {
            Err(Error::HingeCondition { condition, .. }) => assert_eq!(condition, "0°"),
            other => panic!("unexpected {other:?}"),
        }
        match validate_hinge(vec![r(2), r(4)]) {
            Err(Error::HingeCondition { condition, .. }) => assert_eq!(condition, "1°"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_exponents_give_graph() {
        let g1 = Matrix::from_rows(vec![vec![qi(2), qi(1)], vec![qi(0), qi(1)]]).unwrap();
        let g2 = Matrix::from_rows(vec![vec![qi(1), qi(0)], vec![qi(3), qi(1)]]).unwrap();
        let path = CartanPath::new(g1.clone(), vec![q(1, 2), q(1, 2)], g2.clone()).unwrap();
        let h = cartan_limit(&path).unwrap();
        assert_eq!(h.len(), 1);
        assert!(same_orbit(&h.components()[0], &LinearRelation::graph(&(&g1 * &g2)).unwrap()).unwrap());
    }

    #[test]
    fn three_blocks_coordinate_parts() {
        let path = CartanPath::new(id(3), vec![qi(2), qi(1), qi(0)], id(3)).unwrap();
        let h = cartan_limit(&path).unwrap();
        assert_eq!(h.len(), 3);
        for p in h.components() {
            let parts = relation_parts(p).unwrap();
            assert_eq!(parts.rank, 1);
            for s in [&parts.kernel, &parts.image, &parts.domain, &parts.indef] {
                for b in s.basis() {
                    assert_eq!(b.iter().filter(|x| **x != qi(0)).count(), 1);
                }
            }
        }
        let doubled = CartanPath::new(id(3), vec![qi(4), qi(2), qi(0)], id(3)).unwrap();
        assert_eq!(cartan_limit(&doubled).unwrap(), h);
    }

    #[test]
    fn canonical_representative_fixes_scale() {
        let a = Matrix::from_rows(vec![vec![qi(3), qi(1)], vec![qi(0), qi(2)]]).unwrap();
        let g = LinearRelation::graph(&a).unwrap();
        let g5 = scale(&q(-5, 7), &g).unwrap();
        assert_eq!(canonical_representative(&g).unwrap(), canonical_representative(&g5).unwrap());
        assert!(same_orbit(&g, &g5).unwrap());
        assert!(!same_orbit(&g, &LinearRelation::graph(&id(2)).unwrap()).unwrap());
        let gf = g.to_f64();
        let g5f = g5.to_f64();
        assert!(same_orbit(&gf, &g5f).unwrap());
    }

    #[test]
    fn canonical_representative_keeps_positive_orbits_positive() {
        let a = Matrix::from_rows(vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]]).unwrap();
        let g = LinearRelation::graph(&a).unwrap();
        let neg = scale(&q(-3, 2), &g).unwrap();
        assert!(!classify(&neg).is_nonnegative);
        let c = canonical_representative(&neg).unwrap();
        assert_eq!(c, canonical_representative(&g).unwrap());
        assert!(classify(&c).is_nonnegative);
    }

    #[test]
    fn hausdorff_decreases() {
        let path = CartanPath::new(id(2), vec![qi(1), qi(0)], id(2)).unwrap();
        let h = cartan_limit(&path).unwrap();
        let s = default_scale_samples();
        let prof = curve_hausdorff_profile(&h, &path, &[5.0, 10.0, 20.0], &s).unwrap();
        assert!(prof[0] > prof[1] && prof[1] > prof[2], "{prof:?}");
        assert!(prof[2] < 1e-3, "{prof:?}");
        let flat = CartanPath::new(id(2), vec![qi(0), qi(0)], id(2)).unwrap();
        let hf = cartan_limit(&flat).unwrap();
        assert!(curve_hausdorff(&hf, &flat, 3.0, &s).unwrap() < 1e-9);
        let swap = Matrix::from_rows(vec![vec![qi(0), qi(1)], vec![qi(1), qi(0)]]).unwrap();
        let wrong = cartan_limit(&CartanPath::new(swap.clone(), vec![qi(1), qi(0)], swap).unwrap()).unwrap();
        assert!(curve_hausdorff(&wrong, &path, 20.0, &s).unwrap() > 0.5);
    }

    #[test]
    fn numeric_estimate_recovers_blocks() {
        let samples: Vec<Matrix<f64>> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&j| Matrix::diag(&[j, 1.0]))
            .collect();
        let est = numeric_hinge_estimate(&samples, 1e-6).unwrap();
        assert_eq!(est.hinge, vec_hinge(&[r(4), r(2)]));
        let three: Vec<Matrix<f64>> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&j: &f64| Matrix::diag(&[j * j, j, 1.0]))
            .collect();
        let est3 = numeric_hinge_estimate(&three, 1e-6).unwrap();
        let exact = cartan_limit(&CartanPath::new(id(3), vec![qi(2), qi(1), qi(0)], id(3)).unwrap()).unwrap();
        assert_eq!(est3.hinge, exact.to_f64());
        let a = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let flat = numeric_hinge_estimate(&[a.clone(), a.clone(), a.clone()], 1e-6).unwrap();
        assert_eq!(flat.hinge.len(), 1);
        assert!(same_orbit(&flat.hinge.components()[0], &LinearRelation::graph(&a).unwrap()).unwrap());
        let sing = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            numeric_hinge_estimate(&[sing.clone(), sing.clone(), sing], 1e-6),
            Err(Error::RankDeficient(_))
        ));
    }

    fn vec_hinge(rs: &[LinearRelation<Rational>]) -> Hinge<f64> {
        validate_hinge(rs.iter().map(|r| r.to_f64()).collect()).unwrap()
    }

    #[test]
    fn limits_of_symmetric_paths_are_nonnegative() {
        let path = CartanPath::new(id(2), vec![qi(1), qi(0)], id(2)).unwrap();
        for p in cartan_limit(&path).unwrap().components() {
            let c = classify(p);
            assert!(c.is_symmetric && c.is_nonnegative);
        }
    }
}
