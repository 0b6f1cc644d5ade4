//! The visibility boundary of `SL(n,ℝ)/SO(n)`: velocities and flags of
//! geodesics from the identity, limits of connecting geodesics, the chamber
//! structure and the Tits metric.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use crate::decomp::qr;
use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::scalar::{Backend, Rational, Scalar, DEFAULT_TOL};
use crate::subspace::Subspace;
use crate::velocity::VelocityPoint;

/// A strictly increasing chain of proper nonzero subspaces.
#[derive(Clone, Debug)]
pub struct Flag<F> {
    ambient: usize,
    subspaces: Vec<Subspace<F>>,
}

impl<F: Scalar> PartialEq for Flag<F> {
    fn eq(&self, other: &Self) -> bool {
        self.ambient == other.ambient && self.subspaces == other.subspaces
    }
}

impl<F: Scalar> Flag<F> {
    pub fn new(ambient: usize, subspaces: Vec<Subspace<F>>) -> Result<Self> {
        for s in &subspaces {
            if s.ambient() != ambient {
                return Err(Error::dims("flag subspaces live in different spaces"));
            }
            if s.dim() == 0 || s.dim() == ambient {
                return Err(Error::invalid("flag steps must be proper and nonzero"));
            }
        }
        for w in subspaces.windows(2) {
            if w[1].dim() <= w[0].dim() || !w[1].contains(&w[0]) {
                return Err(Error::invalid("flag is not strictly increasing"));
            }
        }
        Ok(Flag { ambient, subspaces })
    }

    /// `V_j` spanned by the first `dims[j]` columns of `frame`.
    pub fn from_frame(frame: &Matrix<F>, dims: &[usize]) -> Result<Self> {
        let n = frame.rows();
        let cols = frame.to_cols();
        let subspaces = dims
            .iter()
            .map(|&d| {
                let s = Subspace::span(n, &cols[..d.min(cols.len())])?;
                if s.dim() != d {
                    return Err(Error::Singular);
                }
                Ok(s)
            })
            .collect::<Result<_>>()?;
        Self::new(n, subspaces)
    }

    pub fn coordinate(n: usize, dims: &[usize]) -> Result<Self> {
        Self::from_frame(&Matrix::identity(n), dims)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn subspaces(&self) -> &[Subspace<F>] {
        &self.subspaces
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(|s| s.dim()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.subspaces.len() + 1 == self.ambient
    }

    /// Fills every gap `V_j ⊂ V_{j+1}` with the spans of successive basis
    /// vectors of `V_{j+1} ∩ V_j^⊥`.
    pub fn complete(&self) -> Flag<F> {
        let n = self.ambient;
        let mut chain = vec![Subspace::zero(n)];
        chain.extend(self.subspaces.iter().cloned());
        chain.push(Subspace::full(n));
        let mut out = Vec::new();
        for w in chain.windows(2) {
            let gap = w[1]
                .intersect(&w[0].orthocomplement())
                .expect("same ambient");
            let mut acc = w[0].clone();
            for b in gap.basis() {
                if acc.dim() + 1 >= w[1].dim() {
                    break;
                }
                acc = acc
                    .sum(&Subspace::span(n, std::slice::from_ref(b)).expect("length"))
                    .expect("same ambient");
                out.push(acc.clone());
            }
            if w[1].dim() < n {
                out.push(w[1].clone());
            }
        }
        Flag { ambient: n, subspaces: out }
    }

    pub fn transform(&self, g: &Matrix<F>) -> Result<Flag<F>> {
        let subspaces = self
            .subspaces
            .iter()
            .map(|s| s.image(g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.ambient, subspaces)
    }

    pub fn to_f64(&self) -> Flag<f64> {
        Flag {
            ambient: self.ambient,
            subspaces: self.subspaces.iter().map(|s| s.to_f64()).collect(),
        }
    }

    /// The steps whose dimensions are listed in `dims`.
    pub fn subflag(&self, dims: &[usize]) -> Result<Flag<F>> {
        let subspaces = dims
            .iter()
            .map(|&d| {
                self.subspaces
                    .iter()
                    .find(|s| s.dim() == d)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("no step of dimension {d}")))
            })
            .collect::<Result<_>>()?;
        Self::new(self.ambient, subspaces)
    }

    /// Largest principal angle between corresponding steps.
    pub fn angle_distance(&self, other: &Flag<F>) -> Result<f64> {
        if self.dims() != other.dims() {
            return Ok(PI / 2.0);
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.subspaces.iter().zip(&other.subspaces) {
            worst = worst.max(a.angle_distance(b)?);
        }
        Ok(worst)
    }
}

/// Cumulative sizes of the maximal runs of equal values, without the last.
pub fn multiplicity_breaks<T: PartialEq>(values: &[T]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..values.len() {
        if values[i] != values[i - 1] {
            out.push(i);
        }
    }
    out
}

/// A point of the sky as a pair (velocity, flag).
#[derive(Clone, Debug)]
pub struct SkyPoint<F> {
    velocity: VelocityPoint<Rational>,
    flag: Flag<F>,
}

impl<F: Scalar> PartialEq for SkyPoint<F> {
    fn eq(&self, other: &Self) -> bool {
        self.velocity == other.velocity && self.flag == other.flag
    }
}

impl<F: Scalar> SkyPoint<F> {
    /// `velocity.mu` runs over all `n` indices; the flag has a step at every
    /// break of the velocity.
    pub fn new(velocity: VelocityPoint<Rational>, flag: Flag<F>) -> Result<Self> {
        let mu = &velocity.mu;
        let n = flag.ambient();
        if mu.len() != n {
            return Err(Error::dims(format!("{} velocities for F^{n}", mu.len())));
        }
        if mu[0] != Rational::one() || mu[n - 1] != Rational::zero() {
            return Err(Error::invalid("velocity must run from 1 down to 0"));
        }
        if mu.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotMonotone("velocity".into()));
        }
        if multiplicity_breaks(mu) != flag.dims() {
            return Err(Error::invalid(format!(
                "flag dimensions {:?} do not match the velocity pattern {:?}",
                flag.dims(),
                multiplicity_breaks(mu)
            )));
        }
        Ok(SkyPoint { velocity, flag })
    }

    pub fn velocity(&self) -> &VelocityPoint<Rational> {
        &self.velocity
    }

    pub fn flag(&self) -> &Flag<F> {
        &self.flag
    }

    pub fn n(&self) -> usize {
        self.flag.ambient()
    }

    /// A geodesic from the identity with this endpoint, using an orthonormal
    /// frame adapted to the flag.
    pub fn to_geodesic(&self) -> Result<GeodesicFromBase<f64>> {
        let n = self.n();
        let complete = self.flag.complete().to_f64();
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut chain: Vec<Subspace<f64>> = complete.subspaces.clone();
        chain.push(Subspace::full(n));
        for s in &chain {
            let mut best: Option<Vec<f64>> = None;
            let mut best_norm = 0.0;
            for b in s.basis() {
                let w = residual(b, &frame);
                let nw = norm(&w);
                if nw > best_norm {
                    best_norm = nw;
                    best = Some(w);
                }
            }
            let w = best.ok_or_else(|| Error::RankDeficient("flag step adds no direction".into()))?;
            frame.push(w.iter().map(|x| x / best_norm).collect());
        }
        GeodesicFromBase::new(Matrix::from_cols(frame)?, self.velocity.mu.clone())
    }
}

fn residual(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let r = dot(b, &w);
            for (wk, bk) in w.iter_mut().zip(b) {
                *wk -= r * bk;
            }
        }
    }
    w
}

/// `γ(s) = A·diag(e^{λs})·Aᵀ` with `A` orthogonal and `λ₁ ≥ … ≥ λₙ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicFromBase<F> {
    frame: Matrix<F>,
    lambda: Vec<Rational>,
}

impl<F: Scalar> GeodesicFromBase<F> {
    /// Shifts `λ` so that its last entry is zero.
    pub fn new(frame: Matrix<F>, lambda: Vec<Rational>) -> Result<Self> {
        let n = lambda.len();
        if n == 0 || frame.rows() != n || frame.cols() != n {
            return Err(Error::dims("frame and exponents disagree"));
        }
        let tol = match F::BACKEND {
            Backend::Exact => 0.0,
            Backend::Float => 1e-9,
        };
        if !frame.is_orthogonal(tol) {
            return Err(Error::NotOrthogonal);
        }
        if lambda.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotMonotone("exponents".into()));
        }
        let last = lambda[n - 1].clone();
        let lambda: Vec<Rational> = lambda.into_iter().map(|l| l - last.clone()).collect();
        if lambda[0] == Rational::zero() {
            return Err(Error::invalid("zero velocity: the curve is a point"));
        }
        Ok(GeodesicFromBase { frame, lambda })
    }

    pub fn frame(&self) -> &Matrix<F> {
        &self.frame
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn at(&self, s: f64) -> Matrix<f64> {
        let a = self.frame.to_f64();
        let d: Vec<f64> = self.lambda.iter().map(|l| (l.to_f64() * s).exp()).collect();
        &(&a * &Matrix::diag(&d)) * &a.transpose()
    }

    /// `λ₁ = 1` normalization.
    pub fn velocity(&self) -> VelocityPoint<Rational> {
        let top = self.lambda[0].clone();
        VelocityPoint {
            mu: self.lambda.iter().map(|l| l.clone() / top.clone()).collect(),
        }
    }

    /// Trace-free tangent `A·Λ·Aᵀ` in floating point.
    pub fn tangent(&self) -> Matrix<f64> {
        let a = self.frame.to_f64();
        let l: Vec<f64> = self.lambda.iter().map(|x| x.to_f64()).collect();
        let mean = l.iter().sum::<f64>() / l.len() as f64;
        let centered: Vec<f64> = l.iter().map(|x| x - mean).collect();
        &(&a * &Matrix::diag(&centered)) * &a.transpose()
    }

    pub fn to_f64(&self) -> GeodesicFromBase<f64> {
        GeodesicFromBase {
            frame: self.frame.to_f64(),
            lambda: self.lambda.clone(),
        }
    }
}

pub fn sky_from_geodesic<F: Scalar>(g: &GeodesicFromBase<F>) -> Result<SkyPoint<F>> {
    let dims = multiplicity_breaks(&g.lambda);
    let flag = Flag::from_frame(&g.frame, &dims)?;
    SkyPoint::new(g.velocity(), flag)
}

/// Limit of the geodesics joining the identity to `γ(s) = A·e^{λs}·Aᵀ`:
/// `A = U·B` with `B` upper triangular gives the limit `U·e^{λt}·Uᵀ`.
pub fn connecting_geodesic_limit(a: &Matrix<f64>, lambda: &[Rational]) -> Result<GeodesicFromBase<f64>> {
    let (u, _) = qr(a)?;
    GeodesicFromBase::new(u, lambda.to_vec())
}

/// The flag of [`connecting_geodesic_limit`], computed without
/// orthogonalization, so it is exact for rational `A`.
pub fn connecting_flag<F: Scalar>(a: &Matrix<F>, lambda: &[Rational]) -> Result<Flag<F>> {
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NotMonotone("exponents".into()));
    }
    Flag::from_frame(a, &multiplicity_breaks(lambda))
}

/// Relative position of two complete flags as a permutation `w` (0-based):
/// `w[i]` is the least `j` with `dim(V_{i+1} ∩ W_{j+1}) > dim(V_i ∩ W_{j+1})`.
pub fn relative_position<F: Scalar>(f: &Flag<F>, g: &Flag<F>) -> Result<Vec<usize>> {
    let n = f.ambient();
    if g.ambient() != n {
        return Err(Error::dims("flags in different spaces"));
    }
    if !f.is_complete() || !g.is_complete() {
        return Err(Error::invalid("relative position needs complete flags"));
    }
    let table = intersection_table(f, g)?;
    Ok((1..=n)
        .map(|i| {
            (1..=n)
                .find(|&j| table[i][j] > table[i - 1][j])
                .expect("dimension jumps by one")
                - 1
        })
        .collect())
}

/// `d[i][j] = dim(V_i ∩ W_j)` for `0 ≤ i, j ≤ n`.
fn intersection_table<F: Scalar>(f: &Flag<F>, g: &Flag<F>) -> Result<Vec<Vec<usize>>> {
    let n = f.ambient();
    let chain = |fl: &Flag<F>| {
        let mut c = vec![Subspace::zero(n)];
        c.extend(fl.subspaces.iter().cloned());
        c.push(Subspace::full(n));
        c
    };
    let (vs, ws) = (chain(f), chain(g));
    vs.iter()
        .map(|v| ws.iter().map(|w| Ok(v.intersect(w)?.dim())).collect())
        .collect()
}

/// The trace of a maximal flat on the sky, given by `n` independent lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Apartment<F> {
    frame: Matrix<F>,
}

impl<F: Scalar> Apartment<F> {
    pub fn new(frame: Matrix<F>) -> Result<Self> {
        if !frame.is_square() {
            return Err(Error::dims("frame must be square"));
        }
        if frame.rank(DEFAULT_TOL) != frame.rows() {
            return Err(Error::Singular);
        }
        Ok(Apartment { frame })
    }

    /// Columns are the frame lines.
    pub fn frame(&self) -> &Matrix<F> {
        &self.frame
    }

    pub fn chambers(&self) -> Result<Vec<Flag<F>>> {
        apartment_chambers(&self.frame)
    }
}

/// A frame whose coordinate flags are `f` (in order) and `g` (reordered by
/// the relative position).
pub fn common_apartment<F: Scalar>(f: &Flag<F>, g: &Flag<F>) -> Result<Apartment<F>> {
    let w = relative_position(f, g)?;
    let n = f.ambient();
    let chain = |fl: &Flag<F>| {
        let mut c = vec![Subspace::zero(n)];
        c.extend(fl.subspaces.iter().cloned());
        c.push(Subspace::full(n));
        c
    };
    let (vs, ws) = (chain(f), chain(g));
    let mut cols = Vec::with_capacity(n);
    for i in 1..=n {
        let cand = vs[i].intersect(&ws[w[i - 1] + 1])?;
        let prev = &vs[i - 1];
        let v = match F::BACKEND {
            Backend::Exact => cand
                .basis()
                .iter()
                .find(|b| !prev.contains_vector(b))
                .cloned(),
            Backend::Float => {
                let prev_f = prev.to_f64();
                cand.basis()
                    .iter()
                    .map(|b| {
                        let bf: Vec<f64> = b.iter().map(|x| x.to_f64()).collect();
                        (norm(&residual(&bf, prev_f.basis())), b)
                    })
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, b)| b.clone())
            }
        };
        cols.push(v.ok_or_else(|| Error::RankDeficient("no adapted direction".into()))?);
    }
    Apartment::new(Matrix::from_cols(cols)?)
}

/// All `n!` complete flags obtained by ordering the frame columns.
pub fn apartment_chambers<F: Scalar>(frame: &Matrix<F>) -> Result<Vec<Flag<F>>> {
    let n = frame.cols();
    let cols = frame.to_cols();
    let dims: Vec<usize> = (1..n).collect();
    permutations(n)
        .into_iter()
        .map(|p| {
            let ordered: Vec<Vec<F>> = p.iter().map(|&i| cols[i].clone()).collect();
            Flag::from_frame(&Matrix::from_cols(ordered)?, &dims)
        })
        .collect()
}

/// Permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).expect("exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// The common face of two chambers: the velocity pattern breaks exactly at
/// the indices where the flags agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplexFace {
    pub breaks: Vec<usize>,
    pub dim: usize,
}

/// `None` when the flags share no step.
pub fn simplex_intersection<F: Scalar>(l: &Flag<F>, l2: &Flag<F>) -> Result<Option<SimplexFace>> {
    if !l.is_complete() || !l2.is_complete() || l.ambient() != l2.ambient() {
        return Err(Error::invalid("simplex intersection needs complete flags in one space"));
    }
    let breaks: Vec<usize> = l
        .subspaces
        .iter()
        .zip(&l2.subspaces)
        .filter(|(a, b)| a.same_as(b))
        .map(|(a, _)| a.dim())
        .collect();
    if breaks.is_empty() {
        return Ok(None);
    }
    let dim = breaks.len() - 1;
    Ok(Some(SimplexFace { breaks, dim }))
}

/// Angle at the identity between two geodesics, for the trace form.
pub fn angle_at_base<F: Scalar>(p: &GeodesicFromBase<F>, q: &GeodesicFromBase<F>) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::dims("geodesics in different dimensions"));
    }
    let (x, y) = (p.tangent(), q.tangent());
    let xy = (&x * &y).trace();
    let xx = (&x * &x).trace();
    let yy = (&y * &y).trace();
    if xx <= 0.0 || yy <= 0.0 {
        return Err(Error::invalid("zero tangent"));
    }
    Ok(clamped_acos(xy / (xx * yy).sqrt()))
}

fn clamped_acos(c: f64) -> f64 {
    c.clamp(-1.0, 1.0).acos()
}

/// Tits distance through a common apartment.
pub fn tits_distance<F: Scalar>(p: &SkyPoint<F>, q: &SkyPoint<F>) -> Result<f64> {
    let n = p.n();
    if q.n() != n {
        return Err(Error::dims("sky points in different dimensions"));
    }
    let (fp, fq) = (p.flag.complete(), q.flag.complete());
    let w = relative_position(&fp, &fq)?;
    let x: Vec<Rational> = p.velocity.mu.clone();
    let y: Vec<Rational> = w.iter().map(|&j| q.velocity.mu[j].clone()).collect();
    Ok(clamped_acos(centered_cosine(&x, &y)))
}

fn centered_cosine(x: &[Rational], y: &[Rational]) -> f64 {
    let n = Rational::from_i64(x.len() as i64);
    let center = |v: &[Rational]| {
        let mean = v.iter().cloned().fold(Rational::zero(), |a, b| a + b) / n.clone();
        v.iter().map(|a| a.clone() - mean.clone()).collect::<Vec<_>>()
    };
    let (cx, cy) = (center(x), center(y));
    let ip = |a: &[Rational], b: &[Rational]| {
        a.iter()
            .zip(b)
            .fold(Rational::zero(), |s, (u, v)| s + u.clone() * v.clone())
    };
    let xy = ip(&cx, &cy).to_f64();
    let xx = ip(&cx, &cx).to_f64();
    let yy = ip(&cy, &cy).to_f64();
    xy / (xx * yy).sqrt()
}

/// Edge length of the incidence graph.
pub const EDGE_LENGTH: f64 = PI / 3.0;

/// Lines and planes of `ℚ³` with their incidences.
#[derive(Clone, Debug)]
pub struct IncidenceGraph {
    lines: Vec<Subspace<Rational>>,
    planes: Vec<Subspace<Rational>>,
    /// `(line index, plane index)` with the line inside the plane.
    edges: Vec<(usize, usize)>,
}

/// A vertex of the incidence graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Vertex {
    Line(usize),
    Plane(usize),
}

impl IncidenceGraph {
    pub fn lines(&self) -> &[Subspace<Rational>] {
        &self.lines
    }

    pub fn planes(&self) -> &[Subspace<Rational>] {
        &self.planes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        (0..self.lines.len())
            .map(Vertex::Line)
            .chain((0..self.planes.len()).map(Vertex::Plane))
            .collect()
    }

    pub fn subspace(&self, v: Vertex) -> &Subspace<Rational> {
        match v {
            Vertex::Line(i) => &self.lines[i],
            Vertex::Plane(i) => &self.planes[i],
        }
    }

    /// Number of edges on a shortest path.
    pub fn graph_distance(&self, a: Vertex, b: Vertex) -> Option<usize> {
        let mut adj: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        for &(l, p) in &self.edges {
            adj.entry(Vertex::Line(l)).or_default().push(Vertex::Plane(p));
            adj.entry(Vertex::Plane(p)).or_default().push(Vertex::Line(l));
        }
        let mut dist: BTreeMap<Vertex, usize> = BTreeMap::from([(a, 0)]);
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            if v == b {
                return dist.get(&v).copied();
            }
            let d = dist[&v];
            for &u in adj.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                if !dist.contains_key(&u) {
                    dist.insert(u, d + 1);
                    queue.push_back(u);
                }
            }
        }
        None
    }

    /// The vertex as a sky point: lines have velocity `(1,0,0)`, planes
    /// `(1,1,0)`.
    pub fn sky_point(&self, v: Vertex) -> SkyPoint<Rational> {
        let one = Rational::one;
        let zero = Rational::zero;
        let mu = match v {
            Vertex::Line(_) => vec![one(), zero(), zero()],
            Vertex::Plane(_) => vec![one(), one(), zero()],
        };
        let flag = Flag::new(3, vec![self.subspace(v).clone()]).expect("proper subspace");
        SkyPoint::new(VelocityPoint { mu }, flag).expect("consistent")
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph incidence {\n");
        for (i, l) in self.lines.iter().enumerate() {
            s.push_str(&format!("  L{i} [label=\"{}\"];\n", label(l)));
        }
        for (i, p) in self.planes.iter().enumerate() {
            s.push_str(&format!("  P{i} [shape=box,label=\"{}\"];\n", label(p)));
        }
        for &(l, p) in &self.edges {
            s.push_str(&format!("  L{l} -- P{p};\n"));
        }
        s.push_str("}\n");
        s
    }
}

fn label(s: &Subspace<Rational>) -> String {
    s.basis()
        .iter()
        .map(|b| {
            let parts: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            format!("({})", parts.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Builds the incidence graph on a sample of lines and planes of `ℚ³`,
/// closed once under intersections of planes and spans of lines, so that
/// every pair of sampled vertices is joined by a shortest path of the full
/// building.
pub fn n3_incidence_graph(
    lines: &[Subspace<Rational>],
    planes: &[Subspace<Rational>],
) -> Result<IncidenceGraph> {
    for s in lines {
        if s.ambient() != 3 || s.dim() != 1 {
            return Err(Error::invalid("lines must be 1-dimensional subspaces of Q^3"));
        }
    }
    for s in planes {
        if s.ambient() != 3 || s.dim() != 2 {
            return Err(Error::invalid("planes must be 2-dimensional subspaces of Q^3"));
        }
    }
    let mut all_lines: Vec<Subspace<Rational>> = Vec::new();
    let push = |v: &mut Vec<Subspace<Rational>>, s: Subspace<Rational>| {
        if !v.iter().any(|t| t.same_as(&s)) {
            v.push(s);
        }
    };
    for l in lines {
        push(&mut all_lines, l.clone());
    }
    for (i, a) in planes.iter().enumerate() {
        for b in &planes[i + 1..] {
            let m = a.intersect(b)?;
            if m.dim() == 1 {
                push(&mut all_lines, m);
            }
        }
    }
    let mut all_planes: Vec<Subspace<Rational>> = Vec::new();
    for p in planes {
        push(&mut all_planes, p.clone());
    }
    for (i, a) in all_lines.iter().enumerate() {
        for b in &all_lines[i + 1..] {
            let s = a.sum(b)?;
            if s.dim() == 2 {
                push(&mut all_planes, s);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, l) in all_lines.iter().enumerate() {
        for (j, p) in all_planes.iter().enumerate() {
            if p.contains(l) {
                edges.push((i, j));
            }
        }
    }
    Ok(IncidenceGraph {
        lines: all_lines,
        planes: all_planes,
        edges,
    })
}

/// Shortest-path length in the incidence graph, in radians.
pub fn chain_infimum_on_graph(g: &IncidenceGraph, a: Vertex, b: Vertex) -> Option<f64> {
    g.graph_distance(a, b).map(|d| d as f64 * EDGE_LENGTH)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| qi(x)).collect()
    }

    fn span(vs: &[&[i64]]) -> Subspace<Rational> {
        Subspace::span(vs[0].len(), &vs.iter().map(|x| v(x)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn sky_of_coordinate_geodesics() {
        let g = GeodesicFromBase::new(Matrix::<Rational>::identity(3), v(&[1, 1, 0])).unwrap();
        let p = sky_from_geodesic(&g).unwrap();
        assert_eq!(p.velocity().interior(), &[qi(1)]);
        assert_eq!(p.flag().subspaces(), &[span(&[&[1, 0, 0], &[0, 1, 0]])]);
        let g2 = GeodesicFromBase::new(Matrix::<Rational>::identity(2), v(&[1, 0])).unwrap();
        let p2 = sky_from_geodesic(&g2).unwrap();
        assert!(p2.velocity().interior().is_empty());
        assert_eq!(p2.flag().dims(), vec![1]);
        assert!(GeodesicFromBase::new(Matrix::<Rational>::identity(2), v(&[3, 3])).is_err());
    }

    #[test]
    fn connecting_limit_of_unipotent() {
        let a = Matrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let g = connecting_geodesic_limit(&a, &v(&[1, 0])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [[r, -r], [r, r]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.frame()[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
        let upper = Matrix::from_rows(vec![vec![2.0, 5.0], vec![0.0, 3.0]]).unwrap();
        let g = connecting_geodesic_limit(&upper, &v(&[1, 0])).unwrap();
        assert!(g.frame().sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn relative_positions() {
        let e = Flag::<Rational>::coordinate(3, &[1, 2]).unwrap();
        assert_eq!(relative_position(&e, &e).unwrap(), vec![0, 1, 2]);
        let f2 = Flag::new(2, vec![span(&[&[1, 0]])]).unwrap();
        let g2 = Flag::new(2, vec![span(&[&[0, 1]])]).unwrap();
        assert_eq!(relative_position(&f2, &g2).unwrap(), vec![1, 0]);
        let generic = Flag::new(3, vec![span(&[&[1, 2, 3]]), span(&[&[1, 2, 3], &[4, 5, 7]])]).unwrap();
        assert_eq!(relative_position(&e, &generic).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn apartments() {
        let e = Flag::<Rational>::coordinate(3, &[1, 2]).unwrap();
        let rev = Flag::new(3, vec![span(&[&[0, 0, 1]]), span(&[&[0, 0, 1], &[0, 1, 0]])]).unwrap();
        let ap = common_apartment(&e, &rev).unwrap();
        let chambers = ap.chambers().unwrap();
        assert_eq!(chambers.len(), 6);
        assert!(chambers.contains(&e));
        assert!(chambers.contains(&rev));
        for c in &chambers {
            assert!(c.subspaces()[0].basis().len() == 1);
        }
    }

    #[test]
    fn face_of_two_chambers() {
        let e = Flag::<Rational>::coordinate(3, &[1, 2]).unwrap();
        assert_eq!(
            simplex_intersection(&e, &e).unwrap(),
            Some(SimplexFace { breaks: vec![1, 2], dim: 1 })
        );
        let other = Flag::new(3, vec![span(&[&[0, 1, 0]]), span(&[&[1, 0, 0], &[0, 1, 0]])]).unwrap();
        assert_eq!(
            simplex_intersection(&e, &other).unwrap(),
            Some(SimplexFace { breaks: vec![2], dim: 0 })
        );
        let rev = Flag::new(3, vec![span(&[&[0, 0, 1]]), span(&[&[0, 0, 1], &[0, 1, 0]])]).unwrap();
        assert_eq!(simplex_intersection(&e, &rev).unwrap(), None);
    }

    #[test]
    fn angles_at_base() {
        let id = Matrix::<Rational>::identity(3);
        let a = GeodesicFromBase::new(id.clone(), v(&[1, 0, 0])).unwrap();
        let b = GeodesicFromBase::new(id, v(&[1, 1, 0])).unwrap();
        assert!((angle_at_base(&a, &b).unwrap() - PI / 3.0).abs() < 1e-12);
        assert!(angle_at_base(&a, &a).unwrap().abs() < 1e-7);
        let rot = Matrix::from_rows(vec![vec![qi(0), qi(-1)], vec![qi(1), qi(0)]]).unwrap();
        let c = GeodesicFromBase::new(Matrix::identity(2), v(&[1, 0])).unwrap();
        let d = GeodesicFromBase::new(rot, v(&[1, 0])).unwrap();
        assert!((angle_at_base(&c, &d).unwrap() - PI).abs() < 1e-7);
    }

    #[test]
    fn tits_distances_in_three_space() {
        let line = span(&[&[1, 1, 0]]);
        let plane = span(&[&[1, 1, 0], &[0, 1, 5]]);
        let other_plane = span(&[&[1, 0, 0], &[0, 0, 1]]);
        let g = n3_incidence_graph(&[line.clone()], &[plane, other_plane]).unwrap();
        let l = Vertex::Line(0);
        let p = Vertex::Plane(0);
        let p2 = Vertex::Plane(1);
        let t = |a, b| tits_distance(&g.sky_point(a), &g.sky_point(b)).unwrap();
        assert!((t(l, p) - PI / 3.0).abs() < 1e-12);
        assert!((t(l, p2) - PI).abs() < 1e-12);
        assert!(t(l, l).abs() < 1e-12);
        assert_eq!(chain_infimum_on_graph(&g, l, p), Some(PI / 3.0));
        assert_eq!(g.graph_distance(l, p2), Some(3));
        // Two lines on a common plane.
        let m = g
            .vertices()
            .into_iter()
            .find(|&x| matches!(x, Vertex::Line(i) if i > 0))
            .unwrap();
        assert_eq!(g.graph_distance(l, m), Some(2));
        assert!((t(l, m) - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tits_within_one_chamber_matches_base_angle() {
        let u = Matrix::cayley(&Matrix::from_rows(vec![
            vec![qi(0), q(1, 2), qi(1)],
            vec![q(-1, 2), qi(0), qi(2)],
            vec![qi(-1), qi(-2), qi(0)],
        ])
        .unwrap())
        .unwrap();
        let a = GeodesicFromBase::new(u.clone(), v(&[3, 1, 0])).unwrap();
        let b = GeodesicFromBase::new(u, v(&[2, 2, 0])).unwrap();
        let (pa, pb) = (sky_from_geodesic(&a).unwrap(), sky_from_geodesic(&b).unwrap());
        let tits = tits_distance(&pa, &pb).unwrap();
        assert!((tits - angle_at_base(&a, &b).unwrap()).abs() < 1e-9);
        let back = pa.to_geodesic().unwrap();
        assert_eq!(sky_from_geodesic(&back).unwrap().flag().dims(), pa.flag().dims());
        assert!(sky_from_geodesic(&back).unwrap().flag().angle_distance(&pa.flag().to_f64()).unwrap() < 1e-9);
    }

    #[test]
    fn completion_is_complete() {
        let f = Flag::new(4, vec![span(&[&[1, 1, 0, 0]])]).unwrap();
        let c = f.complete();
        assert!(c.is_complete());
        assert!(c.subspaces()[0].same_as(&f.subspaces()[0]));
        assert_eq!(permutations(4).len(), 24);
    }
}
