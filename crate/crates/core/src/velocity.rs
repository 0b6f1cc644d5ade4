//! Velocity compactifications of the Weyl chamber cone.
//!
//! Sequences are polynomials in `j` with rational coefficients, so every
//! limit below is an exact rational computed from degrees and leading
//! coefficients.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::decomp::eigensym;
use crate::error::{Error, Result};
use crate::satake::SpdPoint;
use crate::scalar::{Rational, Scalar};

fn rzero() -> Rational {
    <Rational as Zero>::zero()
}

/// A polynomial in `j` with rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(d, c)| match d {
                0 => format!("{c}"),
                1 => format!("{c}·j"),
                _ => format!("{c}·j^{d}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Poly::new(vec![c])
    }

    /// `c·j^d`.
    pub fn monomial(c: Rational, d: usize) -> Self {
        let mut v = vec![rzero(); d + 1];
        v[d] = c;
        Poly::new(v)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Rational {
        self.coeffs.last().cloned().unwrap_or_else(rzero)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn constant_term(&self) -> Rational {
        self.coeffs.first().cloned().unwrap_or_else(rzero)
    }

    /// Sign for large `j`.
    pub fn eventual_sign(&self) -> i8 {
        let l = self.leading();
        if l.is_zero() {
            0
        } else if l.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new(
            (0..n)
                .map(|i| {
                    self.coeffs.get(i).cloned().unwrap_or_else(rzero)
                        + other.coeffs.get(i).cloned().unwrap_or_else(rzero)
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c.clone()).collect())
    }

    pub fn eval(&self, j: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(rzero(), |acc, c| acc * j.clone() + c.clone())
    }
}

/// `lim p(j)/q(j)` as `j → ∞`; `None` when it is infinite or `q` vanishes.
pub fn ratio_limit(p: &Poly, q: &Poly) -> Option<Rational> {
    let dq = q.degree()?;
    match p.degree() {
        None => Some(rzero()),
        Some(dp) if dp < dq => Some(rzero()),
        Some(dp) if dp == dq => Some(p.leading() / q.leading()),
        _ => None,
    }
}

/// Sequences `λ_k(j) ≥ … ≥ λ_l(j)` (for large `j`), indexed by `k..=l`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySequence {
    k: usize,
    l: usize,
    polys: Vec<Poly>,
}

impl PolySequence {
    pub fn new(k: usize, l: usize, polys: Vec<Poly>) -> Result<Self> {
        if k > l {
            return Err(Error::invalid(format!("empty interval ({k},{l})")));
        }
        if polys.len() != l - k + 1 {
            return Err(Error::dims(format!(
                "{} polynomials for the interval ({k},{l})",
                polys.len()
            )));
        }
        for (i, w) in polys.windows(2).enumerate() {
            if w[0].sub(&w[1]).eventual_sign() < 0 {
                return Err(Error::NotMonotone(format!(
                    "entry {} eventually exceeds entry {}",
                    k + i + 1,
                    k + i
                )));
            }
        }
        Ok(PolySequence { k, l, polys })
    }

    /// Sequence on `1..=polys.len()`.
    pub fn from_polys(polys: Vec<Poly>) -> Result<Self> {
        let n = polys.len();
        Self::new(1, n.max(1), polys)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Entry at index `i ∈ k..=l`.
    pub fn get(&self, i: usize) -> &Poly {
        &self.polys[i - self.k]
    }

    /// Entries `a..=b` as a sequence of their own.
    pub fn restrict(&self, a: usize, b: usize) -> Result<PolySequence> {
        if a < self.k || b > self.l || a > b {
            return Err(Error::invalid(format!(
                "({a},{b}) is not inside ({},{})",
                self.k, self.l
            )));
        }
        Ok(PolySequence {
            k: a,
            l: b,
            polys: self.polys[a - self.k..=b - self.k].to_vec(),
        })
    }

    /// Adds the same polynomial to every entry.
    pub fn shift(&self, p: &Poly) -> PolySequence {
        PolySequence {
            k: self.k,
            l: self.l,
            polys: self.polys.iter().map(|q| q.add(p)).collect(),
        }
    }
}

/// Logarithms of eigenvalues, descending, normalized so the last is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LogSpectrum<F> {
    pub values: Vec<F>,
}

/// A point of the velocity simplex, stored with `μ₁ = 1` and `μₙ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityPoint<F> {
    pub mu: Vec<F>,
}

impl<F: Scalar> VelocityPoint<F> {
    /// `(μ₂, …, μ_{n−1})`.
    pub fn interior(&self) -> &[F] {
        let n = self.mu.len();
        if n <= 2 {
            &[]
        } else {
            &self.mu[1..n - 1]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VelocityLimit {
    Point(VelocityPoint<Rational>),
    /// `λ₁ − λₙ` stays bounded; the sequence has no boundary limit.
    Bounded,
}

pub fn lambda_map<F: Scalar>(a: &SpdPoint<F>) -> Result<LogSpectrum<f64>> {
    let e = eigensym(&a.matrix().to_f64())?;
    if e.values.iter().any(|&x| x <= 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    let logs: Vec<f64> = e.values.iter().map(|x| x.ln()).collect();
    let last = *logs.last().expect("nonempty");
    Ok(LogSpectrum {
        values: logs.iter().map(|x| x - last).collect(),
    })
}

/// `μ_i = λ_i / λ₁` after normalizing `λₙ = 0`.
pub fn simplex_project<F: Scalar>(s: &LogSpectrum<F>) -> Result<VelocityPoint<F>> {
    let n = s.values.len();
    if n == 0 {
        return Err(Error::invalid("empty spectrum"));
    }
    let last = s.values[n - 1].clone();
    let top = s.values[0].clone() - last.clone();
    let scale = s.values.iter().map(|x| x.magnitude()).fold(0.0, f64::max);
    if top.sign(scale, crate::scalar::DEFAULT_TOL) <= 0 {
        return Err(Error::invalid(
            "constant spectrum: the projection is undefined at the cone origin",
        ));
    }
    Ok(VelocityPoint {
        mu: s
            .values
            .iter()
            .map(|x| (x.clone() - last.clone()) / top.clone())
            .collect(),
    })
}

pub fn simple_velocity_limit(seq: &PolySequence) -> VelocityLimit {
    let last = seq.polys.last().expect("nonempty");
    let top = seq.polys[0].sub(last);
    if top.is_constant() {
        return VelocityLimit::Bounded;
    }
    let mu = seq
        .polys
        .iter()
        .map(|p| ratio_limit(&p.sub(last), &top).expect("entries are bounded by the first"))
        .collect();
    VelocityLimit::Point(VelocityPoint { mu })
}

/// A laminar family of subintervals of `k..=l` (a tree-partition).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreePartition {
    k: usize,
    l: usize,
    members: BTreeSet<(usize, usize)>,
}

impl TreePartition {
    /// Checks the four defining conditions.
    pub fn new(k: usize, l: usize, members: BTreeSet<(usize, usize)>) -> Result<Self> {
        if k > l {
            return Err(Error::invalid(format!("empty interval ({k},{l})")));
        }
        if !members.contains(&(k, l)) {
            return Err(Error::invalid("the whole interval must be a member"));
        }
        for &(a, b) in &members {
            if a > b || a < k || b > l {
                return Err(Error::invalid(format!("({a},{b}) is not a subinterval of ({k},{l})")));
            }
        }
        for &x in &members {
            for &y in &members {
                let disjoint = x.1 < y.0 || y.1 < x.0;
                let nested = contains(x, y) || contains(y, x);
                if !(disjoint || nested) {
                    return Err(Error::invalid(format!("{x:?} and {y:?} overlap")));
                }
            }
        }
        let t = TreePartition { k, l, members };
        for &m in &t.members {
            let ch = t.children(m);
            if !ch.is_empty() {
                let covered: usize = ch.iter().map(|&(a, b)| b - a + 1).sum();
                if covered != m.1 - m.0 + 1 {
                    return Err(Error::invalid(format!(
                        "{m:?} is neither irreducible nor the union of its submembers"
                    )));
                }
            }
        }
        Ok(t)
    }

    pub fn trivial(k: usize, l: usize) -> Self {
        TreePartition {
            k,
            l,
            members: BTreeSet::from([(k, l)]),
        }
    }

    pub fn interval(&self) -> (usize, usize) {
        (self.k, self.l)
    }

    pub fn members(&self) -> &BTreeSet<(usize, usize)> {
        &self.members
    }

    /// Maximal proper submembers of `j`, left to right.
    pub fn children(&self, j: (usize, usize)) -> Vec<(usize, usize)> {
        let inner: Vec<(usize, usize)> = self
            .members
            .iter()
            .copied()
            .filter(|&m| m != j && contains(j, m))
            .collect();
        inner
            .iter()
            .copied()
            .filter(|&m| !inner.iter().any(|&o| o != m && contains(o, m)))
            .collect()
    }

    pub fn is_reducible(&self, j: (usize, usize)) -> bool {
        !self.children(j).is_empty()
    }

    /// The members inside `j`, as a tree-partition of `j`.
    pub fn subtree(&self, j: (usize, usize)) -> TreePartition {
        TreePartition {
            k: j.0,
            l: j.1,
            members: self.members.iter().copied().filter(|&m| contains(j, m)).collect(),
        }
    }

    /// `self > other` in the canonical order: every member of `self` is a
    /// member of `other`.
    pub fn greater_than(&self, other: &TreePartition) -> bool {
        self.interval() == other.interval()
            && self.members != other.members
            && self.members.is_subset(&other.members)
    }
}

fn contains(outer: (usize, usize), inner: (usize, usize)) -> bool {
    outer.0 <= inner.0 && inner.1 <= outer.1
}

/// All tree-partitions of `k..=l`, without duplicates.
pub fn enumerate_tree_partitions(k: usize, l: usize) -> Result<Vec<TreePartition>> {
    if k > l {
        return Err(Error::invalid(format!("empty interval ({k},{l})")));
    }
    let mut out: Vec<TreePartition> = member_sets(k, l)
        .into_iter()
        .map(|members| TreePartition { k, l, members })
        .collect();
    out.sort();
    Ok(out)
}

fn member_sets(k: usize, l: usize) -> Vec<BTreeSet<(usize, usize)>> {
    let mut out = vec![BTreeSet::from([(k, l)])];
    if k == l {
        return out;
    }
    // Each composition of k..=l into at least two consecutive parts.
    let gaps = l - k;
    for mask in 1u64..(1u64 << gaps) {
        let mut parts = Vec::new();
        let mut start = k;
        for g in 0..gaps {
            if mask & (1 << g) != 0 {
                parts.push((start, k + g));
                start = k + g + 1;
            }
        }
        parts.push((start, l));
        let mut acc: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::from([(k, l)])];
        for &(a, b) in &parts {
            let subs = member_sets(a, b);
            acc = acc
                .iter()
                .flat_map(|base| {
                    subs.iter().map(move |s| {
                        let mut m = base.clone();
                        m.extend(s.iter().copied());
                        m
                    })
                })
                .collect();
        }
        out.extend(acc);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    /// `Σ(J)` for an irreducible member.
    Cone,
    /// The open simplex of a reducible member's canonical decomposition.
    OpenSimplex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceFactor {
    pub member: (usize, usize),
    pub kind: FactorKind,
    pub dim: usize,
}

/// The product structure of a face `F(𝔞)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceDescriptor {
    pub factors: Vec<FaceFactor>,
    pub dim: usize,
}

impl FaceDescriptor {
    /// A short name for low-dimensional faces.
    pub fn shape(&self) -> String {
        let cones: Vec<&FaceFactor> = self
            .factors
            .iter()
            .filter(|f| f.kind == FactorKind::Cone && f.dim > 0)
            .collect();
        match (self.dim, cones.len()) {
            (0, _) => "point".into(),
            (1, 1) => "half-line".into(),
            (1, 0) => "open segment".into(),
            (d, 0) => format!("open {d}-simplex"),
            (d, _) => format!("{d}-dimensional product"),
        }
    }
}

pub fn face_of(tree: &TreePartition) -> FaceDescriptor {
    let factors: Vec<FaceFactor> = tree
        .members
        .iter()
        .map(|&m| {
            let ch = tree.children(m);
            if ch.is_empty() {
                FaceFactor {
                    member: m,
                    kind: FactorKind::Cone,
                    dim: m.1 - m.0,
                }
            } else {
                FaceFactor {
                    member: m,
                    kind: FactorKind::OpenSimplex,
                    dim: ch.len() - 2,
                }
            }
        })
        .collect();
    let dim = factors.iter().map(|f| f.dim).sum();
    FaceDescriptor { factors, dim }
}

/// Whether `F(a)` lies in the closure of `F(b)`, i.e. `a ≤ b`.
pub fn face_closure_leq(a: &TreePartition, b: &TreePartition) -> Result<bool> {
    if a.interval() != b.interval() {
        return Err(Error::invalid("trees over different intervals"));
    }
    Ok(b.members.is_subset(&a.members))
}

/// Limit data attached to one member of the limit tree.
#[derive(Clone, Debug, PartialEq)]
pub enum NodeValue {
    /// Velocity limit `1 = μ_a ≥ … ≥ μ_b = 0` over the member's indices.
    Simplex(Vec<Rational>),
    /// A cone point `λ_a ≥ … ≥ λ_b = 0` (bounded differences).
    Cone(Vec<Rational>),
}

/// A point of the Karpelevich polyhedron as a tree of limit data.
#[derive(Clone, Debug, PartialEq)]
pub struct KarpelevichPoint {
    pub interval: (usize, usize),
    pub value: NodeValue,
    pub children: Vec<KarpelevichPoint>,
}

impl KarpelevichPoint {
    pub fn tree(&self) -> TreePartition {
        let mut members = BTreeSet::new();
        self.collect(&mut members);
        TreePartition {
            k: self.interval.0,
            l: self.interval.1,
            members,
        }
    }

    fn collect(&self, out: &mut BTreeSet<(usize, usize)>) {
        out.insert(self.interval);
        for c in &self.children {
            c.collect(out);
        }
    }

    /// The node for `member`, if present.
    pub fn find(&self, member: (usize, usize)) -> Option<&KarpelevichPoint> {
        if self.interval == member {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(member))
    }

    pub fn is_interior(&self) -> bool {
        matches!(self.value, NodeValue::Cone(_)) && self.children.is_empty()
    }
}

pub fn karpelevich_limit(seq: &PolySequence) -> KarpelevichPoint {
    let (a, b) = (seq.k, seq.l);
    let last = seq.polys.last().expect("nonempty");
    let top = seq.polys[0].sub(last);
    if top.is_constant() {
        return KarpelevichPoint {
            interval: (a, b),
            value: NodeValue::Cone(
                seq.polys
                    .iter()
                    .map(|p| p.sub(last).constant_term())
                    .collect(),
            ),
            children: Vec::new(),
        };
    }
    let mu: Vec<Rational> = seq
        .polys
        .iter()
        .map(|p| ratio_limit(&p.sub(last), &top).expect("entries are bounded by the first"))
        .collect();
    let children = equal_runs(&mu)
        .into_iter()
        .map(|(s, e)| karpelevich_limit(&seq.restrict(a + s, a + e).expect("inside")))
        .collect();
    KarpelevichPoint {
        interval: (a, b),
        value: NodeValue::Simplex(mu),
        children,
    }
}

/// Maximal runs of equal values, as inclusive offset pairs.
fn equal_runs(values: &[Rational]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some((s, e)) if values[*s] == *v => *e = i,
            _ => out.push((i, i)),
        }
    }
    out
}

/// A sequence of points in one face `F(𝔞)`.
///
/// Irreducible members carry their `Σ(J)` coordinates; reducible members
/// carry one entry per child of their canonical decomposition, whose
/// normalization gives the open-simplex point.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceSequence {
    pub tree: TreePartition,
    pub components: std::collections::BTreeMap<(usize, usize), PolySequence>,
}

impl FaceSequence {
    pub fn new(
        tree: TreePartition,
        components: std::collections::BTreeMap<(usize, usize), PolySequence>,
    ) -> Result<Self> {
        for &m in tree.members() {
            let Some(c) = components.get(&m) else {
                return Err(Error::invalid(format!("no data for member {m:?}")));
            };
            let ch = tree.children(m);
            if ch.is_empty() {
                if c.len() != m.1 - m.0 + 1 {
                    return Err(Error::dims(format!(
                        "member {m:?} needs {} coordinates",
                        m.1 - m.0 + 1
                    )));
                }
            } else {
                if c.len() != ch.len() {
                    return Err(Error::dims(format!(
                        "member {m:?} needs one entry per child ({})",
                        ch.len()
                    )));
                }
                for w in c.polys().windows(2) {
                    if w[0].sub(&w[1]).eventual_sign() <= 0 {
                        return Err(Error::invalid(format!(
                            "member {m:?}: simplex entries must be strictly decreasing"
                        )));
                    }
                }
            }
        }
        if components.keys().any(|k| !tree.members().contains(k)) {
            return Err(Error::invalid("data for a non-member"));
        }
        Ok(FaceSequence { tree, components })
    }

    /// The constant sequence at a point of the polyhedron.
    pub fn constant_at(p: &KarpelevichPoint) -> Result<Self> {
        let tree = p.tree();
        let mut components = std::collections::BTreeMap::new();
        fill_constant(p, &mut components)?;
        Self::new(tree, components)
    }
}

fn fill_constant(
    p: &KarpelevichPoint,
    out: &mut std::collections::BTreeMap<(usize, usize), PolySequence>,
) -> Result<()> {
    let (a, b) = p.interval;
    let seq = match &p.value {
        NodeValue::Cone(v) => PolySequence::new(a, b, v.iter().cloned().map(Poly::constant).collect())?,
        NodeValue::Simplex(mu) => {
            let polys = p
                .children
                .iter()
                .map(|c| Poly::constant(mu[c.interval.0 - a].clone()))
                .collect();
            PolySequence::new(1, p.children.len(), polys)?
        }
    };
    out.insert(p.interval, seq);
    for c in &p.children {
        fill_constant(c, out)?;
    }
    Ok(())
}

/// Limit of a sequence of boundary points lying in one face.
pub fn boundary_face_sequence_limit(seq: &FaceSequence) -> Result<KarpelevichPoint> {
    face_limit(&seq.tree, &seq.components, seq.tree.interval())
}

fn face_limit(
    tree: &TreePartition,
    comps: &std::collections::BTreeMap<(usize, usize), PolySequence>,
    member: (usize, usize),
) -> Result<KarpelevichPoint> {
    let data = comps
        .get(&member)
        .ok_or_else(|| Error::invalid(format!("no data for member {member:?}")))?;
    let children = tree.children(member);
    if children.is_empty() {
        let re = PolySequence::new(member.0, member.1, data.polys().to_vec())?;
        return Ok(karpelevich_limit(&re));
    }
    // First step: the simplex component in the closed simplex.
    let last = data.polys().last().expect("nonempty");
    let top = data.polys()[0].sub(last);
    let u: Vec<Rational> = data
        .polys()
        .iter()
        .map(|p| {
            ratio_limit(&p.sub(last), &top).ok_or_else(|| Error::Divergence {
                step: 1,
                detail: format!("simplex component of {member:?} does not converge"),
            })
        })
        .collect::<Result<_>>()?;
    // Second step: group children with equal limits.
    let mut nodes = Vec::new();
    for (s, e) in equal_runs(&u) {
        if s == e {
            let c = children[s];
            nodes.push(face_limit(tree, comps, c)?);
        } else {
            let block = (children[s].0, children[e].1);
            let mut sub_members: BTreeSet<(usize, usize)> = BTreeSet::from([block]);
            for &c in &children[s..=e] {
                sub_members.extend(tree.subtree(c).members().iter().copied());
            }
            let sub_tree = TreePartition {
                k: block.0,
                l: block.1,
                members: sub_members,
            };
            let mut sub_comps = comps.clone();
            sub_comps.insert(
                block,
                PolySequence::new(1, e - s + 1, data.polys()[s..=e].to_vec())?,
            );
            nodes.push(face_limit(&sub_tree, &sub_comps, block)?);
        }
    }
    let mut mu = Vec::with_capacity(member.1 - member.0 + 1);
    for (c, uc) in children.iter().zip(&u) {
        for _ in c.0..=c.1 {
            mu.push(uc.clone());
        }
    }
    Ok(KarpelevichPoint {
        interval: member,
        value: NodeValue::Simplex(mu),
        children: nodes,
    })
}

/// Parses integer coefficient lists, mostly for tests and examples.
pub fn poly_i64(coeffs: &[i64]) -> Poly {
    Poly::new(coeffs.iter().map(|&c| Rational::from_i64(c)).collect())
}
