//! JSON encodings of the library's objects.
//!
//! Exact scalars are written as canonical `"p/q"` strings and floats as
//! numbers. Object keys come out sorted because `serde_json` maps are
//! ordered.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geodesic_space::{OrientedGeodesic, PathDescriptor, StabilizerDescriptor, StratumDescriptor};
use crate::hinge::{validate_hinge, CartanPath, Hinge, NumericHingeEstimate};
use crate::hybrid::{DynkinOlshanetskyPoint, HybridInput, KarpelevichCompactificationPoint, SkyProjectionData};
use crate::matrix::Matrix;
use crate::relation::{Classification, InducedOperator, LinearRelation, QuadraticFormOnQuotient, RelationParts};
use crate::satake::{SatakeBoundaryPoint, SpdPoint, StepForm};
use crate::scalar::{Rational, Scalar};
use crate::sky::{Flag, GeodesicFromBase, IncidenceGraph, SkyPoint};
use crate::subspace::Subspace;
use crate::velocity::{
    FaceDescriptor, FactorKind, KarpelevichPoint, LogSpectrum, NodeValue, Poly, PolySequence, TreePartition,
    VelocityPoint,
};

pub trait ToJson {
    fn to_json(&self) -> Value;
}

pub trait FromJson: Sized {
    fn from_json(v: &Value) -> Result<Self>;
}

fn schema(detail: impl Into<String>) -> Error {
    Error::Parse(detail.into())
}

pub fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| schema(format!("missing field \"{key}\"")))
}

pub fn usize_of(v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(format!("expected a nonnegative integer, found {v}")))
}

pub fn usize_field(v: &Value, key: &str) -> Result<usize> {
    usize_of(field(v, key)?)
}

pub fn array_of<'a>(v: &'a Value) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(format!("expected an array, found {v}")))
}

pub fn scalars_to_json<F: Scalar>(xs: &[F]) -> Value {
    Value::Array(xs.iter().map(Scalar::to_json).collect())
}

pub fn scalars_from_json<F: Scalar>(v: &Value) -> Result<Vec<F>> {
    array_of(v)?.iter().map(F::from_json).collect()
}

pub fn rationals_to_json(xs: &[Rational]) -> Value {
    scalars_to_json(xs)
}

pub fn rationals_from_json(v: &Value) -> Result<Vec<Rational>> {
    scalars_from_json(v)
}

fn vectors_to_json<F: Scalar>(vs: &[Vec<F>]) -> Value {
    Value::Array(vs.iter().map(|v| scalars_to_json(v)).collect())
}

fn vectors_from_json<F: Scalar>(v: &Value) -> Result<Vec<Vec<F>>> {
    array_of(v)?.iter().map(scalars_from_json).collect()
}

fn list_to_json<T: ToJson>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(ToJson::to_json).collect())
}

fn list_from_json<T: FromJson>(v: &Value) -> Result<Vec<T>> {
    array_of(v)?.iter().map(T::from_json).collect()
}

/// Whether every number in `v` can be read exactly (integers and quoted
/// rationals only).
pub fn is_exact_document(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.is_i64() || n.is_u64(),
        Value::Array(xs) => xs.iter().all(is_exact_document),
        Value::Object(m) => m.values().all(is_exact_document),
        _ => true,
    }
}

/// Rounds every float in `v` to `digits` significant digits; integers are
/// left alone.
pub fn round_floats(v: &Value, digits: usize) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let s = format!("{:.*e}", digits.saturating_sub(1), x);
            let r: f64 = s.parse().unwrap_or(x);
            let r = if r == 0.0 { 0.0 } else { r };
            serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(xs) => Value::Array(xs.iter().map(|x| round_floats(x, digits)).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, x)| (k.clone(), round_floats(x, digits))).collect()),
        other => other.clone(),
    }
}

impl<F: Scalar> ToJson for Matrix<F> {
    fn to_json(&self) -> Value {
        json!({"rows": self.rows(), "cols": self.cols(), "data": vectors_to_json(&self.to_rows())})
    }
}

impl<F: Scalar> FromJson for Matrix<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let rows = usize_field(v, "rows")?;
        let cols = usize_field(v, "cols")?;
        let data: Vec<Vec<F>> = vectors_from_json(field(v, "data")?)?;
        if data.len() != rows || data.iter().any(|r| r.len() != cols) {
            return Err(schema(format!("matrix data is not {rows}×{cols}")));
        }
        Matrix::new(rows, cols, data.into_iter().flatten().collect())
    }
}

impl<F: Scalar> ToJson for Subspace<F> {
    fn to_json(&self) -> Value {
        json!({"ambient": self.ambient(), "basis": vectors_to_json(self.basis())})
    }
}

impl<F: Scalar> FromJson for Subspace<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let ambient = usize_field(v, "ambient")?;
        let basis: Vec<Vec<F>> = vectors_from_json(field(v, "basis")?)?;
        if basis.iter().any(|b| b.len() != ambient) {
            return Err(schema(format!("basis vectors must have length {ambient}")));
        }
        Subspace::span(ambient, &basis)
    }
}

impl<F: Scalar> ToJson for LinearRelation<F> {
    fn to_json(&self) -> Value {
        let mut m = object(self.space().to_json());
        m.insert("n".into(), json!(self.n()));
        Value::Object(m)
    }
}

impl<F: Scalar> FromJson for LinearRelation<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let n = usize_field(v, "n")?;
        LinearRelation::new(n, Subspace::from_json(v)?)
    }
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

impl<F: Scalar> ToJson for RelationParts<F> {
    fn to_json(&self) -> Value {
        json!({
            "kernel": self.kernel.to_json(),
            "image": self.image.to_json(),
            "domain": self.domain.to_json(),
            "indeterminacy": self.indef.to_json(),
            "rank": self.rank,
        })
    }
}

impl ToJson for Classification {
    fn to_json(&self) -> Value {
        json!({"is_symmetric": self.is_symmetric, "is_nonnegative": self.is_nonnegative})
    }
}

impl<F: Scalar> ToJson for InducedOperator<F> {
    fn to_json(&self) -> Value {
        json!({
            "source_basis": vectors_to_json(&self.source_basis),
            "target_basis": vectors_to_json(&self.target_basis),
            "matrix": self.matrix.to_json(),
        })
    }
}

impl<F: Scalar> ToJson for QuadraticFormOnQuotient<F> {
    fn to_json(&self) -> Value {
        json!({
            "base": self.base.to_json(),
            "modulo": self.modulo.to_json(),
            "basis": vectors_to_json(&self.basis),
            "gram": self.gram.to_json(),
        })
    }
}

impl<F: Scalar> ToJson for Hinge<F> {
    fn to_json(&self) -> Value {
        let comps: Vec<Value> = self.components().iter().map(|c| c.space().to_json()).collect();
        json!({"n": self.n(), "components": comps})
    }
}

impl<F: Scalar> FromJson for Hinge<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let n = usize_field(v, "n")?;
        let comps = array_of(field(v, "components")?)?
            .iter()
            .map(|c| LinearRelation::new(n, Subspace::from_json(c)?))
            .collect::<Result<Vec<_>>>()?;
        validate_hinge(comps)
    }
}

impl<F: Scalar> ToJson for CartanPath<F> {
    fn to_json(&self) -> Value {
        json!({"g1": self.g1().to_json(), "lambda": rationals_to_json(self.lambda()), "g2": self.g2().to_json()})
    }
}

impl<F: Scalar> FromJson for CartanPath<F> {
    fn from_json(v: &Value) -> Result<Self> {
        CartanPath::new(
            Matrix::from_json(field(v, "g1")?)?,
            rationals_from_json(field(v, "lambda")?)?,
            Matrix::from_json(field(v, "g2")?)?,
        )
    }
}

impl ToJson for NumericHingeEstimate {
    fn to_json(&self) -> Value {
        json!({
            "hinge": self.hinge.to_json(),
            "slopes": scalars_to_json(&self.slopes),
            "clusters": self.clusters,
            "residual": self.residual,
        })
    }
}

impl<F: Scalar> ToJson for SpdPoint<F> {
    fn to_json(&self) -> Value {
        self.matrix().to_json()
    }
}

impl<F: Scalar> FromJson for SpdPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        SpdPoint::new(Matrix::from_json(v)?)
    }
}

impl<F: Scalar> ToJson for SatakeBoundaryPoint<F> {
    fn to_json(&self) -> Value {
        let forms: Vec<Value> = self
            .forms
            .iter()
            .map(|f| json!({"basis": vectors_to_json(&f.basis), "gram": f.gram.to_json()}))
            .collect();
        json!({"n": self.n, "flag": list_to_json(&self.flag), "forms": forms})
    }
}

impl<F: Scalar> FromJson for SatakeBoundaryPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let flag: Vec<Subspace<F>> = list_from_json(field(v, "flag")?)?;
        let n = match v.get("n") {
            Some(n) => usize_of(n)?,
            None => flag
                .first()
                .map(|s| s.ambient())
                .ok_or_else(|| schema("an empty flag needs \"n\""))?,
        };
        let forms = array_of(field(v, "forms")?)?
            .iter()
            .map(|f| {
                Ok(StepForm {
                    basis: vectors_from_json(field(f, "basis")?)?,
                    gram: Matrix::from_json(field(f, "gram")?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SatakeBoundaryPoint { n, flag, forms })
    }
}

impl ToJson for Poly {
    fn to_json(&self) -> Value {
        rationals_to_json(self.coeffs())
    }
}

impl FromJson for Poly {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(Poly::new(rationals_from_json(v)?))
    }
}

impl ToJson for PolySequence {
    fn to_json(&self) -> Value {
        json!({"k": self.k(), "l": self.l(), "polys": list_to_json(self.polys())})
    }
}

impl FromJson for PolySequence {
    fn from_json(v: &Value) -> Result<Self> {
        let polys: Vec<Poly> = list_from_json(field(v, "polys")?)?;
        match v.get("k") {
            Some(k) => {
                let k = usize_of(k)?;
                let l = usize_field(v, "l")?;
                PolySequence::new(k, l, polys)
            }
            None => PolySequence::from_polys(polys),
        }
    }
}

fn pair_to_json(p: (usize, usize)) -> Value {
    json!([p.0, p.1])
}

fn pair_from_json(v: &Value) -> Result<(usize, usize)> {
    let a = array_of(v)?;
    if a.len() != 2 {
        return Err(schema(format!("expected an index pair, found {v}")));
    }
    Ok((usize_of(&a[0])?, usize_of(&a[1])?))
}

impl ToJson for TreePartition {
    fn to_json(&self) -> Value {
        let (k, l) = self.interval();
        let members: Vec<Value> = self.members().iter().map(|&m| pair_to_json(m)).collect();
        json!({"k": k, "l": l, "members": members})
    }
}

impl FromJson for TreePartition {
    fn from_json(v: &Value) -> Result<Self> {
        let members = array_of(field(v, "members")?)?
            .iter()
            .map(pair_from_json)
            .collect::<Result<BTreeSet<_>>>()?;
        TreePartition::new(usize_field(v, "k")?, usize_field(v, "l")?, members)
    }
}

impl ToJson for FaceDescriptor {
    fn to_json(&self) -> Value {
        let factors: Vec<Value> = self
            .factors
            .iter()
            .map(|f| {
                let kind = match f.kind {
                    FactorKind::Cone => "cone",
                    FactorKind::OpenSimplex => "open-simplex",
                };
                json!({"member": pair_to_json(f.member), "kind": kind, "dim": f.dim})
            })
            .collect();
        json!({"dim": self.dim, "shape": self.shape(), "factors": factors})
    }
}

impl ToJson for KarpelevichPoint {
    fn to_json(&self) -> Value {
        let (kind, values) = match &self.value {
            NodeValue::Simplex(v) => ("simplex", v),
            NodeValue::Cone(v) => ("cone", v),
        };
        json!({
            "interval": pair_to_json(self.interval),
            "kind": kind,
            "values": rationals_to_json(values),
            "children": list_to_json(&self.children),
        })
    }
}

impl FromJson for KarpelevichPoint {
    fn from_json(v: &Value) -> Result<Self> {
        let values = rationals_from_json(field(v, "values")?)?;
        let value = match field(v, "kind")?.as_str() {
            Some("simplex") => NodeValue::Simplex(values),
            Some("cone") => NodeValue::Cone(values),
            _ => return Err(schema("node kind must be \"simplex\" or \"cone\"")),
        };
        Ok(KarpelevichPoint {
            interval: pair_from_json(field(v, "interval")?)?,
            value,
            children: list_from_json(field(v, "children")?)?,
        })
    }
}

impl<F: Scalar> ToJson for VelocityPoint<F> {
    fn to_json(&self) -> Value {
        json!({"mu": scalars_to_json(&self.mu)})
    }
}

impl<F: Scalar> FromJson for VelocityPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(VelocityPoint {
            mu: scalars_from_json(field(v, "mu")?)?,
        })
    }
}

impl<F: Scalar> ToJson for LogSpectrum<F> {
    fn to_json(&self) -> Value {
        json!({"values": scalars_to_json(&self.values)})
    }
}

impl<F: Scalar> ToJson for Flag<F> {
    fn to_json(&self) -> Value {
        json!({"ambient": self.ambient(), "subspaces": list_to_json(self.subspaces())})
    }
}

impl<F: Scalar> FromJson for Flag<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Flag::new(usize_field(v, "ambient")?, list_from_json(field(v, "subspaces")?)?)
    }
}

impl<F: Scalar> ToJson for SkyPoint<F> {
    fn to_json(&self) -> Value {
        json!({"flag": self.flag().to_json(), "mu": rationals_to_json(&self.velocity().mu)})
    }
}

impl<F: Scalar> FromJson for SkyPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        SkyPoint::new(
            VelocityPoint {
                mu: rationals_from_json(field(v, "mu")?)?,
            },
            Flag::from_json(field(v, "flag")?)?,
        )
    }
}

impl<F: Scalar> ToJson for GeodesicFromBase<F> {
    fn to_json(&self) -> Value {
        json!({"frame": self.frame().to_json(), "lambda": rationals_to_json(self.lambda())})
    }
}

impl<F: Scalar> FromJson for GeodesicFromBase<F> {
    fn from_json(v: &Value) -> Result<Self> {
        GeodesicFromBase::new(
            Matrix::from_json(field(v, "frame")?)?,
            rationals_from_json(field(v, "lambda")?)?,
        )
    }
}

impl ToJson for IncidenceGraph {
    fn to_json(&self) -> Value {
        let edges: Vec<Value> = self.edges().iter().map(|&e| pair_to_json(e)).collect();
        json!({"lines": list_to_json(self.lines()), "planes": list_to_json(self.planes()), "edges": edges})
    }
}

impl<F: Scalar> ToJson for HybridInput<F> {
    fn to_json(&self) -> Value {
        json!({"frame": self.frame().to_json(), "exponents": self.exponents().to_json()})
    }
}

impl<F: Scalar> FromJson for HybridInput<F> {
    fn from_json(v: &Value) -> Result<Self> {
        HybridInput::new(
            Matrix::from_json(field(v, "frame")?)?,
            PolySequence::from_json(field(v, "exponents")?)?,
        )
    }
}

impl<F: Scalar> ToJson for DynkinOlshanetskyPoint<F> {
    fn to_json(&self) -> Value {
        json!({"hinge": self.hinge().to_json(), "mu": rationals_to_json(self.mu())})
    }
}

impl<F: Scalar> FromJson for DynkinOlshanetskyPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        DynkinOlshanetskyPoint::new(
            Hinge::from_json(field(v, "hinge")?)?,
            rationals_from_json(field(v, "mu")?)?,
        )
    }
}

impl<F: Scalar> ToJson for SkyProjectionData<F> {
    fn to_json(&self) -> Value {
        json!({"kernels": list_to_json(&self.kernels), "tau": rationals_to_json(&self.tau)})
    }
}

impl<F: Scalar> FromJson for SkyProjectionData<F> {
    fn from_json(v: &Value) -> Result<Self> {
        Ok(SkyProjectionData {
            kernels: list_from_json(field(v, "kernels")?)?,
            tau: rationals_from_json(field(v, "tau")?)?,
        })
    }
}

impl<F: Scalar> ToJson for KarpelevichCompactificationPoint<F> {
    fn to_json(&self) -> Value {
        json!({"hinge": self.hinge().to_json(), "kpoint": self.kpoint().to_json()})
    }
}

impl<F: Scalar> FromJson for KarpelevichCompactificationPoint<F> {
    fn from_json(v: &Value) -> Result<Self> {
        KarpelevichCompactificationPoint::new(
            Hinge::from_json(field(v, "hinge")?)?,
            KarpelevichPoint::from_json(field(v, "kpoint")?)?,
        )
    }
}

impl ToJson for StratumDescriptor {
    fn to_json(&self) -> Value {
        json!({"n": self.n(), "breaks": self.breaks()})
    }
}

impl FromJson for StratumDescriptor {
    fn from_json(v: &Value) -> Result<Self> {
        let breaks = array_of(field(v, "breaks")?)?
            .iter()
            .map(usize_of)
            .collect::<Result<Vec<_>>>()?;
        StratumDescriptor::new(usize_field(v, "n")?, breaks)
    }
}

impl ToJson for StabilizerDescriptor {
    fn to_json(&self) -> Value {
        json!({"factors": self.factors, "dim": self.dim})
    }
}

impl<F: Scalar> ToJson for OrientedGeodesic<F> {
    fn to_json(&self) -> Value {
        json!({
            "point": self.point().to_json(),
            "frame": self.frame().to_json(),
            "lambda": rationals_to_json(self.lambda()),
        })
    }
}

impl FromJson for OrientedGeodesic<f64> {
    fn from_json(v: &Value) -> Result<Self> {
        OrientedGeodesic::from_parts(
            SpdPoint::from_json(field(v, "point")?)?,
            Matrix::from_json(field(v, "frame")?)?,
            &rationals_from_json(field(v, "lambda")?)?,
        )
    }
}

impl<F: Scalar> FromJson for PathDescriptor<F> {
    fn from_json(v: &Value) -> Result<Self> {
        let drift = match v.get("drift") {
            None | Some(Value::Null) => None,
            Some(d) => Some(Matrix::from_json(d)?),
        };
        PathDescriptor::new(
            Matrix::from_json(field(v, "m")?)?,
            drift,
            Matrix::from_json(field(v, "frame")?)?,
            rationals_from_json(field(v, "lambda")?)?,
        )
    }
}

impl<F: Scalar> ToJson for PathDescriptor<F> {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("m".into(), self.m().to_json());
        if let Some(d) = self.drift() {
            m.insert("drift".into(), d.to_json());
        }
        m.insert("frame".into(), self.frame().to_json());
        m.insert("lambda".into(), rationals_to_json(self.lambda()));
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};

    #[test]
    fn matrix_round_trip_exact_and_float() {
        let m = Matrix::from_rows(vec![vec![q(1, 2), qi(-3)], vec![qi(0), q(7, 3)]]).unwrap();
        let v = m.to_json();
        assert_eq!(v["data"][0][0], json!("1/2"));
        assert_eq!(Matrix::<Rational>::from_json(&v).unwrap(), m);
        let f = m.to_f64();
        assert_eq!(Matrix::<f64>::from_json(&f.to_json()).unwrap(), f);
        assert!(is_exact_document(&v));
        assert!(!is_exact_document(&f.to_json()));
    }

    #[test]
    fn schema_errors_are_parse_errors() {
        let bad = json!({"rows": 2, "cols": 2, "data": [["1"]]});
        assert!(matches!(Matrix::<Rational>::from_json(&bad), Err(Error::Parse(_))));
        assert!(matches!(Matrix::<Rational>::from_json(&json!({})), Err(Error::Parse(_))));
        assert!(matches!(Matrix::<Rational>::from_json(&json!({"rows":1,"cols":1,"data":[[0.5]]})), Err(Error::Parse(_))));
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        let v = json!({"a": std::f64::consts::PI, "b": 3, "c": [1e-20, -0.0]});
        let r = round_floats(&v, 12);
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"a":3.14159265359,"b":3,"c":[1e-20,0.0]}"#);
    }
}
