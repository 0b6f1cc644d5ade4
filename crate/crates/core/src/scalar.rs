//! Scalar backends.
//!
//! Two fields are supported: exact rationals ([`Rational`], arbitrary precision)
//! and `f64`. Every container in this crate is generic over [`Scalar`], so a
//! matrix or subspace always carries a single backend and mixing the two is a
//! type error rather than a silent conversion. The runtime tag [`Backend`] is
//! used where inputs arrive as JSON and the backend has to be chosen late.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

/// Default relative tolerance for floating-point rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => f.write_str("exact"),
            Backend::Float => f.write_str("float"),
        }
    }
}

/// A field element usable as a matrix entry.
///
/// Sign and zero decisions go through [`Scalar::is_negligible`] and
/// [`Scalar::sign`], which are exact for rationals and tolerance based for
/// floats. `scale` is the magnitude of the surrounding data, so float
/// decisions are relative.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const BACKEND: Backend;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(q: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact for rationals (every finite double is a dyadic rational).
    fn from_f64(x: f64) -> Self;

    /// `|self|` as a float, used for pivot selection.
    fn magnitude(&self) -> f64;

    fn is_negligible(&self, scale: f64, tol: f64) -> bool;

    /// -1, 0 or 1, with zero decided by [`Scalar::is_negligible`].
    fn sign(&self, scale: f64, tol: f64) -> i8;

    /// `e^q` when it is representable in this field.
    ///
    /// Rationals only represent `e^0`.
    fn exp_of(q: &Rational) -> Option<Self>;

    /// Exact square root when representable (floats always).
    fn sqrt_of(&self) -> Option<Self>;

    fn abs(&self) -> Self {
        if self.sign(1.0, 0.0) < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn to_json(&self) -> Value;

    /// Decode one JSON entry. `"p/q"` strings are accepted by both backends;
    /// non-integral JSON numbers only by the float backend.
    fn from_json(v: &Value) -> Result<Self>;
}

impl Scalar for Rational {
    const BACKEND: Backend = Backend::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Self {
        Rational::from_float(x).unwrap_or_default()
    }
    fn magnitude(&self) -> f64 {
        ToPrimitive::to_f64(&Signed::abs(self)).unwrap_or(f64::INFINITY)
    }
    fn is_negligible(&self, _scale: f64, _tol: f64) -> bool {
        Zero::is_zero(self)
    }
    fn sign(&self, _scale: f64, _tol: f64) -> i8 {
        if Zero::is_zero(self) {
            0
        } else if Signed::is_positive(self) {
            1
        } else {
            -1
        }
    }
    fn exp_of(q: &Rational) -> Option<Self> {
        if Zero::is_zero(q) {
            Some(One::one())
        } else {
            None
        }
    }
    fn sqrt_of(&self) -> Option<Self> {
        if Signed::is_negative(self) {
            return None;
        }
        let n = self.numer().sqrt();
        let d = self.denom().sqrt();
        if &(&n * &n) == self.numer() && &(&d * &d) == self.denom() {
            Some(Rational::new(n, d))
        } else {
            None
        }
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from_i64(i))
                } else {
                    Err(Error::Parse(format!(
                        "non-integral number {n} in exact input (quote it as \"p/q\" or use the float backend)"
                    )))
                }
            }
            other => Err(Error::Parse(format!("expected a rational, found {other}"))),
        }
    }
}

impl Scalar for f64 {
    const BACKEND: Backend = Backend::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(q: &Rational) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn magnitude(&self) -> f64 {
        f64::abs(*self)
    }
    fn is_negligible(&self, scale: f64, tol: f64) -> bool {
        f64::abs(*self) <= tol * scale
    }
    fn sign(&self, scale: f64, tol: f64) -> i8 {
        if self.is_negligible(scale, tol) {
            0
        } else if *self > 0.0 {
            1
        } else {
            -1
        }
    }
    fn exp_of(q: &Rational) -> Option<Self> {
        Some(f64::exp(Scalar::from_rational(q)))
    }
    fn sqrt_of(&self) -> Option<Self> {
        if *self < 0.0 {
            None
        } else {
            Some(f64::sqrt(*self))
        }
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> Result<Self> {
        match v {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("number {n} out of range"))),
            Value::String(s) => parse_rational(s).map(|q| Scalar::from_rational(&q)),
            other => Err(Error::Parse(format!("expected a number, found {other}"))),
        }
    }
}

/// Parse `"p/q"`, `"p"` or a plain decimal such as `"0.25"` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(q) = Rational::from_str(s) {
        if q.denom().is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(q);
    }
    decimal_to_rational(s).ok_or_else(|| Error::Parse(format!("cannot parse {s:?} as a rational")))
}

/// Exact value of a decimal literal (`-1.25`, `3e-2`).
pub fn decimal_to_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let shift = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let q = if shift >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, shift as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-shift) as usize))
    };
    Some(if neg { -q } else { q })
}

/// Shorthand for building exact values in code and tests.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Shorthand for an exact integer.
pub fn qi(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rational("-7").unwrap(), qi(-7));
        assert_eq!(parse_rational("0.25").unwrap(), q(1, 4));
        assert_eq!(parse_rational("-1.5e1").unwrap(), qi(-15));
        assert_eq!(parse_rational("2e-2").unwrap(), q(1, 50));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn json_backends() {
        let v = serde_json::json!("2/4");
        assert_eq!(<Rational as Scalar>::from_json(&v).unwrap(), q(1, 2));
        assert_eq!(<f64 as Scalar>::from_json(&v).unwrap(), 0.5);
        let x = serde_json::json!(0.5);
        assert!(<Rational as Scalar>::from_json(&x).is_err());
        assert_eq!(<Rational as Scalar>::from_json(&serde_json::json!(3)).unwrap(), qi(3));
        assert_eq!(q(1, 2).to_json(), serde_json::json!("1/2"));
        assert_eq!(qi(4).to_json(), serde_json::json!("4"));
    }

    #[test]
    fn signs_and_roots() {
        assert_eq!(q(-1, 3).sign(1.0, 0.0), -1);
        assert_eq!(q(1, 3).sign(1.0, 0.0), 1);
        assert_eq!(qi(0).sign(1.0, 0.0), 0);
        assert_eq!(1e-12f64.sign(1.0, 1e-9), 0);
        assert_eq!(q(9, 4).sqrt_of(), Some(q(3, 2)));
        assert_eq!(qi(2).sqrt_of(), None);
        assert_eq!(Rational::exp_of(&qi(0)), Some(qi(1)));
        assert_eq!(Rational::exp_of(&qi(1)), None);
    }
}
