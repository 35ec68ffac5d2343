//! Vectors of exact rationals. `Value` is the element of the value space used
//! by every set function in this crate; scalars are the special case `dim == 1`.

use crate::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Shorthand for a rational from an integer pair.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn rat_from_str(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| Error::Invalid(format!("bad rational numerator {num:?}")))?;
    let d: BigInt = den
        .parse()
        .map_err(|_| Error::Invalid(format!("bad rational denominator {den:?}")))?;
    if d.is_zero() {
        return Err(Error::Invalid(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

/// Canonical `"p/q"` form (plain integer when the denominator is 1).
pub fn rat_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Fixed-dimension vector of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Value(pub Vec<BigRational>);

impl Value {
    pub fn zero(dim: usize) -> Self {
        Value(vec![BigRational::zero(); dim])
    }

    pub fn scalar(r: BigRational) -> Self {
        Value(vec![r])
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Value(v.iter().map(|&n| rat(n, 1)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }

    pub fn coord(&self, i: usize) -> &BigRational {
        &self.0[i]
    }

    /// Coordinatewise absolute value.
    pub fn abs(&self) -> Value {
        Value(self.0.iter().map(|c| c.abs()).collect())
    }

    /// Coordinatewise product (used for indicator multiplication).
    pub fn hadamard(&self, other: &Value) -> Value {
        assert_eq!(self.dim(), other.dim());
        Value(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn scale(&self, k: &BigRational) -> Value {
        Value(self.0.iter().map(|c| c * k).collect())
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            })
        }
    }

    pub fn parse(parts: &[String]) -> Result<Value> {
        Ok(Value(
            parts
                .iter()
                .map(|s| rat_from_str(s))
                .collect::<Result<Vec<_>>>()?,
        ))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(rat_to_string).collect()
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Add for &Value {
    type Output = Value;
    fn add(self, rhs: &Value) -> Value {
        assert_eq!(self.dim(), rhs.dim());
        Value(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Value {
    type Output = Value;
    fn sub(self, rhs: &Value) -> Value {
        assert_eq!(self.dim(), rhs.dim());
        Value(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        Value(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul<&BigRational> for &Value {
    type Output = Value;
    fn mul(self, k: &BigRational) -> Value {
        self.scale(k)
    }
}

impl AddAssign<&Value> for Value {
    fn add_assign(&mut self, rhs: &Value) {
        assert_eq!(self.dim(), rhs.dim());
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl SubAssign<&Value> for Value {
    fn sub_assign(&mut self, rhs: &Value) {
        assert_eq!(self.dim(), rhs.dim());
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
    }
}
