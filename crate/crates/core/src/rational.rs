//! Exact quality values and rational parsing helpers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relaxation factor of a matching: `|C| / |kept|`, or unbounded when some
/// kept set is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alpha {
    Finite(Ratio<u64>),
    Unbounded,
}

impl Alpha {
    pub fn ratio(size: usize, kept: usize) -> Alpha {
        if kept == 0 {
            Alpha::Unbounded
        } else {
            Alpha::Finite(Ratio::new(size as u64, kept as u64))
        }
    }

    pub fn one() -> Alpha {
        Alpha::Finite(Ratio::one())
    }

    pub fn integer(v: u64) -> Alpha {
        Alpha::Finite(Ratio::from_integer(v))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Alpha::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Alpha::Finite(r) => *r.numer() as f64 / *r.denom() as f64,
            Alpha::Unbounded => f64::INFINITY,
        }
    }

    /// Smallest integer demand `t` with `t >= size / alpha`.
    pub fn demand(&self, size: usize) -> usize {
        match self {
            Alpha::Finite(r) => {
                let num = size as u128 * *r.denom() as u128;
                let den = *r.numer() as u128;
                num.div_ceil(den) as usize
            }
            Alpha::Unbounded => 0,
        }
    }
}

impl PartialOrd for Alpha {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Alpha {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Alpha::Finite(a), Alpha::Finite(b)) => a.cmp(b),
            (Alpha::Finite(_), Alpha::Unbounded) => Ordering::Less,
            (Alpha::Unbounded, Alpha::Finite(_)) => Ordering::Greater,
            (Alpha::Unbounded, Alpha::Unbounded) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Alpha::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Alpha::Unbounded => write!(f, "inf"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Alpha::Unbounded);
        }
        let q = parse_rational(s)?;
        if q.is_negative() {
            return Err(Error::InvalidParameter(format!("negative alpha {s}")));
        }
        let n = q.numer().to_u64();
        let d = q.denom().to_u64();
        match (n, d) {
            (Some(n), Some(d)) => Ok(Alpha::Finite(Ratio::new(n, d))),
            _ => Err(Error::InvalidParameter(format!("alpha out of range: {s}"))),
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"a/b"`, an integer, or a finite decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let d = num_traits::pow(BigInt::from(10u32), frac.len());
    let q = BigRational::new(n, d);
    Ok(if neg { -q } else { q })
}

pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Exact rational value of the `f64` natural logarithm of `x`.
///
/// Thresholds that involve `log` are compared against this fixed-precision
/// constant so every accept/reject decision is reproducible bit for bit.
pub fn ln_rational(x: f64) -> BigRational {
    BigRational::from_float(x.ln()).unwrap_or_else(BigRational::zero)
}

pub fn from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn ratio(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Serde adapter for `BigRational` as a `"num/den"` string.
pub mod serde_big {
    use super::*;

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<BigRational>`.
pub mod serde_big_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&format_rational(q))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
