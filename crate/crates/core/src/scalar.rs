//! Arithmetic backends shared by step functions and integer laws.
//!
//! Two backends are provided: `f64` for large-scale numerics and
//! [`Rational`] (arbitrary precision) for exact combinatorial identities.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Relative tolerance used when merging float levels in canonical form.
pub const FLOAT_MERGE_TOL: f64 = 1e-15;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
{
    /// Level equality used by canonicalization.
    fn same_level(&self, other: &Self) -> bool;

    fn to_f64(&self) -> f64;

    fn from_ratio(num: i64, den: u64) -> Self;

    fn is_finite(&self) -> bool;

    fn magnitude(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }

    /// JSON representation: numbers for floats, `"p/q"` strings for rationals.
    fn to_json(&self) -> serde_json::Value;

    fn from_json(v: &serde_json::Value) -> Result<Self>;
}

impl Scalar for f64 {
    fn same_level(&self, other: &Self) -> bool {
        let scale = f64::abs(*self).max(f64::abs(*other));
        f64::abs(self - other) <= FLOAT_MERGE_TOL * scale
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| Error::invalid(format!("not a float: {n}"))),
            serde_json::Value::String(s) => parse_rational(s).map(|r| Scalar::to_f64(&r)),
            other => Err(Error::invalid(format!("expected a number, got {other}"))),
        }
    }
}

impl Scalar for Rational {
    fn same_level(&self, other: &Self) -> bool {
        self == other
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // numerator and denominator both overflow f64
            let n = self.numer().bits() as i64;
            let d = self.denom().bits() as i64;
            let shift = (n - d).clamp(-1100, 1100);
            let scaled = if shift > 0 {
                self / Rational::from_integer(BigInt::one() << shift as usize)
            } else {
                self * Rational::from_integer(BigInt::one() << (-shift) as usize)
            };
            ToPrimitive::to_f64(&scaled).unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
        })
    }

    fn from_ratio(num: i64, den: u64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn is_finite(&self) -> bool {
        true
    }

    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &serde_json::Value) -> Result<Self> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Rational::from_integer(BigInt::from(i)))
                } else {
                    let f = n.as_f64().unwrap_or(f64::NAN);
                    Rational::from_float(f)
                        .ok_or_else(|| Error::invalid(format!("cannot convert {f} to a rational")))
                }
            }
            other => Err(Error::invalid(format!(
                "expected a \"p/q\" string, got {other}"
            ))),
        }
    }
}

/// Parses `"p/q"` or an integer literal.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::invalid(format!("malformed rational `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

pub fn rational(num: i64, den: u64) -> Rational {
    Rational::from_ratio(num, den)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_json_round_trip() {
        let r = rational(-3, 8);
        let v = r.to_json();
        assert_eq!(v, serde_json::json!("-3/8"));
        assert_eq!(Rational::from_json(&v).unwrap(), r);
    }

    #[test]
    fn huge_rational_converts() {
        let r = Rational::new(BigInt::one(), BigInt::one() << 2000usize);
        assert_eq!(Scalar::to_f64(&r), 0.0);
        let r = Rational::new(BigInt::from(3) << 1500usize, BigInt::one() << 1501usize);
        assert!((Scalar::to_f64(&r) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let xs = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        assert!((compensated_sum(xs) - (1.0 + 1e-12)).abs() < 1e-16);
    }

    #[test]
    fn malformed_rational_rejected() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/2").is_err());
        assert_eq!(parse_rational("5").unwrap(), rational(5, 1));
    }
}
