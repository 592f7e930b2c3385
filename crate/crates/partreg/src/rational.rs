//! Exact rational scalars.
//!
//! [`Rational`] wraps an arbitrary-precision rational and pins down the
//! crate-wide conventions:
//!
//! * construction with a zero denominator is an [`Error::ZeroDenominator`],
//!   never a panic;
//! * values are always stored in lowest terms with a positive denominator;
//! * the textual form is `"p/q"` with the `/q` omitted when `q == 1`, and
//!   that exact form is used for `Display`, `FromStr` and JSON
//!   (de)serialization;
//! * ordering, equality and hashing agree with the mathematical value.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number of unbounded precision.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `num/den`, reduced to lowest terms. Fails on `den == 0`.
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    /// The integer `n` as a rational.
    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    /// Exact zero.
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    /// Exact one.
    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `2^exp` for any integer exponent (negative exponents give `1/2^-exp`).
    pub fn pow2(exp: i64) -> Self {
        let one = BigInt::one();
        if exp >= 0 {
            Rational(BigRational::from_integer(one << exp as usize))
        } else {
            Rational(BigRational::new(one.clone(), one << (-exp) as usize))
        }
    }

    /// Numerator in lowest terms (sign lives here).
    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    /// Denominator in lowest terms; always positive.
    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    /// True iff the value is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// True iff the denominator is one.
    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// True iff strictly positive.
    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// True iff strictly negative.
    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Absolute value.
    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Multiplicative inverse; fails on zero.
    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    /// Checked division; fails on a zero divisor.
    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    /// The value as an `i64` if it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        if !self.is_integer() {
            return None;
        }
        self.0.numer().to_i64()
    }

    /// The value as an `i128` if it is an integer in range.
    pub fn to_i128(&self) -> Option<i128> {
        if !self.is_integer() {
            return None;
        }
        self.0.numer().to_i128()
    }

    /// Approximate value as `f64` (for ordering heuristics and report text only;
    /// all decisions in this crate are made exactly).
    pub fn to_f64_lossy(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Writes the value as `v = t / 2^level` with odd-or-zero `t`, i.e. the
    /// canonical dyadic form. Fails if the denominator is not a power of two.
    pub fn dyadic_parts(&self) -> Option<(BigInt, u32)> {
        let den = self.denom();
        // A reduced denominator is a power of two iff its only set bit is the top one.
        let bits = den.bits();
        if den.trailing_zeros() != Some(bits - 1) {
            return None;
        }
        let level = (bits - 1) as u32;
        Some((self.numer().clone(), level))
    }

    /// Floor of the value as a BigInt.
    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl std::hash::Hash for Rational {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // Values are kept reduced, so (numer, denom) is canonical.
        self.numer().hash(state);
        self.denom().hash(state);
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Parses `"p"` or `"p/q"` with optional leading sign on `p` (ASCII `-`
    /// or the minus sign `−`). Whitespace around the tokens is accepted.
    fn from_str(s: &str) -> Result<Self> {
        let err = |msg: &str| Error::Parse { line: 1, col: 1, msg: msg.to_string() };
        let s = s.trim();
        if s.is_empty() {
            return Err(err("empty rational"));
        }
        let (num_s, den_s) = match s.split_once('/') {
            Some((a, b)) => (a.trim(), Some(b.trim())),
            None => (s, None),
        };
        let num = parse_bigint(num_s)
            .ok_or_else(|| err(&format!("invalid integer {num_s:?}")))?;
        let den = match den_s {
            None => BigInt::one(),
            Some(d) => parse_bigint(d).ok_or_else(|| err(&format!("invalid integer {d:?}")))?,
        };
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

/// Parses a (possibly signed) decimal integer, accepting the Unicode minus sign.
fn parse_bigint(s: &str) -> Option<BigInt> {
    let s = s.replace('\u{2212}', "-");
    if s.is_empty() {
        return None;
    }
    BigInt::from_str(&s).ok()
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = Rational;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a rational as a \"p/q\" string or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Rational, E> {
                v.parse().map_err(|e| E::custom(format!("{e}")))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Rational, E> {
                Ok(Rational::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Rational, E> {
                Ok(Rational::from_int(v))
            }
        }
        deserializer.deserialize_any(V)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<i32> for Rational {
    fn from(n: i32) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for Rational {
    type Output = Rational;
    /// Panics on a zero divisor; use [`Rational::checked_div`] where the
    /// divisor is not known to be nonzero.
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(self.0 / rhs.0)
    }
}

impl Div<&Rational> for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

/// Least common multiple of two positive big integers.
pub fn bigint_lcm(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn construction_reduces_and_normalizes_sign() {
        assert_eq!(r(2, 4), r(1, 2));
        assert_eq!(r(1, -2), r(-1, 2));
        assert_eq!(r(-1, -2), r(1, 2));
        assert!(r(-1, 2).denom().is_positive());
        assert!(matches!(Rational::new(1, 0), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn display_and_parse_round_trip() {
        for s in ["0", "7", "-7", "1/2", "-3/4", "22/7"] {
            let v: Rational = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        // Non-canonical inputs parse to the canonical form.
        assert_eq!("2/4".parse::<Rational>().unwrap().to_string(), "1/2");
        assert_eq!("1/-2".parse::<Rational>().unwrap().to_string(), "-1/2");
        assert_eq!("−3".parse::<Rational>().unwrap(), r(-3, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn serde_uses_strings() {
        let v = r(-3, 4);
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"-3/4\"");
        let back: Rational = serde_json::from_str("\"-3/4\"").unwrap();
        assert_eq!(back, v);
        let from_int: Rational = serde_json::from_str("5").unwrap();
        assert_eq!(from_int, r(5, 1));
        assert!(serde_json::from_str::<Rational>("\"1/0\"").is_err());
    }

    #[test]
    fn arithmetic() {
        assert_eq!(r(1, 2) + r(1, 3), r(5, 6));
        assert_eq!(r(1, 2) - r(1, 3), r(1, 6));
        assert_eq!(r(2, 3) * r(3, 4), r(1, 2));
        assert_eq!(r(1, 2) / r(1, 4), r(2, 1));
        assert_eq!(-r(1, 2), r(-1, 2));
        assert!(r(1, 2).checked_div(&Rational::zero()).is_err());
        assert!(Rational::zero().recip().is_err());
    }

    #[test]
    fn pow2_both_signs() {
        assert_eq!(Rational::pow2(0), Rational::one());
        assert_eq!(Rational::pow2(5), r(32, 1));
        assert_eq!(Rational::pow2(-3), r(1, 8));
    }

    #[test]
    fn ordering_is_by_value() {
        assert!(r(1, 3) < r(1, 2));
        assert!(r(-1, 2) < r(1, 3));
        assert!(r(7, 7) == r(1, 1));
    }

    #[test]
    fn dyadic_parts() {
        assert_eq!(r(3, 8).dyadic_parts(), Some((BigInt::from(3), 3)));
        assert_eq!(r(5, 1).dyadic_parts(), Some((BigInt::from(5), 0)));
        assert_eq!(r(1, 3).dyadic_parts(), None);
        assert_eq!(r(-3, 4).dyadic_parts(), Some((BigInt::from(-3), 2)));
    }

    #[test]
    fn integer_extraction() {
        assert_eq!(r(6, 2).to_i64(), Some(3));
        assert_eq!(r(1, 2).to_i64(), None);
        assert_eq!(r(-9, 3).to_i128(), Some(-3));
    }
}
