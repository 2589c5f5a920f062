//! Exact non-negative rational arithmetic and the extended rationals used by
//! the referee.
//!
//! All game arithmetic is exact. The only division that ever happens is the
//! ratio `m/a` of two weights, which uses the conventions `m/0 = +inf` for
//! `m != 0` and `0/0 = 0`; that ratio lives in [`ExtRat`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Sub};
use std::str::FromStr;

/// An exact non-negative rational, arbitrary precision.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RatError {
    #[error("negative value not allowed: {0}")]
    Negative(String),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("cannot parse rational from {0:?}")]
    Parse(String),
}

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: u64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den` as an exact rational. Both must be non-negative, `den > 0`.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let r = BigRational::new(BigInt::from(num), BigInt::from(den));
        assert!(!r.is_negative(), "negative rational");
        Rat(r)
    }

    pub fn try_from_big(r: BigRational) -> Result<Self, RatError> {
        if r.is_negative() {
            Err(RatError::Negative(r.to_string()))
        } else {
            Ok(Rat(r))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    /// `self - other`, or `None` if the result would be negative.
    pub fn checked_sub(&self, other: &Rat) -> Option<Rat> {
        if self.0 >= other.0 {
            Some(Rat(&self.0 - &other.0))
        } else {
            None
        }
    }

    /// Saturating subtraction: `max(self - other, 0)`.
    pub fn sat_sub(&self, other: &Rat) -> Rat {
        self.checked_sub(other).unwrap_or_else(Rat::zero)
    }

    /// Exact division; panics if `other` is zero (use [`ExtRat::ratio`] for
    /// the game convention).
    pub fn div_exact(&self, other: &Rat) -> Rat {
        assert!(!other.is_zero(), "division by zero");
        Rat(&self.0 / &other.0)
    }

    pub fn min(self, other: Rat) -> Rat {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rat {
    type Err = RatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_int = |t: &str| BigInt::from_str(t.trim()).map_err(|_| RatError::Parse(s.into()));
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let den = parse_int(d)?;
                if den.is_zero() {
                    return Err(RatError::ZeroDenominator);
                }
                BigRational::new(parse_int(n)?, den)
            }
            None => BigRational::from_integer(parse_int(s)?),
        };
        Rat::try_from_big(r)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rat::from_str(&s).map_err(D::Error::custom)
    }
}

macro_rules! rat_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Rat {
            type Output = Rat;
            fn $method(self, rhs: &Rat) -> Rat {
                Rat(&self.0 $op &rhs.0)
            }
        }
        impl $trait for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0 $op rhs.0)
            }
        }
    };
}

rat_binop!(Add, add, +);
rat_binop!(Mul, mul, *);

impl Sub for &Rat {
    type Output = Rat;
    fn sub(self, rhs: &Rat) -> Rat {
        self.checked_sub(rhs).expect("negative result in Rat subtraction")
    }
}

impl Sub for Rat {
    type Output = Rat;
    fn sub(self, rhs: Rat) -> Rat {
        &self - &rhs
    }
}

impl Div for &Rat {
    type Output = Rat;
    fn div(self, rhs: &Rat) -> Rat {
        self.div_exact(rhs)
    }
}

impl Div for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        self.div_exact(&rhs)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

/// A non-negative rational or `+inf`.
///
/// Comparison rules: `+inf` is greater than every finite value and equal to
/// itself. Addition absorbs into `+inf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtRat {
    Finite(Rat),
    Infinity,
}

impl ExtRat {
    pub fn zero() -> Self {
        ExtRat::Finite(Rat::zero())
    }

    /// The game ratio `m/a`: `m/0 = +inf` for `m != 0`, `0/0 = 0`.
    pub fn ratio(m: &Rat, a: &Rat) -> Self {
        if a.is_zero() {
            if m.is_zero() {
                ExtRat::zero()
            } else {
                ExtRat::Infinity
            }
        } else {
            ExtRat::Finite(m.div_exact(a))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRat::Infinity)
    }

    pub fn as_finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Finite(r) => Some(r),
            ExtRat::Infinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::Finite(r) => r.to_f64(),
            ExtRat::Infinity => f64::INFINITY,
        }
    }
}

impl Add for ExtRat {
    type Output = ExtRat;
    fn add(self, rhs: ExtRat) -> ExtRat {
        match (self, rhs) {
            (ExtRat::Finite(a), ExtRat::Finite(b)) => ExtRat::Finite(a + b),
            _ => ExtRat::Infinity,
        }
    }
}

impl AddAssign for ExtRat {
    fn add_assign(&mut self, rhs: ExtRat) {
        let lhs = std::mem::replace(self, ExtRat::zero());
        *self = lhs + rhs;
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtRat::Infinity, ExtRat::Infinity) => Ordering::Equal,
            (ExtRat::Infinity, ExtRat::Finite(_)) => Ordering::Greater,
            (ExtRat::Finite(_), ExtRat::Infinity) => Ordering::Less,
            (ExtRat::Finite(a), ExtRat::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd<Rat> for ExtRat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        match self {
            ExtRat::Infinity => Some(Ordering::Greater),
            ExtRat::Finite(r) => r.partial_cmp(other),
        }
    }
}

impl PartialEq<Rat> for ExtRat {
    fn eq(&self, other: &Rat) -> bool {
        matches!(self, ExtRat::Finite(r) if r == other)
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::Finite(r) => write!(f, "{}", r),
            ExtRat::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtRat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtRat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            Ok(ExtRat::Infinity)
        } else {
            Ok(ExtRat::Finite(Rat::from_str(&s).map_err(D::Error::custom)?))
        }
    }
}
