//! Exact dyadic rationals `n / 2^k`, the value set of short surreal forms.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::CoreError;

/// A normalized dyadic rational `numerator / 2^exponent`.
///
/// Either `exponent == 0` or `numerator` is odd, so structural equality is
/// value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

impl Dyadic {
    /// Builds `numerator / 2^exponent`, reducing common factors of two.
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut numerator = numerator.into();
        let mut exponent = exponent;
        if numerator.is_zero() {
            return Self::zero();
        }
        let twos = numerator.trailing_zeros().unwrap_or(0).min(u64::from(exponent)) as u32;
        if twos > 0 {
            numerator >>= twos;
            exponent -= twos;
        }
        Dyadic { numerator, exponent }
    }

    pub fn zero() -> Self {
        Dyadic { numerator: BigInt::zero(), exponent: 0 }
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Dyadic { numerator: n.into(), exponent: 0 }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    /// The `k` in `n / 2^k`; zero exactly for integers.
    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_integer(&self) -> bool {
        self.exponent == 0
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.numerator.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.numerator.is_positive()
    }

    pub fn abs(&self) -> Self {
        Dyadic { numerator: self.numerator.abs(), exponent: self.exponent }
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        // BigInt shifts round toward negative infinity.
        &self.numerator >> self.exponent
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> BigInt {
        -((-&self.numerator) >> self.exponent)
    }

    /// `(self + other) / 2`, exact.
    pub fn midpoint(&self, other: &Dyadic) -> Dyadic {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        Dyadic::new(a + b, e + 1)
    }

    /// Birthday of the canonical form of this value: `|n|` for integers,
    /// otherwise `floor(|q|) + 1 + k`.
    pub fn canonical_generation(&self) -> u64 {
        let abs = self.abs();
        let whole = abs.floor().to_u64().expect("integer part exceeds u64");
        if self.is_integer() {
            whole
        } else {
            whole + 1 + u64::from(self.exponent)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::NAN);
        n / 2f64.powi(self.exponent as i32)
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::integer(n)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { numerator: -self.numerator, exponent: self.exponent }
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { numerator: -&self.numerator, exponent: self.exponent }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.exponent == other.exponent {
            return self.numerator.cmp(&other.numerator);
        }
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The simplest dyadic strictly between the optional bounds.
///
/// With no bounds the answer is 0. With one bound it is the integer of
/// smallest magnitude strictly beyond that bound. With both it is the integer
/// of smallest magnitude inside the interval if there is one, otherwise the
/// shallowest point reached by bisecting the enclosing unit interval.
pub fn simplest_between(lo: Option<&Dyadic>, hi: Option<&Dyadic>) -> Result<Dyadic, CoreError> {
    match (lo, hi) {
        (None, None) => Ok(Dyadic::zero()),
        (Some(lo), None) => Ok(if lo.is_negative() {
            Dyadic::zero()
        } else {
            Dyadic::integer(lo.floor() + 1)
        }),
        (None, Some(hi)) => Ok(if hi.is_positive() {
            Dyadic::zero()
        } else {
            Dyadic::integer(hi.ceil() - 1)
        }),
        (Some(lo), Some(hi)) => {
            if lo >= hi {
                return Err(CoreError::EmptyInterval { lo: lo.clone(), hi: hi.clone() });
            }
            if lo.is_negative() && hi.is_positive() {
                return Ok(Dyadic::zero());
            }
            if hi.is_negative() || hi.is_zero() {
                // Mirror onto the non-negative side.
                let inner = simplest_nonnegative(&-hi, &-lo);
                return Ok(-inner);
            }
            Ok(simplest_nonnegative(lo, hi))
        }
    }
}

/// `0 <= lo < hi`.
fn simplest_nonnegative(lo: &Dyadic, hi: &Dyadic) -> Dyadic {
    let first: BigInt = lo.floor() + 1;
    let candidate = Dyadic::integer(first.clone());
    if &candidate < hi {
        return candidate;
    }
    // No integer strictly inside: (lo, hi) sits within [floor(lo), floor(lo) + 1].
    let mut a = Dyadic::integer(first.clone() - 1);
    let mut b = Dyadic::integer(first);
    loop {
        let mid = a.midpoint(&b);
        if &mid <= lo {
            a = mid;
        } else if &mid >= hi {
            b = mid;
        } else {
            return mid;
        }
    }
}
