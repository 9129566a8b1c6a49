//! Arithmetic backends.
//!
//! Everything that must hold exactly (atom identities, mixture checks) is
//! generic over [`Scalar`], which is implemented for `f64` and for
//! arbitrary-precision rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Relative slack used in float mode when deciding that a point sits on a
/// dyadic boundary.
pub const BOUNDARY_SNAP: f64 = 1e-12;

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Send + Sync + Num + Signed + 'static
{
    /// True when arithmetic is exact and equality tests need no tolerance.
    const EXACT: bool;
    const NAME: &'static str;

    fn to_f64(&self) -> f64;

    /// Exact for rationals; plain conversion for floats.
    fn from_f64(x: f64) -> Result<Self>;

    fn from_int(n: i64) -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    /// `j / 2^level`.
    fn dyadic(j: i64, level: u32) -> Self;

    /// `self * 2^k`.
    fn mul_pow2(&self, k: i32) -> Self;

    /// `floor(self * 2^level)`, plus whether the float backend snapped the
    /// value onto a boundary it was within rounding distance of.
    fn dyadic_floor(&self, level: u32) -> (i64, bool);

    /// Accepts `p/q`, integers and decimal literals.
    fn parse(s: &str) -> Result<Self>;

    /// Equality up to `tol` in float mode, exact equality otherwise.
    fn close(&self, other: &Self, tol: f64) -> bool;

    /// Text form that `parse` reads back to the same value.
    fn literal(&self) -> String;

    fn powi(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const NAME: &'static str = "float";

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Result<Self> {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Parse(format!("non-finite value {x}")))
        }
    }

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn dyadic(j: i64, level: u32) -> Self {
        j as f64 * (-(level as f64)).exp2()
    }

    fn mul_pow2(&self, k: i32) -> Self {
        self * (k as f64).exp2()
    }

    fn dyadic_floor(&self, level: u32) -> (i64, bool) {
        let y = self * (level as f64).exp2();
        let r = y.round();
        let slack = BOUNDARY_SNAP * y.abs().max(1.0);
        if (y - r).abs() <= slack {
            (r as i64, y != r)
        } else {
            (y.floor() as i64, false)
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let v = if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().map_err(|_| bad_literal(s))?;
            let q: f64 = q.trim().parse().map_err(|_| bad_literal(s))?;
            if q == 0.0 {
                return Err(bad_literal(s));
            }
            p / q
        } else {
            s.parse().map_err(|_| bad_literal(s))?
        };
        Self::from_f64(v)
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn literal(&self) -> String {
        format!("{self:?}")
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const NAME: &'static str = "exact";

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite value {x}")))
    }

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn dyadic(j: i64, level: u32) -> Self {
        BigRational::new(BigInt::from(j), BigInt::one() << level)
    }

    fn mul_pow2(&self, k: i32) -> Self {
        if k >= 0 {
            BigRational::new(self.numer() << k as u32, self.denom().clone())
        } else {
            BigRational::new(self.numer().clone(), self.denom() << (-k) as u32)
        }
    }

    fn dyadic_floor(&self, level: u32) -> (i64, bool) {
        let scaled = self.numer() << level;
        let q = scaled.div_floor(self.denom());
        (
            q.to_i64()
                .unwrap_or(if q.is_negative() { i64::MIN } else { i64::MAX }),
            false,
        )
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = parse_decimal(p.trim()).ok_or_else(|| bad_literal(s))?;
            let q = parse_decimal(q.trim()).ok_or_else(|| bad_literal(s))?;
            if q.is_zero() {
                return Err(bad_literal(s));
            }
            Ok(p / q)
        } else {
            parse_decimal(s).ok_or_else(|| bad_literal(s))
        }
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn literal(&self) -> String {
        if self.denom().is_one() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

fn bad_literal(s: &str) -> Error {
    Error::Parse(format!("cannot read number from {s:?}"))
}

/// Reads `[-]digits[.digits][e[+-]digits]` exactly.
fn parse_decimal(s: &str) -> Option<Rational> {
    if s.is_empty() {
        return None;
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let n = BigInt::from_str_radix(if all.is_empty() { "0" } else { &all }, 10).ok()?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let mut v = if shift >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, shift as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-shift) as usize))
    };
    if neg {
        v = -v;
    }
    Some(v)
}

pub fn max_of<S: Scalar>(xs: impl IntoIterator<Item = S>) -> Option<S> {
    xs.into_iter().fold(None, |acc, x| match acc {
        Some(a) if a >= x => Some(a),
        _ => Some(x),
    })
}

pub fn min_of<S: Scalar>(xs: impl IntoIterator<Item = S>) -> Option<S> {
    xs.into_iter().fold(None, |acc, x| match acc {
        Some(a) if a <= x => Some(a),
        _ => Some(x),
    })
}

/// `u64` counts as a scalar; helper for weights built from class sizes.
pub fn from_count<S: Scalar>(n: u64) -> S {
    S::from_int(n as i64)
}
