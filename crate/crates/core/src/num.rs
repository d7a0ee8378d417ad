//! Scalar types shared by the solvers.
//!
//! Everything that produces a certificate works over [`Q`], an exact
//! arbitrary-precision rational. The equalizing solver and the count
//! distributions are also generic over [`Scalar`] so the same code can be
//! driven with `f64` when only the operation structure matters.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number.
pub type Q = BigRational;

/// Shorthand for the rational `num/den`.
pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Shorthand for an integer-valued rational.
pub fn qi(value: i64) -> Q {
    Q::from_integer(BigInt::from(value))
}

/// Ordered field used by the generic parts of the solver.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_q(value: &Q) -> Self;

    /// Equality as used by stopping conditions. Exact for rationals.
    fn same(&self, other: &Self) -> bool;

    fn to_f64(&self) -> f64;
}

impl Scalar for Q {
    fn from_q(value: &Q) -> Self {
        value.clone()
    }

    fn same(&self, other: &Self) -> bool {
        self == other
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_q(value: &Q) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }

    fn same(&self, other: &Self) -> bool {
        let scale = self.abs().max(other.abs()).max(1.0);
        (self - other).abs() <= 1e-9 * scale
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational `{0}`")]
pub struct RationalParseError(pub String);

/// Parses `a/b`, an integer, or a plain decimal such as `0.125` or `-3.5`.
pub fn parse_rational(text: &str) -> Result<Q, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let t = text.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = t.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(num, den));
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let mantissa =
        BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| err())?;
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = Q::new(mantissa, den);
    Ok(if negative { -value } else { value })
}

/// Decimal rendering with round-half-even at `digits` significant digits.
///
/// Trailing zeros are dropped; plain positional notation is used.
pub fn format_decimal(value: &Q, digits: usize) -> String {
    let digits = digits.max(1);
    if value.is_zero() {
        return "0".to_string();
    }
    let negative = value.is_negative();
    let x = value.abs();
    let ten = BigInt::from(10u32);

    // Find e with 10^e <= x < 10^(e+1).
    let mut e: i64 = (x.numer().bits() as i64 - x.denom().bits() as i64) * 30103 / 100000;
    loop {
        let lower = pow10(e);
        if x < lower {
            e -= 1;
            continue;
        }
        if x >= pow10(e + 1) {
            e += 1;
            continue;
        }
        break;
    }

    // scaled = x * 10^(digits-1-e), rounded half-even to an integer.
    let shift = digits as i64 - 1 - e;
    let scaled = x * pow10(shift);
    let (quot, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2u32;
    let mut mantissa = quot;
    match twice.cmp(scaled.denom()) {
        std::cmp::Ordering::Greater => mantissa += 1u32,
        std::cmp::Ordering::Equal if mantissa.is_odd() => mantissa += 1u32,
        _ => {}
    }
    let mut shift = shift;
    // Rounding may carry into a new digit (9.99.. -> 10.0).
    if mantissa == num_traits::pow(ten.clone(), digits) {
        mantissa /= ten;
        shift -= 1;
    }

    let mut s = mantissa.to_string();
    let body = if shift <= 0 {
        s.push_str(&"0".repeat((-shift) as usize));
        s
    } else {
        let shift = shift as usize;
        if s.len() <= shift {
            s = format!("{}{}", "0".repeat(shift - s.len() + 1), s);
        }
        let point = s.len() - shift;
        let (int_part, frac_part) = s.split_at(point);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac_part}")
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn pow10(e: i64) -> Q {
    let p = num_traits::pow(BigInt::from(10u32), e.unsigned_abs() as usize);
    if e >= 0 {
        Q::from_integer(p)
    } else {
        Q::new(BigInt::one(), p)
    }
}
