//! Exact rational parsing helpers.
//!
//! Two grammars are accepted:
//!
//! * [`parse_rational`]: `[-]digits` or `[-]digits/digits`. Used for
//!   probabilities, p-values and tie-breaking numbers, where a decimal point
//!   would silently suggest a rounded value.
//! * [`parse_decimal`]: the rational grammar plus finite decimals with an
//!   optional exponent (`-1.25`, `3e-2`, `.5`). Used for observations, which
//!   are converted to the rational they denote exactly.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};

use crate::error::{Error, Result};

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let num = parse_int(num).ok_or_else(|| not_rational(text))?;
    let den = match den {
        Some(d) => {
            if d.starts_with(['-', '+']) {
                return Err(not_rational(text));
            }
            parse_int(d).ok_or_else(|| not_rational(text))?
        }
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(Error::parse("rational", format!("`{text}` has a zero denominator")));
    }
    Ok(BigRational::new(num, den))
}

pub fn parse_decimal(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.contains('/') {
        return parse_rational(s);
    }
    let bad = || Error::parse("decimal", format!("`{text}` is not a finite decimal number"));
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let magnitude: BigInt = all_digits.parse::<BigUint>().map_err(|_| bad())?.into();
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        BigRational::from_integer(magnitude * Pow::pow(&ten, scale as u32))
    } else {
        BigRational::new(magnitude, Pow::pow(&ten, scale.unsigned_abs()))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn not_rational(text: &str) -> Error {
    Error::parse(
        "rational",
        format!("`{text}` is not an exact rational (expected `p/q` or an integer)"),
    )
}

/// `n choose k` as an exact integer.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

pub fn is_unit_interval(q: &BigRational) -> bool {
    !q.is_negative() && *q <= BigRational::one()
}
