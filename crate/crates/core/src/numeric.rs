//! Multi-precision numerics behind the score schemes.
//!
//! Everything here runs on [`BigFloat`] at a working precision derived from a
//! requested number of significant decimal digits. The normal CDF is evaluated
//! from its Taylor series with enough guard bits to absorb the cancellation in
//! the lower tail, the quantile by Newton iteration on that CDF, and expected
//! normal order statistics by the trapezoidal rule on the real line, which
//! converges geometrically for this analytic, Gaussian-decaying integrand.

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::binomial;

pub(crate) const RM: RoundingMode = RoundingMode::ToEven;

const WORD_BITS: usize = 64;
const ENV_PRECISION: &str = "ORDSTAT_PRECISION";

/// Number of significant decimal digits carried by score values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision(u32);

impl Precision {
    pub const DEFAULT_DIGITS: u32 = 50;
    pub const MIN_DIGITS: u32 = 10;
    pub const MAX_DIGITS: u32 = 2000;

    pub fn new(digits: u32) -> Result<Self> {
        if !(Self::MIN_DIGITS..=Self::MAX_DIGITS).contains(&digits) {
            return Err(Error::parse(
                "precision",
                format!(
                    "{digits} digits is outside the supported range {}..={}",
                    Self::MIN_DIGITS,
                    Self::MAX_DIGITS
                ),
            ));
        }
        Ok(Precision(digits))
    }

    /// Reads `ORDSTAT_PRECISION`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_PRECISION) {
            Ok(v) => {
                let digits = v.trim().parse::<u32>().map_err(|_| {
                    Error::parse(ENV_PRECISION, format!("`{v}` is not a digit count"))
                })?;
                Self::new(digits)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn digits(self) -> u32 {
        self.0
    }

    /// Mantissa bits used for arithmetic: the digit count in bits plus at
    /// least one guard word, rounded up to whole words.
    pub fn bits(self) -> usize {
        let needed = (self.0 as f64 * std::f64::consts::LOG2_10).ceil() as usize + WORD_BITS;
        needed.div_ceil(WORD_BITS) * WORD_BITS
    }

    /// Relative distance below which two scores are treated as tied:
    /// `10^(2 - digits)`.
    pub fn tolerance(self) -> BigFloat {
        let bits = self.bits();
        let denom = BigUint::from(10u32).pow(self.0 - 2);
        from_bigint(&denom.into(), bits).reciprocal(bits, RM)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision(Self::DEFAULT_DIGITS)
    }
}

pub(crate) fn consts() -> Result<Consts> {
    Consts::new().map_err(|e| Error::Numeric(format!("constant cache: {e:?}")))
}

pub(crate) fn check(x: BigFloat, what: &str) -> Result<BigFloat> {
    if x.is_nan() || x.is_inf() {
        Err(Error::Numeric(format!("{what} is not finite")))
    } else {
        Ok(x)
    }
}

pub fn from_bigint(n: &BigInt, bits: usize) -> BigFloat {
    if n.is_zero() {
        return BigFloat::from_word(0, bits);
    }
    let (sign, words) = n.to_u64_digits();
    let sign = if sign == num_bigint::Sign::Minus {
        Sign::Neg
    } else {
        Sign::Pos
    };
    let exact = BigFloat::from_words(&words, sign, (words.len() * WORD_BITS) as i32);
    let mut out = exact.clone();
    if words.len() * WORD_BITS > bits {
        // rounding failure leaves the exact value in place
        let _ = out.set_precision(bits, RM);
    }
    out
}

pub fn from_rational(q: &BigRational, bits: usize) -> BigFloat {
    let num = from_bigint(q.numer(), q.numer().bits() as usize + WORD_BITS);
    let den = from_bigint(q.denom(), q.denom().bits() as usize + WORD_BITS);
    num.div(&den, bits, RM)
}

/// The exact rational value of a finite float.
pub fn to_rational(x: &BigFloat) -> BigRational {
    let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
        return BigRational::zero();
    };
    if x.is_zero() {
        return BigRational::zero();
    }
    let mut mantissa = BigInt::zero();
    for (i, w) in words.iter().enumerate() {
        mantissa += BigInt::from(*w) << (i * WORD_BITS);
    }
    if sign == Sign::Neg {
        mantissa = -mantissa;
    }
    let shift = exponent as i64 - (words.len() * WORD_BITS) as i64;
    if shift >= 0 {
        BigRational::from_integer(mantissa << shift as usize)
    } else {
        BigRational::new(mantissa, BigInt::one() << (-shift) as usize)
    }
}

/// Leading-word approximation, good to about 53 bits.
pub(crate) fn approx_f64(x: &BigFloat) -> f64 {
    let Some((words, _, sign, exponent, _)) = x.as_raw_parts() else {
        return f64::NAN;
    };
    if x.is_zero() || words.is_empty() {
        return 0.0;
    }
    let top = *words.last().unwrap() as f64;
    let v = top * 2f64.powi(exponent - WORD_BITS as i32);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

/// Scientific notation with `digits` significant digits, rounded half-even
/// from the exact binary value.
pub fn format_sci(x: &BigFloat, digits: u32) -> String {
    let q = to_rational(x);
    format_rational_sci(&q, digits)
}

pub fn format_rational_sci(q: &BigRational, digits: u32) -> String {
    if q.is_zero() {
        return format!("0.{}e0", "0".repeat(digits.saturating_sub(1) as usize));
    }
    let sign = if q.is_negative() { "-" } else { "" };
    let a = q.abs();
    let ten = BigInt::from(10u32);
    let pow10 = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::from_integer(num_traits::pow(ten.clone(), e as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(ten.clone(), (-e) as usize))
        }
    };
    // decimal exponent estimate from bit lengths, then fixed up exactly
    let bit_exp = a.numer().bits() as i64 - a.denom().bits() as i64;
    let mut exp10 = (bit_exp as f64 * std::f64::consts::LOG10_2).floor() as i64;
    while a >= pow10(exp10 + 1) {
        exp10 += 1;
    }
    while a < pow10(exp10) {
        exp10 -= 1;
    }
    let scaled = a * pow10(digits as i64 - 1 - exp10);
    let mut mantissa = round_half_even(&scaled);
    if mantissa == num_traits::pow(ten.clone(), digits as usize) {
        mantissa /= &ten;
        exp10 += 1;
    }
    let text = mantissa.to_string();
    let (head, tail) = text.split_at(1);
    if tail.is_empty() {
        format!("{sign}{head}e{exp10}")
    } else {
        format!("{sign}{head}.{tail}e{exp10}")
    }
}

fn round_half_even(q: &BigRational) -> BigInt {
    let floor = q.floor().to_integer();
    let frac = q - BigRational::from_integer(floor.clone());
    let half = BigRational::new(1.into(), 2.into());
    if frac > half || (frac == half && (&floor % 2u32) != BigInt::zero()) {
        floor + 1
    } else {
        floor
    }
}

fn pow2(exp: i32, bits: usize) -> BigFloat {
    let mut one = BigFloat::from_word(1, bits);
    one.set_exponent(exp + 1);
    one
}

/// Standard normal density, distribution function and quantile at a fixed
/// working precision.
pub(crate) struct Normal {
    bits: usize,
    cc: Consts,
}

impl Normal {
    pub(crate) fn new(bits: usize) -> Result<Self> {
        Ok(Normal { bits, cc: consts()? })
    }

    fn pdf_at(&mut self, x: &BigFloat, bits: usize) -> BigFloat {
        let half_sq = x.mul(x, bits, RM).div(&BigFloat::from_word(2, bits), bits, RM);
        let two_pi = self.cc.pi(bits, RM).mul(&BigFloat::from_word(2, bits), bits, RM);
        half_sq.neg().exp(bits, RM, &mut self.cc).div(&two_pi.sqrt(bits, RM), bits, RM)
    }

    pub(crate) fn pdf(&mut self, x: &BigFloat) -> BigFloat {
        let bits = self.bits;
        self.pdf_at(x, bits)
    }

    /// `(Φ(x), Φ(-x))`, both to full relative precision.
    ///
    /// Uses `Φ(x) = 1/2 + φ(x) Σ_k x^(2k+1) / (2k+1)!!`; the lower tail is a
    /// difference of two terms of size about 1/2, so the sum runs with
    /// `x²/(2 ln 2)` extra bits.
    pub(crate) fn cdf_pair(&mut self, x: &BigFloat) -> Result<(BigFloat, BigFloat)> {
        let xf = approx_f64(x);
        let extra = (xf * xf * 0.5 * std::f64::consts::LOG2_E).ceil() as usize;
        let wp = (self.bits + extra + 2 * WORD_BITS).div_ceil(WORD_BITS) * WORD_BITS;
        let x2 = x.mul(x, wp, RM);
        let mut term = x.clone();
        let mut sum = x.clone();
        let mut k: u64 = 0;
        loop {
            k += 1;
            term = term
                .mul(&x2, wp, RM)
                .div(&BigFloat::from_u64(2 * k + 1, wp), wp, RM);
            sum = sum.add(&term, wp, RM);
            if term.is_zero() || sum.is_zero() {
                break;
            }
            let small = match (term.exponent(), sum.exponent()) {
                (Some(te), Some(se)) => (se as i64 - te as i64) > wp as i64,
                _ => true,
            };
            if small && (k as f64) > xf * xf {
                break;
            }
            if k > 1_000_000 {
                return Err(Error::Numeric("normal CDF series did not converge".into()));
            }
        }
        let phi_s = self.pdf_at(x, wp).mul(&sum, wp, RM);
        let half = pow2(-1, wp);
        let upper = half.add(&phi_s, self.bits, RM);
        let lower = half.sub(&phi_s, self.bits, RM);
        Ok((check(upper, "normal CDF")?, check(lower, "normal CDF")?))
    }

    /// `Φ⁻¹(q)` for `0 < q < 1` by Newton's method started at 0. Φ is convex
    /// left of 0 and concave right of it, so the iterates move monotonically
    /// towards the root.
    pub(crate) fn quantile(&mut self, q: &BigRational) -> Result<BigFloat> {
        if !q.is_positive() || *q >= BigRational::one() {
            return Err(Error::Numeric(format!("normal quantile of {q}")));
        }
        let bits = self.bits;
        let target = from_rational(q, bits + WORD_BITS);
        let mut x = BigFloat::from_word(0, bits);
        if q.numer() * 2 == *q.denom() {
            return Ok(x);
        }
        for _ in 0..500 {
            let (cdf, _) = self.cdf_pair(&x)?;
            let step = cdf.sub(&target, bits, RM).div(&self.pdf(&x), bits, RM);
            x = check(x.sub(&step, bits, RM), "normal quantile")?;
            let converged = match (step.exponent(), x.exponent()) {
                _ if step.is_zero() => true,
                (Some(se), Some(xe)) => (xe.max(1) as i64 - se as i64) > bits as i64 - 8,
                _ => false,
            };
            if converged {
                return Ok(x);
            }
        }
        Err(Error::Numeric("normal quantile iteration did not converge".into()))
    }

    pub(crate) fn ln(&mut self, q: &BigRational) -> Result<BigFloat> {
        let bits = self.bits;
        check(from_rational(q, bits + WORD_BITS).ln(bits, RM, &mut self.cc), "logarithm")
    }
}

/// `E[X_(i:n)]` for `i = 1..=n`, the expected order statistics of `n`
/// independent standard normal draws.
///
/// `E_i = n C(n-1, i-1) ∫ x φ(x) Φ(x)^(i-1) Φ(-x)^(n-i) dx`, evaluated with
/// the trapezoidal rule, halving the step until two successive estimates agree
/// to `digits + 5` decimal places. Only the lower half is integrated; the
/// upper half is its mirror image, so `E_i = -E_(n+1-i)` holds exactly.
pub fn expected_normal_order_statistics(n: usize, precision: Precision) -> Result<Vec<BigFloat>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let bits = precision.bits() + WORD_BITS;
    let mut normal = Normal::new(bits)?;
    let lower = n / 2;
    let tol = {
        let denom = BigUint::from(10u32).pow(precision.digits() + 5);
        from_bigint(&denom.into(), bits).reciprocal(bits, RM)
    };
    let half_width =
        (2.0 * std::f64::consts::LN_10 * (precision.digits() as f64 + 10.0) + 2.0 * (n as f64).ln())
            .sqrt()
            + 1.0;

    let mut step_exp = 3;
    let mut previous = trapezoid_lower_half(&mut normal, n, lower, step_exp, half_width)?;
    let mut converged = None;
    for _ in 0..10 {
        step_exp += 1;
        let current = trapezoid_lower_half(&mut normal, n, lower, step_exp, half_width)?;
        let agree = previous
            .iter()
            .zip(&current)
            .all(|(a, b)| a.sub(b, bits, RM).abs().cmp(&tol).is_some_and(|c| c <= 0));
        if agree {
            converged = Some(current);
            break;
        }
        previous = current;
    }
    let lower_values = converged
        .ok_or_else(|| Error::Numeric(format!("normal scores quadrature for n = {n}")))?;

    let out_bits = precision.bits();
    let mut out: Vec<BigFloat> = lower_values
        .iter()
        .map(|v| {
            let mut v = v.clone();
            let _ = v.set_precision(out_bits, RM);
            v
        })
        .collect();
    if n % 2 == 1 {
        out.push(BigFloat::from_word(0, out_bits));
    }
    for v in lower_values.iter().rev() {
        let mut v = v.neg();
        let _ = v.set_precision(out_bits, RM);
        out.push(v);
    }
    Ok(out)
}

fn trapezoid_lower_half(
    normal: &mut Normal,
    n: usize,
    lower: usize,
    step_exp: i32,
    half_width: f64,
) -> Result<Vec<BigFloat>> {
    let bits = normal.bits;
    let h = pow2(-step_exp, bits);
    let nodes = (half_width * f64::powi(2.0, step_exp)).ceil() as u64;
    let mut sums = vec![BigFloat::from_word(0, bits); lower];
    for j in 1..=nodes {
        let x = BigFloat::from_u64(j, bits).mul(&h, bits, RM);
        let (upper, lower_tail) = normal.cdf_pair(&x)?;
        let weight = x.mul(&normal.pdf(&x), bits, RM);
        let up_pows = powers(&upper, n, bits);
        let lo_pows = powers(&lower_tail, n, bits);
        for (idx, sum) in sums.iter_mut().enumerate() {
            let i = idx + 1;
            // node +x minus its mirror -x
            let plus = up_pows[i - 1].mul(&lo_pows[n - i], bits, RM);
            let minus = lo_pows[i - 1].mul(&up_pows[n - i], bits, RM);
            let term = weight.mul(&plus.sub(&minus, bits, RM), bits, RM);
            *sum = sum.add(&term, bits, RM);
        }
    }
    (1..=lower)
        .zip(sums)
        .map(|(i, s)| {
            let coeff = BigInt::from(n as u64) * BigInt::from(binomial(n as u64 - 1, i as u64 - 1));
            let v = s.mul(&h, bits, RM).mul(&from_bigint(&coeff, bits), bits, RM);
            check(v, "normal scores")
        })
        .collect()
}

fn powers(base: &BigFloat, n: usize, bits: usize) -> Vec<BigFloat> {
    let mut out = Vec::with_capacity(n);
    let mut acc = BigFloat::from_word(1, bits);
    for _ in 0..n {
        out.push(acc.clone());
        acc = acc.mul(base, bits, RM);
    }
    out
}
