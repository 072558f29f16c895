//! Exact rational helpers shared by the oracles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn count_ratio(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"`, an integer, or a finite decimal literal like `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::invalid(format!("not a rational literal: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::invalid(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            w => w.parse().map_err(|_| bad())?,
        };
        let frac_num: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(whole * &scale + frac_num, scale);
        return Ok(if negative { -value } else { value });
    }
    let v: BigInt = text.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(v))
}

/// Renders as `"p/q"`, or `"p"` when the value is an integer.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Rounds `x` to the nearest multiple of `1/den`.
pub fn snap_f64(x: f64, den: u64) -> Rational {
    let scaled = (x * den as f64).round();
    Rational::new(BigInt::from(scaled as i128), BigInt::from(den))
}

pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales exact probabilities to integer weights over a shared denominator.
///
/// Fails with a resource-limit error when the common denominator does not
/// fit in 128 bits.
pub fn integer_weights(probs: &[Rational]) -> Result<(Vec<u128>, u128)> {
    let den = common_denominator(probs);
    let total = den
        .to_u128()
        .ok_or_else(|| Error::limit("common probability denominator", &den, u128::MAX))?;
    let weights = probs
        .iter()
        .map(|p| {
            let w = p.numer() * (&den / p.denom());
            w.to_u128()
                .ok_or_else(|| Error::invalid(format!("probability {} out of range", format_rational(p))))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((weights, total))
}
