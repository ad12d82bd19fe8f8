//! Exact rational numbers and their `"p/q"` text encoding.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

/// Builds `num / den` from machine integers. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// The integer `value` as a rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational {:?}: {}", self.input, self.reason)
    }
}

impl std::error::Error for ParseRationalError {}

/// Parses `"p/q"` or a bare integer `"p"`. Whitespace around the parts is not
/// accepted; the denominator must be positive.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: text.to_string(),
        reason,
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let parse_int = |s: &str| -> Result<BigInt, ParseRationalError> {
        let digits = s.strip_prefix('-').unwrap_or(s);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("expected an integer or \"p/q\""));
        }
        s.parse::<BigInt>().map_err(|_| err("integer out of range"))
    };
    let num = parse_int(num)?;
    let den = match den {
        Some(d) => {
            if d.starts_with('-') {
                return Err(err("denominator must be positive"));
            }
            parse_int(d)?
        }
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Canonical `"p/q"` form; integers are written as `"p/1"`.
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Display-only decimal with six significant digits.
pub fn approx(value: &Rational) -> String {
    let x = to_f64(value);
    if x == 0.0 {
        return "0.00000".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// Nearest `f64`, for drawing and display only.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `min(a, b)` by reference.
pub fn min_ref<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if b < a {
        b
    } else {
        a
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty list).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    use num_integer::Integer;
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// `value * scale`, which must be an integer.
pub fn scale_exact(value: &Rational, scale: &BigInt) -> BigInt {
    let scaled = value * Rational::from_integer(scale.clone());
    debug_assert!(scaled.is_integer());
    scaled.to_integer()
}

/// Ceiling of `value * scale`.
pub fn scale_ceil(value: &Rational, scale: &BigInt) -> BigInt {
    (value * Rational::from_integer(scale.clone())).ceil().to_integer()
}

/// Floor of `value * scale`.
pub fn scale_floor(value: &Rational, scale: &BigInt) -> BigInt {
    (value * Rational::from_integer(scale.clone())).floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_integers() {
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-3/9").unwrap(), rat(-1, 3));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("0/5").unwrap(), int(0));
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["1/0", "", "/2", "1/", "a/2", "1/-2", "1.5", " 1/2", "1/2/3"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&rat(6, 8)), "3/4");
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&rat(-2, 6)), "-1/3");
    }

    #[test]
    fn approx_has_six_significant_digits() {
        assert_eq!(approx(&rat(1, 3)), "0.333333");
        assert_eq!(approx(&rat(299, 200)), "1.49500");
        assert_eq!(approx(&int(0)), "0.00000");
        assert_eq!(approx(&int(12)), "12.0000");
    }
}
