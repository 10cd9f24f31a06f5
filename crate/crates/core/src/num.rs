//! Exact rational arithmetic helpers.
//!
//! Costs, weights and penalty coefficients are kept as `Ratio<i128>` so that
//! penalty cancellation and energy identities can be checked exactly. Values
//! enter the system as decimal literals (JSON numbers, CLI flags) and are
//! converted without passing through binary floating point.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

/// Parses a decimal literal such as `"0.01"`, `"-3"`, `"1.5e-3"` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(pos) => (&digits[..pos], &digits[pos + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .bytes()
        .chain(frac_part.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let mut numer: i128 = 0;
    for b in int_part.bytes().chain(frac_part.bytes()) {
        numer = numer.checked_mul(10)?.checked_add(i128::from(b - b'0'))?;
    }
    let scale = exponent - frac_part.len() as i32;
    let pow = 10i128.checked_pow(scale.unsigned_abs())?;
    let value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow)?)
    } else {
        Rational::new(numer, pow)
    };
    Some(if negative { -value } else { value })
}

/// Converts an `f64` through its shortest round-trip decimal representation.
pub fn from_f64_decimal(value: f64) -> Option<Rational> {
    if !value.is_finite() {
        return None;
    }
    parse_decimal(&format!("{value}"))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.numer().to_f64().unwrap_or(f64::NAN) / value.denom().to_f64().unwrap_or(f64::NAN)
}

/// Formats a rational as an exact decimal when the expansion terminates,
/// otherwise as the nearest `f64`.
pub fn format_decimal(value: &Rational) -> String {
    let mut denom = *value.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while denom % 2 == 0 {
        denom /= 2;
        twos += 1;
    }
    while denom % 5 == 0 {
        denom /= 5;
        fives += 1;
    }
    if denom != 1 {
        return format!("{}", to_f64(value));
    }
    let places = twos.max(fives);
    let scaled = match 10i128
        .checked_pow(places)
        .and_then(|p| value.numer().checked_mul(p / value.denom()))
    {
        Some(s) => s,
        None => return format!("{}", to_f64(value)),
    };
    let sign = if scaled.is_negative() { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    if places == 0 {
        return format!("{sign}{abs}");
    }
    let div = 10u128.pow(places);
    let frac = format!("{:0width$}", abs % div, width = places as usize);
    format!("{sign}{}.{}", abs / div, frac)
}

pub fn is_zero(value: &Rational) -> bool {
    value.is_zero()
}

/// Serde adapter storing a rational as a plain JSON number.
pub mod serde_decimal {
    use std::fmt;

    use super::{from_f64_decimal, parse_decimal, to_f64, Rational};
    use serde::de::{Error, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_integer() {
            if let Ok(v) = i64::try_from(*value.numer()) {
                return serializer.serialize_i64(v);
            }
        }
        serializer.serialize_f64(to_f64(value))
    }

    struct DecimalVisitor;

    impl<'de> Visitor<'de> for DecimalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a decimal number or a decimal string")
        }

        fn visit_i64<E: Error>(self, v: i64) -> Result<Rational, E> {
            Ok(Rational::from_integer(i128::from(v)))
        }

        fn visit_u64<E: Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(i128::from(v)))
        }

        fn visit_f64<E: Error>(self, v: f64) -> Result<Rational, E> {
            from_f64_decimal(v).ok_or_else(|| E::custom(format!("not a finite decimal: {v}")))
        }

        fn visit_str<E: Error>(self, v: &str) -> Result<Rational, E> {
            parse_decimal(v).ok_or_else(|| E::custom(format!("`{v}` is not a decimal")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        deserializer.deserialize_any(DecimalVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_and_scientific() {
        assert_eq!(parse_decimal("0.01"), Some(Rational::new(1, 100)));
        assert_eq!(parse_decimal("-2.50"), Some(Rational::new(-5, 2)));
        assert_eq!(parse_decimal("1e-4"), Some(Rational::new(1, 10_000)));
        assert_eq!(parse_decimal("3E2"), Some(Rational::from_integer(300)));
        assert_eq!(parse_decimal(".5"), Some(Rational::new(1, 2)));
        assert_eq!(parse_decimal("abc"), None);
        assert_eq!(parse_decimal("-"), None);
    }

    #[test]
    fn decimal_fields_accept_numbers_and_strings() {
        #[derive(serde::Deserialize)]
        struct W(#[serde(with = "serde_decimal")] Rational);
        let read = |text: &str| serde_json::from_str::<W>(text).map(|w| w.0).ok();
        assert_eq!(read("3"), Some(Rational::from_integer(3)));
        assert_eq!(read("0.0001"), Some(Rational::new(1, 10_000)));
        assert_eq!(read("\"0.0001\""), Some(Rational::new(1, 10_000)));
        assert_eq!(read("\"x\""), None);
        assert_eq!(read("true"), None);
    }

    #[test]
    fn shortest_float_text_is_exact() {
        assert_eq!(from_f64_decimal(0.0001), Some(Rational::new(1, 10_000)));
        assert_eq!(from_f64_decimal(f64::NAN), None);
    }

    #[test]
    fn formats_terminating_decimals_exactly() {
        assert_eq!(format_decimal(&Rational::new(24, 5)), "4.8");
        assert_eq!(format_decimal(&Rational::new(507, 250)), "2.028");
        assert_eq!(format_decimal(&Rational::from_integer(-3)), "-3");
        assert_eq!(format_decimal(&Rational::new(-1, 20)), "-0.05");
        assert!(format_decimal(&Rational::new(1, 3)).starts_with("0.333"));
    }
}
