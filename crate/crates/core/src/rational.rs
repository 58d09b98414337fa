//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct RationalParseError(pub String);

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p`, `-p` or `p/q`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = || RationalParseError(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// Canonical `p/q` text; integers print without a denominator.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn ceil_to_u64(value: &Rational) -> Option<u64> {
    if value.is_negative() {
        return Some(0);
    }
    value.ceil().to_integer().to_u64()
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales every value by `scale` and returns the integral results as `i128`.
/// Returns `None` if some value is not integral after scaling or overflows.
pub fn scaled_integers(values: &[Rational], scale: &BigInt) -> Option<Vec<i128>> {
    values
        .iter()
        .map(|v| {
            let s = v * Rational::from_integer(scale.clone());
            if !s.is_integer() {
                return None;
            }
            s.to_integer().to_i128()
        })
        .collect()
}

/// Closest rational with denominator at most `max_den` to `num/den`.
pub fn nearest_with_bounded_denominator(num: i128, den: i128, max_den: usize) -> Rational {
    debug_assert!(den > 0);
    let target = Rational::new(BigInt::from(num), BigInt::from(den));
    let mut best: Option<(Rational, Rational)> = None;
    for q in 1..=max_den.max(1) {
        let q = BigInt::from(q as u64);
        let scaled = &target * Rational::from_integer(q.clone());
        let p = scaled.round().to_integer();
        let candidate = Rational::new(p, q);
        let dist = (&candidate - &target).abs();
        match &best {
            Some((_, d)) if *d <= dist => {}
            _ => best = Some((candidate, dist)),
        }
    }
    best.map(|(c, _)| c).unwrap_or(target)
}

pub mod serde_text {
    //! Serializes rationals as `p/q` strings and accepts integers or strings.

    use super::{format_rational, parse_rational, Rational};
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};
    use std::fmt;

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }

    pub(crate) struct RationalVisitor;

    impl<'de> Visitor<'de> for RationalVisitor {
        type Value = Rational;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an integer or a \"p/q\" string")
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
            Ok(super::int(v))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
            Ok(Rational::from_integer(v.into()))
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
            Err(E::custom(format!(
                "decimal weight {v} is not accepted; write it as \"p/q\""
            )))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
            parse_rational(v).map_err(E::custom)
        }
    }
}
