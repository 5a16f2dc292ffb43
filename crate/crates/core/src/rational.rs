//! Arbitrary-precision rational helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = BigRational;

/// Builds `num/den` as an exact rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"n"`, `"-n"` or `"n/d"`. Returns `None` for anything else,
/// including a zero denominator.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

pub fn is_nonneg(q: &Rational) -> bool {
    !q.is_negative()
}

/// Least common multiple of all denominators.
pub fn common_denominator<'a>(qs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    use num_integer::Integer;
    qs.into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

pub(crate) fn ser_rational_vec<S: Serializer>(qs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(qs.len()))?;
    for q in qs {
        seq.serialize_element(&fmt_rational(q))?;
    }
    seq.end()
}

pub(crate) fn de_rational_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
    let v = Vec::<String>::deserialize(d)?;
    v.iter()
        .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
        .collect()
}
