//! Exact reals of the form `Σ qᵢ·log₂ rᵢ` with rational `qᵢ` and positive
//! rational `rᵢ`.
//!
//! Every entropy of a finite distribution with rational probabilities has
//! this shape, so values are kept symbolically and compared exactly.
//!
//! Canonical form: a map from integer bases `b ≥ 2` to nonzero rational
//! coefficients, `value = Σ coef_b · log₂ b`, where the bases are pairwise
//! coprime. Bases below 2³² are primes. A cofactor with no prime factor
//! below 2¹⁶ may stay unfactored; such keys are refined by gcd splitting
//! so coprimality always holds. Logarithms of pairwise coprime integers
//! are linearly independent over ℚ, hence the value is zero exactly when
//! the map is empty.
//!
//! [`LogLinValue::sign`] decides the sign of a nonzero value by interval
//! evaluation of natural logarithms in fixed point, doubling the precision
//! until the enclosure excludes zero.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{common_denominator, fmt_rational, parse_rational, Rational};

const TRIAL_LIMIT: u32 = 1 << 16;
const SMALL_LIMIT: u64 = 1 << 32;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_LIMIT as usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < n {
            if sieve[i] {
                let mut j = i * i;
                while j < n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..n).filter(|&k| sieve[k]).map(|k| k as u32).collect()
    })
}

/// Splits `n ≥ 1` into `(base, exponent)` pairs. Bases below 2³² are prime;
/// a remaining cofactor without small factors is returned as one base.
pub(crate) fn factor(n: &BigUint) -> Vec<(BigUint, u32)> {
    if let Some(v) = n.to_u64() {
        return factor_u64(v)
            .into_iter()
            .map(|(p, e)| (BigUint::from(p), e))
            .collect();
    }
    let mut out = Vec::new();
    let mut rest = n.clone();
    for &p in small_primes() {
        let pb = BigUint::from(p);
        let mut e = 0;
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            e += 1;
        }
        if e > 0 {
            out.push((pb, e));
        }
        if rest.is_one() {
            break;
        }
    }
    if !rest.is_one() {
        if let Some(v) = rest.to_u64() {
            out.extend(factor_u64(v).into_iter().map(|(p, e)| (BigUint::from(p), e)));
        } else {
            out.push((rest, 1));
        }
    }
    out
}

fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    for &p in small_primes() {
        let p = p as u64;
        if p * p > n {
            break;
        }
        let mut e = 0;
        while n.is_multiple_of(p) {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    if n > 1 {
        // Either prime (n < 2³²) or a cofactor with no factor below 2¹⁶.
        out.push((n, 1));
    }
    out
}

fn is_small(b: &BigUint) -> bool {
    b.to_u64().is_some_and(|v| v < SMALL_LIMIT)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LogLinValue {
    terms: BTreeMap<BigUint, Rational>,
}

impl LogLinValue {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The rational `q`, i.e. `q·log₂ 2`.
    pub fn rational(q: Rational) -> Self {
        Self::term(q, &Rational::from_integer(BigInt::from(2)))
    }

    /// `q · log₂ r`. Panics if `r ≤ 0`.
    pub fn term(q: Rational, r: &Rational) -> Self {
        assert!(r.is_positive(), "log argument must be positive");
        let mut v = Self::zero();
        if q.is_zero() {
            return v;
        }
        let num = r.numer().magnitude().clone();
        let den = r.denom().magnitude().clone();
        for (b, e) in factor(&num) {
            v.insert(b, &q * Rational::from_integer(BigInt::from(e)));
        }
        for (b, e) in factor(&den) {
            v.insert(b, -&q * Rational::from_integer(BigInt::from(e)));
        }
        v
    }

    /// `q · log₂ n` for a positive integer.
    pub fn log_int(q: Rational, n: u64) -> Self {
        assert!(n > 0);
        let mut v = Self::zero();
        if q.is_zero() || n == 1 {
            return v;
        }
        for (b, e) in factor_u64(n) {
            v.insert(BigUint::from(b), &q * Rational::from_integer(BigInt::from(e)));
        }
        v
    }

    pub fn from_terms<'a>(terms: impl IntoIterator<Item = (&'a Rational, &'a Rational)>) -> Self {
        let mut v = Self::zero();
        for (q, r) in terms {
            v += &Self::term(q.clone(), r);
        }
        v
    }

    /// Canonical `(coefficient, base)` pairs in increasing base order.
    pub fn terms(&self) -> impl Iterator<Item = (&Rational, &BigUint)> {
        self.terms.iter().map(|(b, q)| (q, b))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(q)` when the value is the rational `q`.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&BigUint::from(2u32)).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(b, c)| (b.clone(), c * q)).collect(),
        }
    }

    fn insert(&mut self, base: BigUint, coef: Rational) {
        if base.is_one() || coef.is_zero() {
            return;
        }
        let needs_refine = !is_small(&base) || self.terms.keys().any(|k| !is_small(k));
        if !needs_refine {
            add_coef(&mut self.terms, base, coef);
            return;
        }
        let mut pending: Vec<(BigUint, Rational)> = std::mem::take(&mut self.terms).into_iter().collect();
        pending.push((base, coef));
        self.terms = coprime_refine(pending);
    }

    /// Exact sign: -1, 0 or +1.
    pub fn sign(&self) -> i8 {
        if self.terms.is_empty() {
            return 0;
        }
        let den = common_denominator(self.terms.values());
        let weighted: Vec<(BigInt, &BigUint)> = self
            .terms
            .iter()
            .map(|(b, q)| ((q * Rational::from_integer(den.clone())).to_integer(), b))
            .collect();
        if weighted.iter().all(|(e, _)| !e.is_negative()) {
            return 1;
        }
        if weighted.iter().all(|(e, _)| !e.is_positive()) {
            return -1;
        }
        let mut prec = 64u32;
        loop {
            let ln2 = ln2_fixed(prec);
            let mut sum = BigInt::zero();
            let mut err = BigInt::zero();
            for (e, b) in &weighted {
                let (v, r) = ln_fixed(b, prec, &ln2);
                sum += e * v;
                err += e.abs() * BigInt::from(r);
            }
            if sum > err {
                return 1;
            }
            if sum < -err {
                return -1;
            }
            prec *= 2;
        }
    }

    /// Decimal approximation with `digits` fractional digits, for display only.
    pub fn approx(&self, digits: usize) -> String {
        let prec = (digits as f64 * 3.33) as u32 + 16;
        let ln2 = ln2_fixed(prec);
        let mut sum_nat = BigInt::zero();
        for (b, q) in &self.terms {
            let (v, _) = ln_fixed(b, prec, &ln2);
            let scaled = Rational::from_integer(v) * q;
            sum_nat += scaled.round().to_integer();
        }
        // value in bits = sum_nat / ln2 (both scaled by 2^prec)
        let ten = BigInt::from(10u32).pow(digits as u32);
        let q = Rational::new(sum_nat * ten, ln2.0.clone()).round().to_integer();
        let neg = q.is_negative();
        let mag = q.abs().to_string();
        let mag = if mag.len() <= digits {
            format!("{}{}", "0".repeat(digits + 1 - mag.len()), mag)
        } else {
            mag
        };
        let (int_part, frac) = mag.split_at(mag.len() - digits);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac}")
        }
    }
}

fn add_coef(terms: &mut BTreeMap<BigUint, Rational>, base: BigUint, coef: Rational) {
    let entry = terms.entry(base).or_insert_with(Rational::zero);
    *entry += coef;
    if entry.is_zero() {
        terms.retain(|_, c| !c.is_zero());
    }
}

/// Re-expresses `Σ cᵢ·log bᵢ` over a pairwise coprime basis.
fn coprime_refine(items: Vec<(BigUint, Rational)>) -> BTreeMap<BigUint, Rational> {
    // Each item is tracked as a product of basis elements with exponents.
    let mut basis: Vec<BigUint> = Vec::new();
    let mut decomps: Vec<(Vec<(usize, u32)>, Rational)> = Vec::new();
    for (b, c) in items {
        let idx = basis.len();
        basis.push(b);
        decomps.push((vec![(idx, 1)], c));
    }
    // Split any pair sharing a factor until the basis is coprime.
    loop {
        let mut split = None;
        'outer: for i in 0..basis.len() {
            if basis[i].is_one() {
                continue;
            }
            for j in (i + 1)..basis.len() {
                if basis[j].is_one() {
                    continue;
                }
                let g = basis[i].gcd(&basis[j]);
                if !g.is_one() {
                    split = Some((i, j, g));
                    break 'outer;
                }
            }
        }
        let Some((i, j, g)) = split else { break };
        if basis[i] == basis[j] {
            // Duplicate element: redirect j to i.
            basis[j] = BigUint::one();
            for (d, _) in decomps.iter_mut() {
                for t in d.iter_mut() {
                    if t.0 == j {
                        t.0 = i;
                    }
                }
            }
            continue;
        }
        // basis[i] = g * (bi/g), basis[j] = g * (bj/g)
        let gi = basis.len();
        basis.push(g.clone());
        let bi = &basis[i] / &g;
        let bj = &basis[j] / &g;
        basis[i] = bi;
        basis[j] = bj;
        for (d, _) in decomps.iter_mut() {
            let mut extra = 0;
            for t in d.iter() {
                if t.0 == i || t.0 == j {
                    extra += t.1;
                }
            }
            if extra > 0 {
                d.push((gi, extra));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (d, c) in decomps {
        for (idx, e) in d {
            if basis[idx].is_one() {
                continue;
            }
            add_coef(&mut out, basis[idx].clone(), &c * Rational::from_integer(BigInt::from(e)));
        }
    }
    // Bases that are perfect powers of a common root are already merged by
    // the gcd splitting above (x and x^k share the factor x).
    out
}

/// `2·atanh(num/den)` in fixed point with `w` fractional bits, plus an
/// absolute error bound in ulps. Requires `0 ≤ num/den ≤ 1/3`.
fn two_atanh_fixed(num: &BigUint, den: &BigUint, w: u32) -> (BigInt, u64) {
    let one = BigUint::one() << w;
    let mut pw = (&one * num) / den; // z·2^w
    let num2 = num * num;
    let den2 = den * den;
    let mut sum = BigUint::zero();
    let mut j: u64 = 0;
    while !pw.is_zero() {
        sum += &pw / BigUint::from(2 * j + 1);
        pw = (&pw * &num2) / &den2;
        j += 1;
    }
    // Truncation: each pw step adds ≤1 ulp error, each division ≤1 ulp, tail
    // bounded by the accumulated error over 1 - z² ≥ 8/9.
    let err = 2 * (4 * j + 4);
    (BigInt::from_biguint(Sign::Plus, sum * 2u32), err)
}

/// ln 2 at `prec` fractional bits: `(value, error)`.
fn ln2_fixed(prec: u32) -> (BigInt, u64) {
    let guard = 40;
    let (v, e) = two_atanh_fixed(&BigUint::one(), &BigUint::from(3u32), prec + guard);
    let v = v >> guard;
    (v, e.div_ceil(1 << guard) + 1)
}

/// ln b at `prec` fractional bits with an error bound in ulps.
fn ln_fixed(b: &BigUint, prec: u32, ln2: &(BigInt, u64)) -> (BigInt, u64) {
    let k = b.bits() - 1;
    let pow = BigUint::one() << k;
    let guard = 40u32;
    let w = prec + guard;
    let (frac, frac_err) = if *b == pow {
        (BigInt::zero(), 0)
    } else {
        let (v, e) = two_atanh_fixed(&(b - &pow), &(b + &pow), w);
        (v >> guard, e.div_ceil(1 << guard) + 1)
    };
    let k_big = BigInt::from(k);
    let value = &k_big * &ln2.0 + frac;
    let err = k * ln2.1 + frac_err;
    (value, err)
}

impl Neg for LogLinValue {
    type Output = LogLinValue;
    fn neg(self) -> LogLinValue {
        LogLinValue {
            terms: self.terms.into_iter().map(|(b, c)| (b, -c)).collect(),
        }
    }
}

impl Neg for &LogLinValue {
    type Output = LogLinValue;
    fn neg(self) -> LogLinValue {
        -(self.clone())
    }
}

impl AddAssign<&LogLinValue> for LogLinValue {
    fn add_assign(&mut self, rhs: &LogLinValue) {
        for (b, c) in &rhs.terms {
            self.insert(b.clone(), c.clone());
        }
    }
}

impl Add for &LogLinValue {
    type Output = LogLinValue;
    fn add(self, rhs: &LogLinValue) -> LogLinValue {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &LogLinValue {
    type Output = LogLinValue;
    fn sub(self, rhs: &LogLinValue) -> LogLinValue {
        let mut out = self.clone();
        out += &(-rhs);
        out
    }
}

impl fmt::Display for LogLinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let two = BigUint::from(2u32);
        let mut first = true;
        let mut parts: Vec<String> = Vec::new();
        if let Some(q) = self.terms.get(&two) {
            parts.push(fmt_rational(q));
        }
        for (b, q) in &self.terms {
            if *b == two {
                continue;
            }
            parts.push(format!("{}*log2({})", fmt_rational(q), b));
        }
        for p in parts {
            if first {
                write!(f, "{p}")?;
                first = false;
            } else if let Some(rest) = p.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {p}")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    q: String,
    r: String,
}

impl Serialize for LogLinValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(b, q)| TermJson {
                q: fmt_rational(q),
                r: b.to_string(),
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogLinValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<TermJson>::deserialize(d)?;
        let mut out = LogLinValue::zero();
        for t in v {
            let q = parse_rational(&t.q).ok_or_else(|| serde::de::Error::custom("bad q"))?;
            let r = parse_rational(&t.r).ok_or_else(|| serde::de::Error::custom("bad r"))?;
            if !r.is_positive() {
                return Err(serde::de::Error::custom("log argument must be positive"));
            }
            out += &LogLinValue::term(q, &r);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn v(terms: &[(Rational, Rational)]) -> LogLinValue {
        LogLinValue::from_terms(terms.iter().map(|(a, b)| (a, b)))
    }

    #[test]
    fn log_two_is_positive() {
        assert_eq!(v(&[(int(1), int(2))]).sign(), 1);
    }

    #[test]
    fn exponents_cancel_exactly() {
        // 2·log 3 − 3·log 2 + log(8/9)
        let x = v(&[(int(2), int(3)), (int(-3), int(2)), (int(1), rat(8, 9))]);
        assert!(x.is_zero());
        assert_eq!(x.sign(), 0);
    }

    #[test]
    fn fractional_exponents_cancel() {
        let x = v(&[
            (rat(1, 2), int(2)),
            (rat(1, 2), int(2)),
            (rat(3, 4), int(4)),
            (rat(-5, 2), int(2)),
        ]);
        assert_eq!(x.sign(), 0);
    }

    #[test]
    fn close_values_are_separated() {
        // log2(3^12) vs log2(2^19): 531441 vs 524288
        let x = v(&[(int(12), int(3)), (int(-19), int(2))]);
        assert_eq!(x.sign(), 1);
        // 3^665 and 2^1054 agree to about three decimal digits.
        let y = v(&[(int(665), int(3)), (int(-1054), int(2))]);
        let lhs = BigUint::from(3u32).pow(665);
        let rhs = BigUint::from(2u32).pow(1054);
        let expected = if lhs > rhs { 1 } else { -1 };
        assert_eq!(y.sign(), expected);
    }

    #[test]
    fn large_cofactors_are_refined() {
        // p, q primes above 2^32; log(pq) - log p - log q = 0
        let p = 4_294_967_311u64;
        let q = 4_294_967_357u64;
        let pq = BigUint::from(p) * BigUint::from(q);
        let pq_r = Rational::from_integer(BigInt::from_biguint(Sign::Plus, pq));
        let x = v(&[
            (int(1), pq_r),
            (int(-1), Rational::from_integer(BigInt::from(p))),
            (int(-1), Rational::from_integer(BigInt::from(q))),
        ]);
        assert!(x.is_zero());
    }

    #[test]
    fn squares_of_large_cofactors_merge() {
        let p = BigUint::from(4_294_967_311u64) * BigUint::from(4_294_967_357u64);
        let p2 = &p * &p;
        let r1 = Rational::from_integer(BigInt::from_biguint(Sign::Plus, p));
        let r2 = Rational::from_integer(BigInt::from_biguint(Sign::Plus, p2));
        let x = v(&[(int(2), r1), (int(-1), r2)]);
        assert!(x.is_zero());
    }

    #[test]
    fn approx_prints_decimal() {
        assert_eq!(LogLinValue::rational(rat(3, 2)).approx(3), "1.500");
        assert_eq!(LogLinValue::log_int(int(1), 3).approx(5), "1.58496");
        assert_eq!(LogLinValue::rational(rat(-1, 4)).approx(2), "-0.25");
    }

    #[test]
    fn display_and_json_are_canonical() {
        let x = &LogLinValue::rational(rat(3, 2)) + &LogLinValue::log_int(rat(-1, 2), 3);
        assert_eq!(x.to_string(), "3/2 - 1/2*log2(3)");
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, r#"[{"q":"3/2","r":"2"},{"q":"-1/2","r":"3"}]"#);
        let back: LogLinValue = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
    }
}
