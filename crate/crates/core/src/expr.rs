//! Variable subsets and rational linear functionals over entropy vectors.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{BicError, Result};
use crate::rational::{fmt_rational, parse_rational, Rational};

pub const MAX_VARS: usize = 16;

/// A subset of `[n]` as a bit mask; bit `i` stands for variable `Xᵢ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarSet(pub u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(i: usize) -> Self {
        VarSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        VarSet(((1u64 << n) - 1) as u32)
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        VarSet(idx.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, o: VarSet) -> VarSet {
        VarSet(self.0 | o.0)
    }

    pub fn intersect(self, o: VarSet) -> VarSet {
        VarSet(self.0 & o.0)
    }

    pub fn minus(self, o: VarSet) -> VarSet {
        VarSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: VarSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_disjoint(self, o: VarSet) -> bool {
        self.0 & o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    /// All subsets of `[n]` in index order, `∅` first.
    pub fn all(n: usize) -> impl Iterator<Item = VarSet> {
        (0..(1u32 << n)).map(VarSet)
    }
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_VARS {
        Err(BicError::VariableCount(n))
    } else {
        Ok(())
    }
}

/// `c · h = Σ_α c_α h(α)` with rational coefficients. The coefficient on `∅`
/// is always zero and zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinExpr {
    n: usize,
    coeffs: BTreeMap<VarSet, Rational>,
}

impl LinExpr {
    pub fn zero(n: usize) -> Self {
        LinExpr {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `h(α)`.
    pub fn h(n: usize, set: VarSet) -> Self {
        let mut e = Self::zero(n);
        e.add_term(set, Rational::one());
        e
    }

    /// `h(Y|X) = h(XY) − h(X)`.
    pub fn cond_entropy(n: usize, y: VarSet, x: VarSet) -> Self {
        &Self::h(n, x.union(y)) - &Self::h(n, x)
    }

    /// `I(Y;Z|X) = h(XY) + h(XZ) − h(XYZ) − h(X)`.
    pub fn mutual_info(n: usize, y: VarSet, z: VarSet, x: VarSet) -> Self {
        let mut e = Self::h(n, x.union(y));
        e.add_term(x.union(z), Rational::one());
        e.add_term(x.union(y).union(z), -Rational::one());
        e.add_term(x, -Rational::one());
        e
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (VarSet, Rational)>) -> Self {
        let mut e = Self::zero(n);
        for (s, c) in terms {
            e.add_term(s, c);
        }
        e
    }

    /// Adds `c·h(set)`; terms on `∅` are dropped since `h(∅) = 0`.
    pub fn add_term(&mut self, set: VarSet, c: Rational) {
        debug_assert!(set.is_subset(VarSet::full(self.n)), "subset outside [n]");
        if set.is_empty() || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(set).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&set);
        }
    }

    pub fn coeff(&self, set: VarSet) -> Rational {
        self.coeffs.get(&set).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarSet, &Rational)> {
        self.coeffs.iter().map(|(s, c)| (*s, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Union of all subsets with a nonzero coefficient.
    pub fn support_vars(&self) -> VarSet {
        self.coeffs.keys().fold(VarSet::EMPTY, |a, s| a.union(*s))
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() {
            return Self::zero(self.n);
        }
        LinExpr {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(s, c)| (*s, c * q)).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, q: &Rational) {
        debug_assert_eq!(self.n, other.n);
        if q.is_zero() {
            return;
        }
        for (s, c) in &other.coeffs {
            self.add_term(*s, c * q);
        }
    }

    /// Dense coefficient vector of length `2ⁿ` (index = mask).
    pub fn to_dense(&self) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); 1 << self.n];
        for (s, c) in &self.coeffs {
            v[s.index()] = c.clone();
        }
        v
    }

    pub fn from_dense(n: usize, v: &[Rational]) -> Self {
        Self::from_terms(n, v.iter().enumerate().map(|(i, c)| (VarSet(i as u32), c.clone())))
    }

    /// Dot product with a rational vector indexed by mask.
    pub fn dot(&self, h: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .fold(Rational::zero(), |acc, (s, c)| acc + c * &h[s.index()])
    }

    /// Evaluation on the basic modular function `h⁽ʲ⁾` (1 on sets containing j).
    pub fn on_basic_modular(&self, j: usize) -> Rational {
        self.coeffs
            .iter()
            .filter(|(s, _)| s.contains(j))
            .fold(Rational::zero(), |acc, (_, c)| acc + c)
    }

    /// Lifts into `n' ≥ n` variables (new variables unused).
    pub fn widen(&self, n: usize) -> Self {
        assert!(n >= self.n);
        LinExpr {
            n,
            coeffs: self.coeffs.clone(),
        }
    }

    pub(crate) fn same_n(&self, other: &LinExpr) -> Result<()> {
        if self.n != other.n {
            return Err(BicError::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }
}

impl Add for &LinExpr {
    type Output = LinExpr;
    fn add(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &Rational::one());
        out
    }
}

impl Sub for &LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, &-Rational::one());
        out
    }
}

impl Neg for &LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = default_names(self.n);
        f.write_str(&crate::parser::format_expr(self, &names))
    }
}

/// Default single-letter names `X Y Z U V W A B …`, so juxtaposed sets such
/// as `H(XYZ)` stay readable.
pub fn default_names(n: usize) -> Vec<String> {
    const LETTERS: &[u8] = b"XYZUVWABCDEFGHJK";
    (0..n).map(|i| (LETTERS[i] as char).to_string()).collect()
}

#[derive(Serialize, Deserialize)]
struct LinExprJson {
    n: usize,
    coeffs: BTreeMap<u32, String>,
}

impl Serialize for LinExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LinExprJson {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(k, c)| (k.0, fmt_rational(c))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = LinExprJson::deserialize(d)?;
        if j.n == 0 || j.n > MAX_VARS {
            return Err(serde::de::Error::custom("n out of range"));
        }
        let mut e = LinExpr::zero(j.n);
        for (k, c) in j.coeffs {
            if k >= (1u32 << j.n) {
                return Err(serde::de::Error::custom("subset outside [n]"));
            }
            let c = parse_rational(&c).ok_or_else(|| serde::de::Error::custom("bad coefficient"))?;
            e.add_term(VarSet(k), c);
        }
        Ok(e)
    }
}
