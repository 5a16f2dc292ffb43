//! Finite joint distributions with rational probabilities, their exact
//! entropic vectors, and a canonical enumeration of all such distributions
//! within a budget.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::EntropicCandidate;
use crate::error::{BicError, Result};
use crate::expr::{VarSet, MAX_VARS};
use crate::loglin::LogLinValue;
use crate::rational::{fmt_rational, parse_rational, Rational};

/// A joint pmf over `X₁ … Xₙ` with `Xᵢ ∈ {0, …, dᵢ−1}`. Outcomes are stored
/// densely in mixed radix with `X₁` most significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Distribution {
    dims: Vec<usize>,
    probs: Vec<Rational>,
}

impl Distribution {
    pub fn new(dims: Vec<usize>, probs: Vec<Rational>) -> Result<Self> {
        if dims.len() > MAX_VARS {
            return Err(BicError::VariableCount(dims.len()));
        }
        if dims.contains(&0) {
            return Err(BicError::Invalid("domain sizes must be positive".into()));
        }
        let size = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        if size != Some(probs.len()) {
            return Err(BicError::Invalid(format!(
                "domain {:?} needs {} probabilities, got {}",
                dims,
                size.map_or("too many".to_string(), |s| s.to_string()),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| p.is_negative()) {
            return Err(BicError::Invalid(format!("negative probability {}", fmt_rational(p))));
        }
        let total: Rational = probs.iter().sum();
        if !total.is_one() {
            return Err(BicError::Invalid(format!("probabilities sum to {}, not 1", fmt_rational(&total))));
        }
        Ok(Distribution { dims, probs })
    }

    pub fn from_pmf(dims: Vec<usize>, pmf: &BTreeMap<Vec<usize>, Rational>) -> Result<Self> {
        let size: usize = dims.iter().product();
        let mut probs = vec![Rational::zero(); size];
        for (x, p) in pmf {
            if x.len() != dims.len() || x.iter().zip(&dims).any(|(v, d)| v >= d) {
                return Err(BicError::Invalid(format!("outcome {x:?} outside domain {dims:?}")));
            }
            probs[encode(&dims, x)] += p;
        }
        Self::new(dims, probs)
    }

    pub fn point_mass(n: usize) -> Self {
        Distribution {
            dims: vec![1; n],
            probs: vec![Rational::one()],
        }
    }

    pub fn uniform(dims: Vec<usize>) -> Self {
        let size: usize = dims.iter().product();
        let p = Rational::new(BigInt::one(), BigInt::from(size));
        Distribution {
            dims,
            probs: vec![p; size],
        }
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn prob(&self, x: &[usize]) -> Rational {
        self.probs[encode(&self.dims, x)].clone()
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    /// Outcomes with positive probability, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = (Vec<usize>, &Rational)> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| (decode(&self.dims, i), p))
    }

    /// The joint law of the variables in `alpha`, in increasing index order.
    pub fn marginal(&self, alpha: VarSet) -> Distribution {
        let keep: Vec<usize> = alpha.iter().filter(|&i| i < self.n()).collect();
        let dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let size: usize = dims.iter().product();
        let mut probs = vec![Rational::zero(); size];
        for (i, p) in self.probs.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let x = decode(&self.dims, i);
            let y: Vec<usize> = keep.iter().map(|&k| x[k]).collect();
            probs[encode(&dims, &y)] += p;
        }
        Distribution { dims, probs }
    }

    /// Independent product: the variables of `self` followed by those of `other`.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for p in &self.probs {
            for q in &other.probs {
                probs.push(p * q);
            }
        }
        Distribution { dims, probs }
    }

    /// `H = −Σ p log₂ p` of the joint law, exactly.
    pub fn entropy(&self) -> LogLinValue {
        let den = self
            .probs
            .iter()
            .fold(BigInt::one(), |l, p| l.lcm(p.denom()));
        let counts: Vec<BigInt> = self
            .probs
            .iter()
            .filter(|p| !p.is_zero())
            .map(|p| (p * Rational::from_integer(den.clone())).to_integer())
            .collect();
        entropy_of_counts(&counts, &den)
    }

    /// `h(α) = H(X_α)` for every `α ⊆ [n]`.
    pub fn entropic_vector(&self) -> EntropicCandidate {
        let n = self.n();
        let den = self
            .probs
            .iter()
            .fold(BigInt::one(), |l, p| l.lcm(p.denom()));
        let atoms: Vec<(Vec<usize>, BigInt)> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(i, p)| (decode(&self.dims, i), (p * Rational::from_integer(den.clone())).to_integer()))
            .collect();
        let mut values = Vec::with_capacity(1 << n);
        for alpha in VarSet::all(n) {
            if alpha.is_empty() {
                values.push(LogLinValue::zero());
                continue;
            }
            let mut marg: BTreeMap<Vec<usize>, BigInt> = BTreeMap::new();
            for (x, k) in &atoms {
                let key: Vec<usize> = alpha.iter().map(|i| x[i]).collect();
                *marg.entry(key).or_insert_with(BigInt::zero) += k;
            }
            let counts: Vec<BigInt> = marg.into_values().collect();
            values.push(entropy_of_counts(&counts, &den));
        }
        EntropicCandidate::from_values(n, values).expect("entropic vector shape")
    }

    pub fn to_json(&self) -> DistributionJson {
        DistributionJson {
            dims: self.dims.clone(),
            pmf: self
                .support()
                .map(|(x, p)| AtomJson {
                    x,
                    p: fmt_rational(p),
                })
                .collect(),
        }
    }

    /// Parses the text format: `vars d₁ … dₙ`, then `x₁ … xₙ num/den` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut dims: Option<Vec<usize>> = None;
        let mut pmf = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| BicError::Invalid(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match &dims {
                None => {
                    if fields[0] != "vars" {
                        return Err(bad("expected header 'vars d1 ... dn'"));
                    }
                    let d: std::result::Result<Vec<usize>, _> = fields[1..].iter().map(|f| f.parse()).collect();
                    let d = d.map_err(|_| bad("domain sizes must be positive integers"))?;
                    if d.is_empty() {
                        return Err(bad("no variables"));
                    }
                    dims = Some(d);
                }
                Some(d) => {
                    if fields.len() != d.len() + 1 {
                        return Err(bad(&format!("expected {} outcome values and a probability", d.len())));
                    }
                    let x: std::result::Result<Vec<usize>, _> = fields[..d.len()].iter().map(|f| f.parse()).collect();
                    let x = x.map_err(|_| bad("outcome values must be natural numbers"))?;
                    let p = parse_rational(fields[d.len()]).ok_or_else(|| bad("probability must be a rational num/den"))?;
                    if pmf.insert(x, p).is_some() {
                        return Err(bad("duplicate outcome"));
                    }
                }
            }
        }
        let dims = dims.ok_or_else(|| BicError::Invalid("missing 'vars' header".into()))?;
        Self::from_pmf(dims, &pmf)
    }
}

impl fmt::Display for Distribution {
    /// The text format accepted by [`Distribution::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        writeln!(f, "vars {}", dims.join(" "))?;
        for (x, p) in self.support() {
            let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{} {}", xs.join(" "), fmt_rational(p))?;
        }
        Ok(())
    }
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomJson {
    pub x: Vec<usize>,
    pub p: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub dims: Vec<usize>,
    pub pmf: Vec<AtomJson>,
}

fn encode(dims: &[usize], x: &[usize]) -> usize {
    dims.iter().zip(x).fold(0, |acc, (d, v)| acc * d + v)
}

fn decode(dims: &[usize], mut i: usize) -> Vec<usize> {
    let mut x = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        x[k] = i % dims[k];
        i /= dims[k];
    }
    x
}

/// `log L − (1/L) Σ k log k` for positive counts `k` summing to `L`.
fn entropy_of_counts(counts: &[BigInt], total: &BigInt) -> LogLinValue {
    let mut v = LogLinValue::zero();
    let inv = Rational::new(BigInt::one(), total.clone());
    if let (Some(t), true) = (total.to_u64(), counts.iter().all(|k| k.to_u64().is_some())) {
        v += &LogLinValue::log_int(Rational::one(), t);
        for k in counts {
            let k64 = k.to_u64().expect("checked");
            v += &LogLinValue::log_int(-(&inv * k), k64);
        }
    } else {
        v += &LogLinValue::term(Rational::one(), &Rational::from_integer(total.clone()));
        for k in counts {
            v += &LogLinValue::term(-(&inv * k), &Rational::from_integer(k.clone()));
        }
    }
    v
}

fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Number of weak compositions of `total` into `parts` nonnegative parts.
fn compositions(total: u64, parts: u64) -> Option<u64> {
    if parts == 0 {
        return Some(u64::from(total == 0));
    }
    binomial(total + parts - 1, parts - 1)
}

#[derive(Clone, Debug)]
struct Block {
    dprime: u64,
    dims: Vec<usize>,
    offset: u64,
    count: u64,
}

/// The canonical stream of distributions on `n` variables with domain sizes
/// at most `s` and probabilities that are multiples of `1/D′` for `D′ ≤ D`.
///
/// Order: increasing `D′`; then domain shapes by increasing outcome count,
/// ties broken lexicographically; then numerator tuples over the outcomes
/// in lexicographic order. Tuples whose numerators share a factor with `D′`
/// occur earlier at a smaller denominator and are skipped, so every index
/// maps to at most one distribution and no distribution repeats within a
/// shape. Indices form a contiguous range `0..len()`; skipped indices yield
/// `None`, which lets consumers split the stream into independent ranges.
#[derive(Clone, Debug)]
pub struct DistributionStream {
    n: usize,
    blocks: Vec<Block>,
    len: u64,
}

impl DistributionStream {
    pub fn new(n: usize, s: usize, d: u64) -> Result<Self> {
        if n == 0 || n > MAX_VARS {
            return Err(BicError::VariableCount(n));
        }
        let mut shapes: Vec<Vec<usize>> = Vec::new();
        if s >= 1 {
            let count = s.checked_pow(n as u32).ok_or_else(|| BicError::Invalid("budget too large to index".into()))?;
            let radix = vec![s; n];
            shapes = (0..count)
                .map(|i| decode(&radix, i).into_iter().map(|v| v + 1).collect())
                .collect();
        }
        shapes.sort_by_key(|dims| (dims.iter().product::<usize>(), dims.clone()));
        let too_big = || BicError::Invalid("budget too large to index".into());
        let mut blocks = Vec::new();
        let mut offset = 0u64;
        for dprime in 1..=d {
            for dims in &shapes {
                let cells: usize = dims.iter().product();
                let count = compositions(dprime, cells as u64).ok_or_else(too_big)?;
                blocks.push(Block {
                    dprime,
                    dims: dims.clone(),
                    offset,
                    count,
                });
                offset = offset.checked_add(count).ok_or_else(too_big)?;
            }
        }
        Ok(DistributionStream { n, blocks, len: offset })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The distribution at `index`, or `None` for a skipped index.
    pub fn get(&self, index: u64) -> Option<Distribution> {
        if index >= self.len {
            return None;
        }
        let b = match self.blocks.binary_search_by(|b| b.offset.cmp(&index)) {
            Ok(mut i) => {
                while self.blocks[i].count == 0 {
                    i += 1;
                }
                &self.blocks[i]
            }
            Err(i) => &self.blocks[i - 1],
        };
        let cells: usize = b.dims.iter().product();
        let nums = unrank_composition(b.dprime, cells, index - b.offset);
        let g = nums.iter().fold(b.dprime, |g, &k| g.gcd(&k));
        if g > 1 {
            return None;
        }
        let den = BigInt::from(b.dprime);
        let probs = nums
            .into_iter()
            .map(|k| Rational::new(BigInt::from(k), den.clone()))
            .collect();
        Some(Distribution {
            dims: b.dims.clone(),
            probs,
        })
    }

    /// All distributions in canonical order, with their stream indices.
    pub fn iter(&self) -> impl Iterator<Item = (u64, Distribution)> + '_ {
        (0..self.len).filter_map(move |i| self.get(i).map(|d| (i, d)))
    }

    /// A uniformly chosen index that is not skipped.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<(u64, Distribution)> {
        if self.len == 0 {
            return None;
        }
        loop {
            let i = rng.gen_range(0..self.len);
            if let Some(d) = self.get(i) {
                return Some((i, d));
            }
        }
    }
}

/// The `rank`-th weak composition of `total` into `parts` parts in
/// lexicographic order of the tuple.
fn unrank_composition(total: u64, parts: usize, mut rank: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(parts);
    let mut left = total;
    for i in 0..parts {
        let rest = (parts - i - 1) as u64;
        if rest == 0 {
            out.push(left);
            break;
        }
        let mut v = 0;
        loop {
            let c = compositions(left - v, rest).expect("indexed block");
            if rank < c {
                break;
            }
            rank -= c;
            v += 1;
        }
        out.push(v);
        left -= v;
    }
    out
}

/// Convenience wrapper over [`DistributionStream`].
pub fn enumerate_distributions(n: usize, s: usize, d: u64) -> Result<impl Iterator<Item = Distribution>> {
    let stream = DistributionStream::new(n, s, d)?;
    Ok((0..stream.len()).filter_map(move |i| stream.get(i)))
}

/// `h(α) ≤ Σ_{i∈α} log₂ dᵢ`, as an exact check.
pub fn within_support_bound(dist: &Distribution, h: &EntropicCandidate) -> bool {
    VarSet::all(dist.n()).all(|alpha| {
        let size: u64 = alpha.iter().map(|i| dist.dims[i] as u64).product();
        let bound = LogLinValue::log_int(Rational::one(), size);
        (&bound - h.get(alpha)).sign() >= 0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn xor() -> Distribution {
        let mut pmf = BTreeMap::new();
        for x in 0..2 {
            for y in 0..2 {
                pmf.insert(vec![x, y, x ^ y], rat(1, 4));
            }
        }
        Distribution::from_pmf(vec![2, 2, 2], &pmf).unwrap()
    }

    #[test]
    fn fair_bit_has_one_bit() {
        let h = Distribution::uniform(vec![2]).entropic_vector();
        assert_eq!(h.get(VarSet(1)).as_rational(), Some(int(1)));
    }

    #[test]
    fn three_halves() {
        let d = Distribution::new(vec![3], vec![rat(1, 2), rat(1, 4), rat(1, 4)]).unwrap();
        assert_eq!(d.entropy().as_rational(), Some(rat(3, 2)));
    }

    #[test]
    fn xor_entropies() {
        let h = xor().entropic_vector();
        for s in 1..8u32 {
            let expect = if s.count_ones() == 1 { 1 } else { 2 };
            assert_eq!(h.get(VarSet(s)).as_rational(), Some(int(expect)), "subset {s}");
        }
    }

    #[test]
    fn marginals() {
        let d = xor();
        assert_eq!(d.marginal(VarSet(0b011)), Distribution::uniform(vec![2, 2]));
        assert_eq!(d.marginal(VarSet(0b111)), d);
        let e = d.marginal(VarSet::EMPTY);
        assert_eq!(e.probs(), &[int(1)]);
        assert_eq!(e.n(), 0);
    }

    #[test]
    fn small_stream_order() {
        let all: Vec<Vec<Rational>> = enumerate_distributions(1, 2, 2).unwrap().map(|d| d.probs().to_vec()).collect();
        assert_eq!(
            all,
            vec![vec![int(1)], vec![int(0), int(1)], vec![int(1), int(0)], vec![rat(1, 2), rat(1, 2)]]
        );
        let one: Vec<Distribution> = enumerate_distributions(1, 1, 1).unwrap().collect();
        assert_eq!(one, vec![Distribution::point_mass(1)]);
        assert_eq!(enumerate_distributions(2, 0, 3).unwrap().count(), 0);
        assert_eq!(enumerate_distributions(2, 3, 0).unwrap().count(), 0);
    }

    #[test]
    fn xor_is_enumerated() {
        let target = xor();
        assert!(enumerate_distributions(3, 2, 4).unwrap().any(|d| d == target));
    }

    #[test]
    fn stream_has_no_duplicates() {
        let all: Vec<Distribution> = enumerate_distributions(2, 2, 4).unwrap().collect();
        let set: std::collections::HashSet<&Distribution> = all.iter().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn unranking_matches_sequential_lex_order() {
        let mut prev: Option<Vec<u64>> = None;
        let total = compositions(5, 4).unwrap();
        for r in 0..total {
            let c = unrank_composition(5, 4, r);
            assert_eq!(c.iter().sum::<u64>(), 5);
            if let Some(p) = prev {
                assert!(p < c);
            }
            prev = Some(c);
        }
    }

    #[test]
    fn text_format_round_trips() {
        let d = xor();
        let text = d.to_string();
        assert!(text.starts_with("vars 2 2 2\n0 0 0 1/4\n"));
        assert_eq!(Distribution::parse(&text).unwrap(), d);
        assert!(Distribution::parse("vars 2\n0 1/2\n").is_err());
        assert!(Distribution::parse("vars 2\n0 1/2\n2 1/2\n").is_err());
    }

    #[test]
    fn support_bound_holds() {
        for d in enumerate_distributions(2, 3, 3).unwrap() {
            assert!(within_support_bound(&d, &d.entropic_vector()));
        }
    }
}
