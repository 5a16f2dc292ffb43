//! Entropic vectors that do not come from an explicit distribution: modular
//! functions and rank functions of subspace arrangements over GF(q).

use std::fmt;

use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::EntropicCandidate;
use crate::error::{BicError, Result};
use crate::expr::{check_n, VarSet};
use crate::loglin::LogLinValue;
use crate::rational::{fmt_rational, Rational};

/// `h(α) = Σ_{j∈α} wⱼ` for nonnegative weights.
pub fn modular(weights: &[Rational]) -> Result<EntropicCandidate> {
    check_n(weights.len())?;
    if let Some(w) = weights.iter().find(|w| w.is_negative()) {
        return Err(BicError::NegativeWeight(fmt_rational(w)));
    }
    let values = VarSet::all(weights.len())
        .map(|a| LogLinValue::rational(a.iter().map(|j| weights[j].clone()).sum()))
        .collect();
    EntropicCandidate::from_values(weights.len(), values)
}

/// The basic modular function `h⁽ʲ⁾`: 1 on every set containing `j`.
pub fn basic_modular(n: usize, j: usize) -> EntropicCandidate {
    let mut w = vec![Rational::zero(); n];
    w[j] = Rational::from_integer(1.into());
    modular(&w).expect("nonnegative")
}

pub fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}

fn inv_mod(a: u64, q: u64) -> u64 {
    let mut r = 1u64;
    let mut b = a % q;
    let mut e = q - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    r
}

/// Reduced row echelon form of `rows` over GF(q); returns the nonzero rows.
pub fn rref(rows: &[Vec<u64>], q: u64) -> Vec<Vec<u64>> {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % q).collect()).collect();
    let width = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..m.len()).find(|&i| m[i][col] != 0) else { continue };
        m.swap(rank, p);
        let inv = inv_mod(m[rank][col], q);
        for v in m[rank].iter_mut() {
            *v = *v * inv % q;
        }
        let pivot = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && row[col] != 0 {
                let f = row[col];
                for (v, pv) in row.iter_mut().zip(&pivot) {
                    *v = (*v + q * q - f * pv % q) % q;
                }
            }
        }
        rank += 1;
    }
    m.truncate(rank);
    m
}

pub fn rank_mod(rows: &[Vec<u64>], q: u64) -> usize {
    rref(rows, q).len()
}

/// `n` subspaces of GF(q)^d, each given by a list of basis vectors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VectorSpaceSystem {
    pub q: u64,
    pub d: usize,
    pub subspaces: Vec<Vec<Vec<u64>>>,
}

impl VectorSpaceSystem {
    pub fn new(q: u64, d: usize, subspaces: Vec<Vec<Vec<u64>>>) -> Result<Self> {
        if !is_prime(q) || q > u32::MAX as u64 {
            return Err(BicError::Invalid(format!("field size {q} is not a supported prime")));
        }
        check_n(subspaces.len())?;
        for (index, basis) in subspaces.iter().enumerate() {
            if basis.iter().any(|v| v.len() != d || v.iter().any(|&x| x >= q)) {
                return Err(BicError::Invalid(format!(
                    "subspace {index}: basis vectors must have {d} entries in 0..{q}"
                )));
            }
            let rank = rank_mod(basis, q);
            if rank < basis.len() {
                return Err(BicError::SingularBasis {
                    index,
                    rank,
                    columns: basis.len(),
                });
            }
        }
        Ok(VectorSpaceSystem { q, d, subspaces })
    }

    pub fn n(&self) -> usize {
        self.subspaces.len()
    }

    /// `dim span(∪_{i∈α} Vᵢ)`.
    pub fn rank(&self, alpha: VarSet) -> usize {
        let rows: Vec<Vec<u64>> = alpha.iter().flat_map(|i| self.subspaces[i].iter().cloned()).collect();
        rank_mod(&rows, self.q)
    }

    /// Parses `q d n`, then per subspace a line `k` followed by the `d × k`
    /// basis matrix in row-major order (columns are basis vectors).
    pub fn parse(text: &str) -> Result<Self> {
        let mut nums = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                let v: u64 = tok
                    .parse()
                    .map_err(|_| BicError::Invalid(format!("line {}: expected a natural number, found {tok:?}", lineno + 1)))?;
                nums.push(v);
            }
        }
        let mut it = nums.into_iter();
        let mut next = |what: &str| it.next().ok_or_else(|| BicError::Invalid(format!("unexpected end of input: missing {what}")));
        let q = next("q")?;
        let d = next("d")? as usize;
        let n = next("n")? as usize;
        check_n(n)?;
        let mut subspaces = Vec::with_capacity(n);
        for _ in 0..n {
            let k = next("basis size")? as usize;
            if k > d {
                return Err(BicError::Invalid(format!("basis size {k} exceeds dimension {d}")));
            }
            let mut cols = vec![vec![0u64; d]; k];
            for row in 0..d {
                for col in cols.iter_mut() {
                    col[row] = next("matrix entry")?;
                }
            }
            subspaces.push(cols);
        }
        if it.next().is_some() {
            return Err(BicError::Invalid("trailing data after the last subspace".into()));
        }
        Self::new(q, d, subspaces)
    }
}

impl fmt::Display for VectorSpaceSystem {
    /// The text format accepted by [`VectorSpaceSystem::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", self.q, self.d, self.n())?;
        for basis in &self.subspaces {
            writeln!(f, "{}", basis.len())?;
            if basis.is_empty() {
                continue;
            }
            for row in 0..self.d {
                let entries: Vec<String> = basis.iter().map(|c| c[row].to_string()).collect();
                writeln!(f, "{}", entries.join(" "))?;
            }
        }
        Ok(())
    }
}

/// `h(α) = rank(α)·log₂ q`.
pub fn rank_vector(sys: &VectorSpaceSystem) -> EntropicCandidate {
    let values = VarSet::all(sys.n())
        .map(|a| LogLinValue::log_int(Rational::from_integer(sys.rank(a).into()), sys.q))
        .collect();
    EntropicCandidate::from_values(sys.n(), values).expect("rank vector shape")
}

/// Every subspace of GF(q)^d as its RREF basis, ordered by dimension, then
/// pivot columns, then entries.
pub fn all_subspaces(q: u64, d: usize) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    for k in 0..=d {
        for pivots in combinations(d, k) {
            // Free positions: row r, column c > pivots[r], c not a pivot.
            let free: Vec<(usize, usize)> = (0..k)
                .flat_map(|r| {
                    let pv = pivots.clone();
                    ((pv[r] + 1)..d).filter(move |c| !pv.contains(c)).map(move |c| (r, c))
                })
                .collect();
            let total = q.pow(free.len() as u32);
            for code in 0..total {
                let mut rows = vec![vec![0u64; d]; k];
                for (r, &p) in pivots.iter().enumerate() {
                    rows[r][p] = 1;
                }
                let mut c = code;
                for &(r, col) in free.iter().rev() {
                    rows[r][col] = c % q;
                    c /= q;
                }
                out.push(rows);
            }
        }
    }
    out
}

fn combinations(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// A random system: each subspace is the span of a random number of random
/// vectors, stored as its RREF basis.
pub fn random_system<R: Rng>(q: u64, d: usize, n: usize, rng: &mut R) -> VectorSpaceSystem {
    let subspaces = (0..n)
        .map(|_| {
            let k = rng.gen_range(0..=d);
            let gens: Vec<Vec<u64>> = (0..k).map(|_| (0..d).map(|_| rng.gen_range(0..q)).collect()).collect();
            rref(&gens, q)
        })
        .collect();
    VectorSpaceSystem::new(q, d, subspaces).expect("random system is valid")
}

#[derive(Clone, Debug)]
struct VsBlock {
    q: u64,
    d: usize,
    subspaces: Vec<Vec<Vec<u64>>>,
    offset: u64,
    count: u64,
}

/// The canonical stream of `n`-tuples of subspaces: for each prime `q` in the
/// given order and each `d = 1 … max_dim`, all tuples in mixed-radix order
/// over [`all_subspaces`] with the first variable most significant.
#[derive(Clone, Debug)]
pub struct VectorSpaceStream {
    n: usize,
    blocks: Vec<VsBlock>,
    len: u64,
}

impl VectorSpaceStream {
    pub fn new(n: usize, max_dim: usize, primes: &[u64]) -> Result<Self> {
        check_n(n)?;
        let mut blocks = Vec::new();
        let mut offset = 0u64;
        let too_big = || BicError::Invalid("vector-space budget too large to index".into());
        for &q in primes {
            if !is_prime(q) {
                return Err(BicError::Invalid(format!("field size {q} is not prime")));
            }
            for d in 1..=max_dim {
                let subspaces = all_subspaces(q, d);
                let count = (subspaces.len() as u64).checked_pow(n as u32).ok_or_else(too_big)?;
                blocks.push(VsBlock {
                    q,
                    d,
                    subspaces,
                    offset,
                    count,
                });
                offset = offset.checked_add(count).ok_or_else(too_big)?;
            }
        }
        Ok(VectorSpaceStream { n, blocks, len: offset })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: u64) -> Option<VectorSpaceSystem> {
        if index >= self.len {
            return None;
        }
        let b = self
            .blocks
            .iter()
            .rev()
            .find(|b| b.offset <= index && b.count > 0)?;
        let base = b.subspaces.len() as u64;
        let mut r = index - b.offset;
        let mut picks = vec![0usize; self.n];
        for slot in picks.iter_mut().rev() {
            *slot = (r % base) as usize;
            r /= base;
        }
        Some(VectorSpaceSystem {
            q: b.q,
            d: b.d,
            subspaces: picks.into_iter().map(|i| b.subspaces[i].clone()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::eval;
    use crate::expr::LinExpr;
    use crate::rational::int;
    use rand::SeedableRng;

    #[test]
    fn basic_modular_footnote() {
        let h = basic_modular(3, 0);
        assert_eq!(h.get(VarSet(1)).as_rational(), Some(int(1)));
        assert_eq!(h.get(VarSet(2)).as_rational(), Some(int(0)));
        assert_eq!(h.get(VarSet(4)).as_rational(), Some(int(0)));
        assert_eq!(h.get(VarSet(3)).as_rational(), Some(int(1)));
    }

    #[test]
    fn weighted_modular_on_antecedent() {
        let h = modular(&[int(2), int(0), int(1)]).unwrap();
        let mut c = LinExpr::h(3, VarSet(7));
        c.add_term(VarSet(1), int(1));
        c.add_term(VarSet(3), int(-2));
        assert_eq!(eval(&c, &h).unwrap().as_rational(), Some(int(1)));
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(matches!(modular(&[int(-1)]), Err(BicError::NegativeWeight(_))));
        assert_eq!(modular(&[int(0), int(0)]).unwrap(), EntropicCandidate::zero(2));
    }

    #[test]
    fn three_lines_in_the_plane() {
        let sys = VectorSpaceSystem::new(2, 2, vec![vec![vec![1, 0]], vec![vec![0, 1]], vec![vec![1, 1]]]).unwrap();
        let h = rank_vector(&sys);
        for s in 1..8u32 {
            let expect = if s.count_ones() == 1 { 1 } else { 2 };
            assert_eq!(h.get(VarSet(s)).as_rational(), Some(int(expect)));
        }
    }

    #[test]
    fn ambient_and_zero_subspaces() {
        let sys = VectorSpaceSystem::new(3, 2, vec![vec![vec![1, 0], vec![0, 1]], vec![]]).unwrap();
        let h = rank_vector(&sys);
        let two_log3 = LogLinValue::log_int(int(2), 3);
        assert_eq!(h.get(VarSet(1)), &two_log3);
        assert_eq!(h.get(VarSet(3)), &two_log3);
        assert!(h.get(VarSet(2)).is_zero());
        let zero = VectorSpaceSystem::new(2, 3, vec![vec![], vec![]]).unwrap();
        assert_eq!(rank_vector(&zero), EntropicCandidate::zero(2));
    }

    #[test]
    fn singular_basis_rejected() {
        let err = VectorSpaceSystem::new(2, 2, vec![vec![vec![1, 1], vec![1, 1]]]).unwrap_err();
        assert_eq!(err, BicError::SingularBasis { index: 0, rank: 1, columns: 2 });
    }

    #[test]
    fn subspace_counts() {
        // Gaussian binomial sums.
        assert_eq!(all_subspaces(2, 2).len(), 5);
        assert_eq!(all_subspaces(2, 3).len(), 16);
        assert_eq!(all_subspaces(3, 2).len(), 6);
        assert_eq!(all_subspaces(2, 4).len(), 67);
        let all = all_subspaces(3, 3);
        assert_eq!(all.len(), 28);
        for s in &all {
            assert_eq!(&rref(s, 3), s);
        }
    }

    #[test]
    fn text_format_round_trips() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let sys = random_system(3, 3, 3, &mut rng);
            assert_eq!(VectorSpaceSystem::parse(&sys.to_string()).unwrap(), sys);
        }
    }

    #[test]
    fn stream_indexing() {
        let s = VectorSpaceStream::new(2, 2, &[2]).unwrap();
        assert_eq!(s.len(), 2 * 2 + 5 * 5);
        let first = s.get(0).unwrap();
        assert_eq!(first.d, 1);
        assert!(first.subspaces.iter().all(|b| b.is_empty()));
        let last = s.get(s.len() - 1).unwrap();
        assert_eq!(last.d, 2);
        assert_eq!(last.subspaces[0].len(), 2);
        assert!(s.get(s.len()).is_none());
    }
}
