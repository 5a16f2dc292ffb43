//! Recognizing entropic vectors given as `h(α) = (1/c_α)·log₂(a_α/b_α)`.
//!
//! Rejections are sound for almost-entropic vectors: a valid inequality is
//! negative on the candidate. Realizations certify that the candidate is
//! entropic. Everything else is inconclusive.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use serde::Serialize;

use crate::constraint::{eval, EntropicCandidate};
use crate::distributions::{Distribution, DistributionStream};
use crate::error::{BicError, Result};
use crate::expr::{check_n, default_names, VarSet};
use crate::loglin::LogLinValue;
use crate::parser::format_set;
use crate::rational::Rational;
use crate::shannon::GeneratorSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

/// One `(a, b, c)` triple per nonempty subset, indexed by mask.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateRepr {
    pub vars: Vec<String>,
    pub entries: Vec<Entry>,
}

impl CandidateRepr {
    /// `entries[mask − 1]` holds the triple of subset `mask`.
    pub fn new(vars: Vec<String>, entries: Vec<Entry>) -> Result<Self> {
        check_n(vars.len())?;
        if entries.len() + 1 != 1 << vars.len() {
            return Err(BicError::Invalid(format!(
                "{} entries given; {} variables need {}",
                entries.len(),
                vars.len(),
                (1usize << vars.len()) - 1
            )));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.a == 0 || e.b == 0 || e.c == 0 {
                let set = format_set(VarSet(i as u32 + 1), &vars);
                return Err(BicError::Invalid(format!(
                    "subset {set}: a, b and c must be positive (log(a/b)/c)"
                )));
            }
        }
        Ok(CandidateRepr { vars, entries })
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn entry(&self, set: VarSet) -> Entry {
        self.entries[set.index() - 1]
    }

    pub fn value(&self, set: VarSet) -> LogLinValue {
        if set.is_empty() {
            return LogLinValue::zero();
        }
        let e = self.entry(set);
        LogLinValue::term(
            Rational::new(1.into(), BigInt::from(e.c)),
            &Rational::new(BigInt::from(e.a), BigInt::from(e.b)),
        )
    }

    pub fn to_candidate(&self) -> EntropicCandidate {
        let values = VarSet::all(self.n()).map(|s| self.value(s)).collect();
        EntropicCandidate::from_values(self.n(), values).expect("shape")
    }

    /// Parses an optional `vars …` line followed by `subset a b c` lines.
    /// Subsets are written by juxtaposing single-letter names (`XY`) or
    /// joining names with commas (`x1,x2`). Without a `vars` line the
    /// default names `X Y Z U …` are used, up to the last one mentioned.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vars: Option<Vec<String>> = None;
        let mut rows: Vec<(usize, String, [u64; 3])> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| BicError::Invalid(format!("line {}: {m}", no + 1));
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks[0] == "vars" {
                if vars.is_some() || !rows.is_empty() {
                    return Err(err("'vars' must come first and only once".into()));
                }
                vars = Some(toks[1..].iter().map(|s| s.to_string()).collect());
                continue;
            }
            if toks.len() != 4 {
                return Err(err(format!("expected 'subset a b c', found {line:?}")));
            }
            let mut nums = [0u64; 3];
            for (slot, t) in nums.iter_mut().zip(&toks[1..]) {
                *slot = t.parse().map_err(|_| err(format!("expected a natural number, found {t:?}")))?;
            }
            rows.push((no + 1, toks[0].to_string(), nums));
        }
        let split = |s: &str| -> Vec<String> {
            if s.contains(',') {
                s.split(',').map(|p| p.to_string()).collect()
            } else {
                s.chars().map(|c| c.to_string()).collect()
            }
        };
        let vars = match vars {
            Some(v) => v,
            None => {
                let defaults = default_names(16);
                let mut last = 0;
                for (no, s, _) in &rows {
                    for name in split(s) {
                        let i = defaults.iter().position(|d| *d == name).ok_or_else(|| {
                            BicError::Invalid(format!("line {no}: unknown variable {name:?}; add a 'vars' line"))
                        })?;
                        last = last.max(i + 1);
                    }
                }
                defaults[..last].to_vec()
            }
        };
        check_n(vars.len())?;
        let mut entries: Vec<Option<Entry>> = vec![None; (1 << vars.len()) - 1];
        for (no, s, [a, b, c]) in rows {
            let mut mask = 0u32;
            for name in split(&s) {
                let i = vars
                    .iter()
                    .position(|v| *v == name)
                    .ok_or_else(|| BicError::Invalid(format!("line {no}: unknown variable {name:?}")))?;
                mask |= 1 << i;
            }
            let slot = &mut entries[mask as usize - 1];
            if slot.is_some() {
                return Err(BicError::Invalid(format!("line {no}: subset {s} given twice")));
            }
            *slot = Some(Entry { a, b, c });
        }
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.ok_or_else(|| {
                    BicError::Invalid(format!("missing subset {}", format_set(VarSet(i as u32 + 1), &vars)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars, entries)
    }
}

impl fmt::Display for CandidateRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.vars.join(" "))?;
        let single = self.vars.iter().all(|v| v.chars().count() == 1);
        for set in VarSet::all(self.n()).skip(1) {
            let names: Vec<&str> = set.iter().map(|i| self.vars[i].as_str()).collect();
            let e = self.entry(set);
            let label = if single { names.concat() } else { names.join(",") };
            writeln!(f, "{label} {} {} {}", e.a, e.b, e.c)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Recognition {
    /// A generator of the set is negative on the candidate.
    Rejected {
        generator: String,
        expr: String,
        value: LogLinValue,
        approx: String,
    },
    /// A distribution whose entropic vector equals the candidate exactly.
    Realized { index: u64, distribution: Distribution },
    Inconclusive { searched: u64 },
}

/// Realization search limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RealizeBudget {
    pub s: usize,
    pub d: u64,
}

impl Default for RealizeBudget {
    fn default() -> Self {
        RealizeBudget { s: 2, d: 4 }
    }
}

/// Rejects if some generator is negative, otherwise searches the canonical
/// distribution stream for an exact realization.
pub fn check_candidate(
    r: &CandidateRepr,
    gens: &GeneratorSet,
    budget: RealizeBudget,
    workers: usize,
) -> Result<Recognition> {
    if gens.n() != r.n() {
        return Err(BicError::DimensionMismatch {
            expected: r.n(),
            found: gens.n(),
        });
    }
    let h = r.to_candidate();
    for g in gens.iter() {
        let v = eval(&g.expr, &h)?;
        if v.sign() < 0 {
            return Ok(Recognition::Rejected {
                generator: g.id.clone(),
                expr: crate::parser::format_expr(&g.expr, &r.vars),
                approx: v.approx(12),
                value: v,
            });
        }
    }
    let stream = DistributionStream::new(r.n(), budget.s, budget.d)?;
    let matches = |i: u64| stream.get(i).filter(|d| d.entropic_vector() == h);
    let len = stream.len();
    let workers = workers.max(1) as u64;
    let best = AtomicU64::new(u64::MAX);
    let block = len.div_ceil(workers).max(1);
    std::thread::scope(|scope| {
        for w in 0..workers {
            let (best, matches) = (&best, &matches);
            scope.spawn(move || {
                for i in (w * block)..((w + 1) * block).min(len) {
                    if i >= best.load(Ordering::SeqCst) {
                        break;
                    }
                    if matches(i).is_some() {
                        best.fetch_min(i, Ordering::SeqCst);
                        break;
                    }
                }
            });
        }
    });
    Ok(match best.into_inner() {
        u64::MAX => Recognition::Inconclusive { searched: len },
        index => Recognition::Realized {
            index,
            distribution: matches(index).expect("found"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shannon::elemental;

    #[test]
    fn duplicate_bit_realized() {
        let r = CandidateRepr::parse("X 2 1 1\nY 2 1 1\nXY 2 1 1\n").unwrap();
        let out = check_candidate(&r, &elemental(2).unwrap(), RealizeBudget::default(), 1).unwrap();
        let Recognition::Realized { distribution, .. } = out else { panic!("{out:?}") };
        assert_eq!(distribution.entropic_vector(), r.to_candidate());
    }

    #[test]
    fn oversized_joint_rejected() {
        let r = CandidateRepr::parse("X 2 1 1\nY 2 1 1\nXY 8 1 1\n").unwrap();
        let gens = elemental(2).unwrap();
        let out = check_candidate(&r, &gens, RealizeBudget::default(), 1).unwrap();
        let Recognition::Rejected { generator, value, .. } = out else { panic!("{out:?}") };
        assert_eq!(value.sign(), -1);
        assert_eq!(eval(&gens.get(&generator).unwrap().expr, &r.to_candidate()).unwrap(), value);
    }

    #[test]
    fn zero_candidate_realized_by_point_mass() {
        let r = CandidateRepr::parse("vars A B\nA 1 1 1\nB 1 1 1\nA,B 1 1 1\n").unwrap();
        let out = check_candidate(&r, &elemental(2).unwrap(), RealizeBudget::default(), 3).unwrap();
        assert!(matches!(out, Recognition::Realized { index: 0, .. }));
    }

    #[test]
    fn non_dyadic_inconclusive() {
        // h(X) = log 3 needs a ternary variable; budget s = 2.
        let r = CandidateRepr::parse("X 3 1 1\n").unwrap();
        let out = check_candidate(&r, &elemental(1).unwrap(), RealizeBudget::default(), 2).unwrap();
        assert!(matches!(out, Recognition::Inconclusive { .. }));
    }

    #[test]
    fn malformed_inputs() {
        assert!(CandidateRepr::parse("X 2 1 0\n").is_err());
        assert!(CandidateRepr::parse("X 2 1 1\nY 2 1 1\n").is_err());
        assert!(CandidateRepr::parse("X 2 1 1\nX 2 1 1\n").is_err());
        let r = CandidateRepr::parse("vars P Q\nP 2 1 1\nQ 3 1 2\nPQ 6 1 2\n").unwrap();
        assert_eq!(CandidateRepr::parse(&r.to_string()).unwrap(), r);
    }
}
