//! Bounded counterexample search over enumerated distributions and
//! vector-space systems.
//!
//! Candidates live in one global index space: the distribution stream
//! first, then the vector-space stream. The reported counterexample is
//! always the one with the smallest index, whatever the number of workers.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::constraint::{eval, BooleanConstraint, EntropicCandidate};
use crate::distributions::{Distribution, DistributionStream};
use crate::error::{BicError, Result};
use crate::expr::VarSet;
use crate::loglin::LogLinValue;
use crate::models::{rank_vector, VectorSpaceStream, VectorSpaceSystem};
use crate::parser::format_expr;

/// Search limits: distributions with domain sizes `≤ s` and denominators
/// `≤ d`; vector spaces of dimension `≤ vsdim` over each prime in `vsq`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub s: usize,
    #[serde(rename = "D")]
    pub d: u64,
    pub vsdim: usize,
    pub vsq: Vec<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            s: 2,
            d: 4,
            vsdim: 2,
            vsq: vec![2, 3],
        }
    }
}

impl Budget {
    pub fn empty() -> Self {
        Budget {
            s: 0,
            d: 0,
            vsdim: 0,
            vsq: Vec::new(),
        }
    }

    pub fn distributions_only(s: usize, d: u64) -> Self {
        Budget {
            s,
            d,
            vsdim: 0,
            vsq: Vec::new(),
        }
    }
}

impl FromStr for Budget {
    type Err = BicError;

    /// `s=3,D=6,vsdim=3,vsq=2,3`; omitted keys keep their defaults. Bare
    /// numbers after `vsq=` extend the prime list.
    fn from_str(text: &str) -> Result<Self> {
        let mut b = Budget::default();
        let mut in_vsq = false;
        let bad = |t: &str| BicError::Invalid(format!("bad budget item {t:?}; expected s=, D=, vsdim= or vsq="));
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok.split_once('=') {
                Some((k, v)) => {
                    in_vsq = false;
                    let num: u64 = v.trim().parse().map_err(|_| bad(tok))?;
                    match k.trim() {
                        "s" => b.s = num as usize,
                        "D" | "d" => b.d = num,
                        "vsdim" => b.vsdim = num as usize,
                        "vsq" => {
                            b.vsq = vec![num];
                            in_vsq = true;
                        }
                        _ => return Err(bad(tok)),
                    }
                }
                None if in_vsq => b.vsq.push(tok.parse().map_err(|_| bad(tok))?),
                None => return Err(bad(tok)),
            }
        }
        Ok(b)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.vsq.iter().map(|q| q.to_string()).collect();
        write!(f, "s={},D={},vsdim={},vsq={}", self.s, self.d, self.vsdim, qs.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Distribution(Distribution),
    VectorSpace(VectorSpaceSystem),
}

impl Model {
    pub fn entropic_vector(&self) -> EntropicCandidate {
        match self {
            Model::Distribution(d) => d.entropic_vector(),
            Model::VectorSpace(v) => rank_vector(v),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Distribution(_) => "distribution",
            Model::VectorSpace(_) => "vector-space",
        }
    }

    /// The model in its file format.
    pub fn file_text(&self) -> String {
        match self {
            Model::Distribution(d) => d.to_string(),
            Model::VectorSpace(v) => v.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLine {
    pub role: String,
    pub index: usize,
    pub expr: String,
    pub value: LogLinValue,
    pub approx: String,
    pub sign: i8,
}

/// A candidate violating one clause: every antecedent is `≥ 0` and every
/// consequent is `< 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub index: u64,
    pub model: Model,
    pub clause: usize,
    pub trace: Vec<TraceLine>,
}

#[derive(Serialize)]
struct CounterexampleJson<'a> {
    source: &'a str,
    index: u64,
    clause: usize,
    model: String,
    trace: &'a [TraceLine],
}

impl Serialize for Counterexample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CounterexampleJson {
            source: self.model.kind(),
            index: self.index,
            clause: self.clause,
            model: self.model.file_text(),
            trace: &self.trace,
        }
        .serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefuteOutcome {
    Counterexample(Counterexample),
    NotFound { budget: Budget, searched: u64 },
}

impl RefuteOutcome {
    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            RefuteOutcome::Counterexample(c) => Some(c),
            _ => None,
        }
    }
}

impl Serialize for RefuteOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(tag = "status", rename_all = "kebab-case")]
        enum J<'a> {
            Counterexample {
                counterexample: &'a Counterexample,
            },
            NotFound {
                budget: &'a Budget,
                searched: u64,
            },
        }
        match self {
            RefuteOutcome::Counterexample(c) => J::Counterexample { counterexample: c }.serialize(s),
            RefuteOutcome::NotFound { budget, searched } => J::NotFound {
                budget,
                searched: *searched,
            }
            .serialize(s),
        }
    }
}

/// The indexed candidate space for one constraint and budget.
pub struct Search<'a> {
    constraint: &'a BooleanConstraint,
    budget: Budget,
    dists: DistributionStream,
    spaces: VectorSpaceStream,
    support: VarSet,
}

impl<'a> Search<'a> {
    pub fn new(constraint: &'a BooleanConstraint, budget: &Budget) -> Result<Self> {
        let n = constraint.n();
        Ok(Search {
            constraint,
            budget: budget.clone(),
            dists: DistributionStream::new(n, budget.s, budget.d)?,
            spaces: VectorSpaceStream::new(n, budget.vsdim, &budget.vsq)?,
            support: constraint.support_vars(),
        })
    }

    pub fn len(&self) -> u64 {
        self.dists.len() + self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    pub fn model(&self, index: u64) -> Option<Model> {
        if index < self.dists.len() {
            self.dists.get(index).map(Model::Distribution)
        } else {
            self.spaces.get(index - self.dists.len()).map(Model::VectorSpace)
        }
    }

    /// Candidates on which every variable the constraint mentions is
    /// constant have a zero entropic vector on that support, so every
    /// clause holds there.
    fn trivially_satisfies(&self, model: &Model) -> bool {
        match model {
            Model::Distribution(d) => self.support.iter().all(|i| {
                let m = d.marginal(VarSet::singleton(i));
                m.probs().iter().filter(|p| !num_traits::Zero::is_zero(*p)).count() == 1
            }),
            Model::VectorSpace(v) => self.support.iter().all(|i| v.subspaces[i].is_empty()),
        }
    }

    pub fn check(&self, index: u64) -> Result<Option<Counterexample>> {
        let Some(model) = self.model(index) else { return Ok(None) };
        if self.trivially_satisfies(&model) {
            return Ok(None);
        }
        let h = model.entropic_vector();
        Ok(self.violation(&h)?.map(|(clause, trace)| Counterexample {
            index,
            model,
            clause,
            trace,
        }))
    }

    fn violation(&self, h: &EntropicCandidate) -> Result<Option<(usize, Vec<TraceLine>)>> {
        violation_trace(self.constraint, h)
    }

    /// The smallest violating index in `range`, scanning with `workers`
    /// threads over fixed-size chunks.
    pub fn scan(&self, range: std::ops::Range<u64>, workers: usize) -> Result<Option<Counterexample>> {
        const CHUNK: u64 = 64;
        let workers = workers.max(1);
        if workers == 1 || range.end - range.start <= CHUNK {
            for i in range {
                if let Some(c) = self.check(i)? {
                    return Ok(Some(c));
                }
            }
            return Ok(None);
        }
        let next = AtomicU64::new(range.start);
        let best = AtomicU64::new(u64::MAX);
        let error: Mutex<Option<(u64, BicError)>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let start = next.fetch_add(CHUNK, Ordering::SeqCst);
                    if start >= range.end || start >= best.load(Ordering::SeqCst) {
                        break;
                    }
                    let end = (start + CHUNK).min(range.end);
                    for i in start..end {
                        if i >= best.load(Ordering::SeqCst) {
                            break;
                        }
                        match self.check(i) {
                            Ok(Some(_)) => {
                                best.fetch_min(i, Ordering::SeqCst);
                                break;
                            }
                            Ok(None) => {}
                            Err(e) => {
                                let mut slot = error.lock().expect("error slot");
                                if slot.as_ref().is_none_or(|(j, _)| i < *j) {
                                    *slot = Some((i, e));
                                }
                                best.fetch_min(i, Ordering::SeqCst);
                                break;
                            }
                        }
                    }
                });
            }
        });
        if let Some((_, e)) = error.into_inner().expect("error slot") {
            return Err(e);
        }
        match best.load(Ordering::SeqCst) {
            u64::MAX => Ok(None),
            i => self.check(i),
        }
    }
}

/// The first clause `h` violates, with the signed evaluation of every
/// expression of that clause.
pub fn violation_trace(constraint: &BooleanConstraint, h: &EntropicCandidate) -> Result<Option<(usize, Vec<TraceLine>)>> {
    'clauses: for (ci, clause) in constraint.clauses.iter().enumerate() {
        let mut trace = Vec::new();
        for (role, exprs, ok) in [
            ("antecedent", &clause.antecedents, true),
            ("consequent", &clause.consequents, false),
        ] {
            for (i, e) in exprs.iter().enumerate() {
                let value = eval(e, h)?;
                let sign = value.sign();
                // antecedents must be ≥ 0 and consequents < 0
                if (sign >= 0) != ok {
                    continue 'clauses;
                }
                trace.push(TraceLine {
                    role: role.to_string(),
                    index: i,
                    expr: format_expr(e, &constraint.vars),
                    approx: value.approx(6),
                    value,
                    sign,
                });
            }
        }
        return Ok(Some((ci, trace)));
    }
    Ok(None)
}

pub fn refute(constraint: &BooleanConstraint, budget: &Budget) -> Result<RefuteOutcome> {
    refute_parallel(constraint, budget, 1)
}

pub fn refute_parallel(constraint: &BooleanConstraint, budget: &Budget, workers: usize) -> Result<RefuteOutcome> {
    let search = Search::new(constraint, budget)?;
    Ok(match search.scan(0..search.len(), workers)? {
        Some(c) => RefuteOutcome::Counterexample(c),
        None => RefuteOutcome::NotFound {
            budget: search.budget().clone(),
            searched: search.len(),
        },
    })
}
