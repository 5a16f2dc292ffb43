//! Clauses, Boolean information constraints, candidate entropy vectors and
//! their exact evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{BicError, Result};
use crate::expr::{check_n, default_names, LinExpr, VarSet};
use crate::loglin::LogLinValue;
use crate::rational::Rational;

/// `(c₁·h ≥ 0 ∧ … ∧ c_k·h ≥ 0) ⇒ (d₁·h ≥ 0 ∨ … ∨ d_ℓ·h ≥ 0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub antecedents: Vec<LinExpr>,
    pub consequents: Vec<LinExpr>,
}

impl Clause {
    pub fn new(antecedents: Vec<LinExpr>, consequents: Vec<LinExpr>) -> Result<Self> {
        if consequents.is_empty() {
            return Err(BicError::Invalid("clause needs at least one consequent".into()));
        }
        let n = consequents[0].n();
        for e in antecedents.iter().chain(&consequents) {
            if e.n() != n {
                return Err(BicError::DimensionMismatch {
                    expected: n,
                    found: e.n(),
                });
            }
        }
        Ok(Clause {
            antecedents,
            consequents,
        })
    }

    pub fn unconditional(consequent: LinExpr) -> Self {
        Clause {
            antecedents: Vec::new(),
            consequents: vec![consequent],
        }
    }

    pub fn n(&self) -> usize {
        self.consequents[0].n()
    }

    pub fn exprs(&self) -> impl Iterator<Item = &LinExpr> {
        self.antecedents.iter().chain(&self.consequents)
    }
}

/// A conjunction of clauses over shared variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanConstraint {
    pub vars: Vec<String>,
    pub clauses: Vec<Clause>,
}

impl BooleanConstraint {
    pub fn new(vars: Vec<String>, clauses: Vec<Clause>) -> Result<Self> {
        check_n(vars.len())?;
        if clauses.is_empty() {
            return Err(BicError::Invalid("constraint needs at least one clause".into()));
        }
        for c in &clauses {
            if c.n() != vars.len() {
                return Err(BicError::DimensionMismatch {
                    expected: vars.len(),
                    found: c.n(),
                });
            }
        }
        Ok(BooleanConstraint { vars, clauses })
    }

    pub fn from_clause(clause: Clause) -> Self {
        let vars = default_names(clause.n());
        BooleanConstraint {
            vars,
            clauses: vec![clause],
        }
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    /// Variables carrying a nonzero coefficient anywhere in the constraint.
    pub fn support_vars(&self) -> VarSet {
        self.clauses
            .iter()
            .flat_map(|c| c.exprs())
            .fold(VarSet::EMPTY, |a, e| a.union(e.support_vars()))
    }
}

/// A vector `h` indexed by subsets of `[n]`, with `h(∅) = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropicCandidate {
    n: usize,
    values: Vec<LogLinValue>,
}

impl EntropicCandidate {
    pub fn zero(n: usize) -> Self {
        EntropicCandidate {
            n,
            values: vec![LogLinValue::zero(); 1 << n],
        }
    }

    /// Builds a candidate from values on every subset (index = mask). The
    /// entry at `∅` must be zero.
    pub fn from_values(n: usize, values: Vec<LogLinValue>) -> Result<Self> {
        check_n(n)?;
        if values.len() != 1 << n {
            return Err(BicError::Invalid(format!(
                "expected {} values, got {}",
                1 << n,
                values.len()
            )));
        }
        if !values[0].is_zero() {
            return Err(BicError::Invalid("h(∅) must be zero".into()));
        }
        Ok(EntropicCandidate { n, values })
    }

    pub fn from_rationals(n: usize, values: &[Rational]) -> Result<Self> {
        Self::from_values(n, values.iter().map(|q| LogLinValue::rational(q.clone())).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, set: VarSet) -> &LogLinValue {
        &self.values[set.index()]
    }

    pub fn values(&self) -> &[LogLinValue] {
        &self.values
    }

    /// `Some` when every coordinate is rational (modular or rank vectors in
    /// units of `log q` with `q = 2`).
    pub fn as_rationals(&self) -> Option<Vec<Rational>> {
        self.values.iter().map(|v| v.as_rational()).collect()
    }
}

/// Exact `c · h`.
pub fn eval(c: &LinExpr, h: &EntropicCandidate) -> Result<LogLinValue> {
    if c.n() != h.n {
        return Err(BicError::DimensionMismatch {
            expected: h.n,
            found: c.n(),
        });
    }
    let mut acc = LogLinValue::zero();
    for (s, q) in c.terms() {
        acc += &h.values[s.index()].scale(q);
    }
    Ok(acc)
}

/// Whether `h` satisfies the clause: some antecedent is negative or some
/// consequent is nonnegative.
pub fn holds(clause: &Clause, h: &EntropicCandidate) -> Result<bool> {
    for a in &clause.antecedents {
        if eval(a, h)?.sign() < 0 {
            return Ok(true);
        }
    }
    for d in &clause.consequents {
        if eval(d, h)?.sign() >= 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Index of the first clause `h` violates, if any.
pub fn first_violated(constraint: &BooleanConstraint, h: &EntropicCandidate) -> Result<Option<usize>> {
    for (i, c) in constraint.clauses.iter().enumerate() {
        if !holds(c, h)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}
