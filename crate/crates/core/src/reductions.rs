//! Balancing transforms and the reductions from conditional and max
//! information inequalities to unconditional linear ones.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::{BooleanConstraint, Clause};
use crate::error::{BicError, Result};
use crate::expr::{LinExpr, VarSet};
use crate::lp::{LpBuilder, LpOutcome, Rel};
use crate::rational::{fmt_rational, Rational};
use crate::refuter::{Budget, Counterexample, Search};
use crate::shannon::{
    joint_slack, primitive_integer, prove, prove_convex, ConvexOutcome, GeneratorSet, ProofCertificate, ProveOutcome,
    SlackBudget, SlackWitness,
};

/// `h(Xᵢ | X_{[n]∖i})`.
fn last_conditional(n: usize, i: usize) -> LinExpr {
    let xi = VarSet::singleton(i);
    LinExpr::cond_entropy(n, xi, VarSet::full(n).minus(xi))
}

/// The balanced strengthening `c′ = c − Σᵢ (c·h⁽ⁱ⁾)·h(Xᵢ | rest)`, with
/// the checks `c·h⁽ⁱ⁾`.
pub fn chan_balance(c: &LinExpr) -> (LinExpr, Vec<Rational>) {
    let n = c.n();
    let checks: Vec<Rational> = (0..n).map(|i| c.on_basic_modular(i)).collect();
    let mut out = c.clone();
    for (i, w) in checks.iter().enumerate() {
        out.add_scaled(&last_conditional(n, i), &-w);
    }
    (out, checks)
}

/// Rank of a rational matrix by fraction-free (Bareiss) elimination.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let Some(cols) = matrix.first().map(|r| r.len()) else { return 0 };
    let mut m: Vec<Vec<BigInt>> = matrix
        .iter()
        .map(|row| {
            let den = crate::rational::common_denominator(row.iter());
            row.iter()
                .map(|q| (q * Rational::from_integer(den.clone())).to_integer())
                .collect()
        })
        .collect();
    let rows = m.len();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let v = (&m[r][c] * &m[i][j] - &m[i][c] * &m[r][j]) / &prev;
                m[i][j] = v;
            }
            m[i][c] = BigInt::zero();
        }
        prev = m[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `A_ij = dᵢ·h⁽ʲ⁾`.
    #[serde(with = "rational_matrix")]
    pub matrix: Vec<Vec<Rational>>,
    pub rank: usize,
    /// Weights of a nonzero nonnegative modular `h⁽*⁾` with `A·w = 0`, as a
    /// primitive integer vector.
    #[serde(with = "opt_rational_vec")]
    pub witness: Option<Vec<Rational>>,
    pub verdict: bool,
}

mod rational_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(fmt_rational).collect()).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<Rational>>, D::Error> {
        let strs = Vec::<Vec<String>>::deserialize(d)?;
        strs.iter()
            .map(|r| {
                r.iter()
                    .map(|t| crate::rational::parse_rational(t).ok_or_else(|| serde::de::Error::custom("bad rational")))
                    .collect()
            })
            .collect()
    }
}

mod opt_rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref()
            .map(|v| v.iter().map(fmt_rational).collect::<Vec<_>>())
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Rational>>, D::Error> {
        let strs = Option::<Vec<String>>::deserialize(d)?;
        strs.map(|v| {
            v.iter()
                .map(|t| crate::rational::parse_rational(t).ok_or_else(|| serde::de::Error::custom("bad rational")))
                .collect()
        })
        .transpose()
    }
}

/// Tests whether `D` is group balanced: `rank(A) = k − 1` and some nonzero
/// nonnegative modular function annihilates every `dᵢ`.
pub fn group_balance(ds: &[LinExpr]) -> Result<BalanceReport> {
    let Some(first) = ds.first() else {
        return Err(BicError::Invalid("group balance needs a nonempty set".into()));
    };
    let n = first.n();
    for d in ds {
        first.same_n(d)?;
    }
    let matrix: Vec<Vec<Rational>> = ds
        .iter()
        .map(|d| (0..n).map(|j| d.on_basic_modular(j)).collect())
        .collect();
    let r = rank(&matrix);
    let mut lp = LpBuilder::new(n);
    for row in &matrix {
        lp.row(row.clone(), Rel::Eq, Rational::zero());
    }
    lp.row(vec![Rational::one(); n], Rel::Eq, Rational::one());
    let witness = match lp.minimize(vec![Rational::zero(); n]) {
        LpOutcome::Optimal { x, .. } => Some(primitive_integer(&x)),
        _ => None,
    };
    let verdict = r + 1 == ds.len() && witness.is_some();
    Ok(BalanceReport {
        matrix,
        rank: r,
        witness,
        verdict,
    })
}

/// The strongly balanced set: the balanced strengthening of every `dᵢ`, then
/// `d″ᵢ = d′ᵢ + (1/λᵢ)(k·h(Xᵢ|rest) − Σ_{j<k} h(Xⱼ|rest))` for `k = |D| ≤ n`.
/// `Σ λᵢ d″ᵢ = Σ λᵢ d′ᵢ`, and after scaling row `i` by `λᵢ` the matrix has
/// `k − 1` on the diagonal and `−1` elsewhere in the first `k` columns.
pub fn to_group_balanced(ds: &[LinExpr], lambdas: &[Rational]) -> Result<Vec<LinExpr>> {
    let Some(first) = ds.first() else {
        return Err(BicError::Invalid("empty set".into()));
    };
    if lambdas.len() != ds.len() {
        return Err(BicError::Invalid(format!(
            "{} multipliers for {} expressions",
            lambdas.len(),
            ds.len()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !l.is_positive()) {
        return Err(BicError::Invalid(format!("multiplier {} is not positive", fmt_rational(l))));
    }
    let n = first.n();
    let k = ds.len();
    if k > n {
        return Err(BicError::Invalid(format!("{k} expressions over {n} variables; need k ≤ n")));
    }
    let conds: Vec<LinExpr> = (0..k).map(|j| last_conditional(n, j)).collect();
    let kq = Rational::from_integer(BigInt::from(k));
    let mut out = Vec::with_capacity(k);
    for (i, (d, lam)) in ds.iter().zip(lambdas).enumerate() {
        first.same_n(d)?;
        let (mut dd, _) = chan_balance(d);
        let inv = lam.recip();
        dd.add_scaled(&conds[i], &(&kq * &inv));
        for c in &conds {
            dd.add_scaled(c, &-&inv);
        }
        out.push(dd);
    }
    Ok(out)
}

/// Parameters for the tight regime: `p` values and the largest `q` tried.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub ps: Vec<u64>,
    pub qmax: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            ps: vec![1, 2, 4, 8],
            qmax: 64,
        }
    }
}

impl FromStr for Schedule {
    type Err = BicError;

    /// `p=1,2,4,8 qmax=64`; either part may be omitted.
    fn from_str(text: &str) -> Result<Self> {
        let mut s = Schedule::default();
        let bad = |t: &str| BicError::Invalid(format!("bad schedule item {t:?}; expected p=LIST or qmax=N"));
        for tok in text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| bad(tok))?;
            match k {
                "p" => {
                    let ps: std::result::Result<Vec<u64>, _> = v.split(',').map(|x| x.trim().parse()).collect();
                    s.ps = ps.map_err(|_| bad(tok))?;
                    if s.ps.is_empty() || s.ps.contains(&0) {
                        return Err(bad(tok));
                    }
                }
                "qmax" => s.qmax = v.parse().map_err(|_| bad(tok))?,
                _ => return Err(bad(tok)),
            }
        }
        Ok(s)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.ps.iter().map(|p| p.to_string()).collect();
        write!(f, "p={} qmax={}", ps.join(","), self.qmax)
    }
}

/// One successful step of the tight regime: for this `p`, the smallest `q`
/// at which `Σ λⱼdⱼ + (1/p)·h([n]) − q·Σ cᵢ` is provable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TightStep {
    pub p: u64,
    pub q: u64,
    #[serde(
        serialize_with = "crate::rational::ser_rational_vec",
        deserialize_with = "crate::rational::de_rational_vec"
    )]
    pub lambda: Vec<Rational>,
    pub certificate: ProofCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TightOutcome {
    Proved {
        /// Antecedents dropped because they are provable outright.
        dropped: Vec<usize>,
        steps: Vec<TightStep>,
    },
    NotProved {
        dropped: Vec<usize>,
        steps: Vec<TightStep>,
        failed_p: u64,
        qmax: u64,
    },
}

impl TightOutcome {
    pub fn is_proved(&self) -> bool {
        matches!(self, TightOutcome::Proved { .. })
    }

    pub fn steps(&self) -> &[TightStep] {
        match self {
            TightOutcome::Proved { steps, .. } | TightOutcome::NotProved { steps, .. } => steps,
        }
    }
}

/// Splits antecedents into those provable outright (and so redundant) and
/// the rest, by index.
fn split_valid(antecedents: &[LinExpr], gens: &GeneratorSet) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut dropped = Vec::new();
    let mut kept = Vec::new();
    for (i, a) in antecedents.iter().enumerate() {
        if prove(a, gens, &[])?.is_proved() {
            dropped.push(i);
        } else {
            kept.push(i);
        }
    }
    Ok((dropped, kept))
}

/// The tight-regime schedule: antecedents that are provable outright are
/// dropped; the others must be tight. For each `p`, the smallest `q ≤ qmax`
/// at which some convex combination of the consequents plus
/// `(1/p)·h([n]) − q·Σ cᵢ` is provable is reported. Provability is monotone
/// in `q` because `−Σ cᵢ` is itself provable.
pub fn reduce_tight(clause: &Clause, gens: &GeneratorSet, schedule: &Schedule) -> Result<TightOutcome> {
    let n = clause.n();
    let (dropped, kept) = split_valid(&clause.antecedents, gens)?;
    let mut sum = LinExpr::zero(n);
    for &i in &kept {
        let a = &clause.antecedents[i];
        if !prove(&-a, gens, &[])?.is_proved() {
            return Err(BicError::NotTight(i));
        }
        sum.add_scaled(a, &Rational::one());
    }
    let full = LinExpr::h(n, VarSet::full(n));
    let mut steps = Vec::new();
    for &p in &schedule.ps {
        let attempt = |q: u64| -> Result<Option<(Vec<Rational>, ProofCertificate)>> {
            let mut offset = full.scale(&Rational::new(BigInt::one(), BigInt::from(p)));
            offset.add_scaled(&sum, &-Rational::from_integer(BigInt::from(q)));
            let ds: Vec<LinExpr> = clause.consequents.iter().map(|d| d + &offset).collect();
            Ok(match prove_convex(&ds, gens, &[])? {
                ConvexOutcome::Proved { lambda, certificate } => Some((lambda, certificate)),
                ConvexOutcome::NotProvableAtGeneratorSet { .. } => None,
            })
        };
        let Some(mut best) = attempt(schedule.qmax)? else {
            return Ok(TightOutcome::NotProved {
                dropped,
                steps,
                failed_p: p,
                qmax: schedule.qmax,
            });
        };
        let (mut lo, mut hi) = (0u64, schedule.qmax);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match attempt(mid)? {
                Some(found) => {
                    best = found;
                    hi = mid;
                }
                None => lo = mid + 1,
            }
        }
        let (lambda, certificate) = best;
        steps.push(TightStep {
            p,
            q: hi,
            lambda,
            certificate,
        });
    }
    Ok(TightOutcome::Proved { dropped, steps })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SlackOutcome {
    Proved {
        witness: SlackWitness,
        #[serde(
            serialize_with = "crate::rational::ser_rational_vec",
            deserialize_with = "crate::rational::de_rational_vec"
        )]
        lambda: Vec<Rational>,
        certificate: ProofCertificate,
    },
    NotProved {
        witness: SlackWitness,
    },
}

/// The slack regime: once the antecedents are jointly slack, searches for
/// `λ ≥ 0` with `c − Σ λᵢcᵢ` provable.
pub fn reduce_slack(clause: &Clause, gens: &GeneratorSet, budget: SlackBudget) -> Result<SlackOutcome> {
    if clause.consequents.len() != 1 {
        return Err(BicError::Invalid(
            "the slack regime takes a single consequent; use max_to_linear for disjunctions".into(),
        ));
    }
    let witness = if clause.antecedents.is_empty() {
        SlackWitness::Modular {
            weights: vec![Rational::one(); clause.n()],
        }
    } else {
        joint_slack(&clause.antecedents, budget)?.ok_or(BicError::SlackNotEstablished)?
    };
    let c = &clause.consequents[0];
    Ok(match prove(c, gens, &clause.antecedents)? {
        ProveOutcome::Proved { certificate } => SlackOutcome::Proved {
            witness,
            lambda: certificate.antecedent_multipliers.clone(),
            certificate,
        },
        ProveOutcome::NotProvableAtGeneratorSet { .. } => SlackOutcome::NotProved { witness },
    })
}

/// Limits for [`max_to_linear`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxOptions {
    pub max_lambda_sum: u64,
    /// Candidate indices the refuter scans per epoch.
    pub chunk: u64,
    pub workers: usize,
}

impl Default for MaxOptions {
    fn default() -> Self {
        MaxOptions {
            max_lambda_sum: 8,
            chunk: 4096,
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum MaxOutcome {
    Valid {
        lambda: Vec<u64>,
        epoch: u64,
        certificate: ProofCertificate,
    },
    Invalid {
        epoch: u64,
        counterexample: Counterexample,
    },
    Exhausted {
        max_lambda_sum: u64,
        budget: Budget,
        searched: u64,
    },
}

/// Weak compositions of `total` into `parts` parts, in lexicographic order.
fn graded(total: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in graded(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Runs two searches in lock-step epochs: epoch `e` tries every `λ ∈ ℕ^ℓ`
/// with `Σλ = e` against the prover and scans the next `chunk` refuter
/// candidates. The first conclusive epoch wins; a proof found in the same
/// epoch as a counterexample is preferred.
pub fn max_to_linear(
    clause: &Clause,
    vars: &[String],
    gens: &GeneratorSet,
    budget: &Budget,
    options: &MaxOptions,
) -> Result<MaxOutcome> {
    let constraint = BooleanConstraint::new(vars.to_vec(), vec![clause.clone()])?;
    let search = Search::new(&constraint, budget)?;
    let l = clause.consequents.len();
    let mut scanned = 0u64;
    let mut epoch = 0u64;
    loop {
        epoch += 1;
        let mut valid = None;
        if epoch <= options.max_lambda_sum {
            for lam in graded(epoch, l) {
                let mut target = LinExpr::zero(clause.n());
                for (w, d) in lam.iter().zip(&clause.consequents) {
                    target.add_scaled(d, &Rational::from_integer(BigInt::from(*w)));
                }
                if let ProveOutcome::Proved { certificate } = prove(&target, gens, &clause.antecedents)? {
                    valid = Some((lam, certificate));
                    break;
                }
            }
        }
        if let Some((lambda, certificate)) = valid {
            return Ok(MaxOutcome::Valid {
                lambda,
                epoch,
                certificate,
            });
        }
        let end = (scanned + options.chunk.max(1)).min(search.len());
        if scanned < end {
            if let Some(counterexample) = search.scan(scanned..end, options.workers)? {
                return Ok(MaxOutcome::Invalid { epoch, counterexample });
            }
            scanned = end;
        }
        if epoch >= options.max_lambda_sum && scanned >= search.len() {
            return Ok(MaxOutcome::Exhausted {
                max_lambda_sum: options.max_lambda_sum,
                budget: budget.clone(),
                searched: scanned,
            });
        }
    }
}

/// Which reduction a clause was routed to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum ReduceReport {
    /// No antecedents remain and there is one consequent.
    Unconditional { outcome: ProveOutcome },
    Tight { schedule: Schedule, outcome: TightOutcome },
    Slack { outcome: SlackOutcome },
    Max { outcome: MaxOutcome },
    /// Neither tight nor jointly slack antecedents could be established.
    Undetermined { dropped: Vec<usize>, reason: String },
}

impl ReduceReport {
    /// `Some(true)` for a proof, `Some(false)` for a counterexample, `None`
    /// when inconclusive.
    pub fn verdict(&self) -> Option<bool> {
        match self {
            ReduceReport::Unconditional { outcome } => outcome.is_proved().then_some(true),
            ReduceReport::Tight { outcome, .. } => outcome.is_proved().then_some(true),
            ReduceReport::Slack { outcome } => matches!(outcome, SlackOutcome::Proved { .. }).then_some(true),
            ReduceReport::Max { outcome } => match outcome {
                MaxOutcome::Valid { .. } => Some(true),
                MaxOutcome::Invalid { .. } => Some(false),
                MaxOutcome::Exhausted { .. } => None,
            },
            ReduceReport::Undetermined { .. } => None,
        }
    }
}

/// Routes a clause to a regime: antecedents provable outright are ignored;
/// then tight antecedents use the schedule, jointly slack antecedents the
/// λ-search (or the max driver for several consequents), and a bare
/// disjunction the max driver.
pub fn reduce(
    clause: &Clause,
    vars: &[String],
    gens: &GeneratorSet,
    schedule: &Schedule,
    budget: &Budget,
    options: &MaxOptions,
) -> Result<ReduceReport> {
    let (dropped, kept) = split_valid(&clause.antecedents, gens)?;
    let rest: Vec<LinExpr> = kept.iter().map(|&i| clause.antecedents[i].clone()).collect();
    let single = clause.consequents.len() == 1;
    if rest.is_empty() && single {
        let outcome = prove(&clause.consequents[0], gens, &[])?;
        return Ok(ReduceReport::Unconditional { outcome });
    }
    if rest.is_empty() {
        let bare = Clause::new(Vec::new(), clause.consequents.clone())?;
        let outcome = max_to_linear(&bare, vars, gens, budget, options)?;
        return Ok(ReduceReport::Max { outcome });
    }
    let mut all_tight = true;
    for a in &rest {
        if !prove(&-a, gens, &[])?.is_proved() {
            all_tight = false;
            break;
        }
    }
    if all_tight {
        let outcome = reduce_tight(clause, gens, schedule)?;
        return Ok(ReduceReport::Tight {
            schedule: schedule.clone(),
            outcome,
        });
    }
    let slack_budget = SlackBudget {
        max_support: budget.s,
        max_denominator: budget.d,
    };
    if joint_slack(&rest, slack_budget)?.is_some() {
        let reduced = Clause::new(rest, clause.consequents.clone())?;
        if single {
            let outcome = reduce_slack(&reduced, gens, slack_budget)?;
            return Ok(ReduceReport::Slack { outcome });
        }
        let outcome = max_to_linear(&reduced, vars, gens, budget, options)?;
        return Ok(ReduceReport::Max { outcome });
    }
    Ok(ReduceReport::Undetermined {
        dropped,
        reason: "antecedents are neither all tight nor jointly slack at this budget".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_constraint, parse_expr};
    use crate::rational::{int, rat};
    use crate::shannon::{elemental, verify};

    fn xyz() -> Vec<String> {
        crate::expr::default_names(3)
    }

    fn triangle_terms() -> Vec<LinExpr> {
        ["2H(XY)-H(X)-H(XYZ)", "2H(YZ)-H(Y)-H(XYZ)", "2H(XZ)-H(Z)-H(XYZ)"]
            .iter()
            .map(|t| parse_expr(t, &xyz()).unwrap())
            .collect()
    }

    #[test]
    fn chan_examples() {
        let v = crate::expr::default_names(2);
        let c = parse_expr("H(XY) - H(X)", &v).unwrap();
        let (b, checks) = chan_balance(&c);
        assert_eq!(checks, vec![int(0), int(1)]);
        assert_eq!(b, parse_expr("H(XY) - H(X) - H(Y|X)", &v).unwrap());
        let bal = parse_expr("H(XY) + H(XZ) - H(X) - H(XYZ)", &xyz()).unwrap();
        assert_eq!(chan_balance(&bal), (bal.clone(), vec![int(0); 3]));
        assert_eq!(chan_balance(&LinExpr::zero(2)).0, LinExpr::zero(2));
    }

    #[test]
    fn triangle_max_triple_is_group_balanced() {
        let r = group_balance(&triangle_terms()).unwrap();
        // Direct dot products with the basic modular functions.
        let oracle: Vec<Vec<Rational>> = triangle_terms()
            .iter()
            .map(|d| {
                (0..3)
                    .map(|j| {
                        let h: Vec<Rational> = (0..8u32).map(|m| if m & (1 << j) != 0 { int(1) } else { int(0) }).collect();
                        d.dot(&h)
                    })
                    .collect()
            })
            .collect();
        assert_eq!(r.matrix, oracle);
        assert_eq!(r.rank, 2);
        assert_eq!(r.witness, Some(vec![int(1), int(1), int(1)]));
        assert!(r.verdict);
    }

    #[test]
    fn single_expression_balance() {
        let bal = parse_expr("I(X;Y|Z)", &xyz()).unwrap();
        assert!(group_balance(&[bal]).unwrap().verdict);
        let hx = LinExpr::h(3, VarSet(1));
        let r = group_balance(&[hx]).unwrap();
        assert_eq!(r.rank, 1);
        assert!(!r.verdict);
    }

    #[test]
    fn scaling_keeps_verdict() {
        let scaled: Vec<LinExpr> = triangle_terms().iter().map(|d| d.scale(&rat(7, 3))).collect();
        assert!(group_balance(&scaled).unwrap().verdict);
    }

    #[test]
    fn strongly_balanced_transform() {
        let ds = triangle_terms();
        let lam = vec![rat(1, 2), rat(1, 3), rat(1, 6)];
        let dd = to_group_balanced(&ds, &lam).unwrap();
        let mut lhs = LinExpr::zero(3);
        let mut rhs = LinExpr::zero(3);
        for ((d, d2), l) in ds.iter().zip(&dd).zip(&lam) {
            lhs.add_scaled(d2, l);
            rhs.add_scaled(&chan_balance(d).0, l);
        }
        assert_eq!(lhs, rhs);
        let r = group_balance(&dd).unwrap();
        assert_eq!(r.rank, 2);
        for (i, row) in r.matrix.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                let expect = if i == j { int(2) } else { int(-1) };
                assert_eq!(a * &lam[i], expect);
            }
            assert_eq!(row.iter().sum::<Rational>(), int(0));
        }
        assert!(r.verdict);
        assert!(to_group_balanced(&ds, &[int(1), int(0), int(1)]).is_err());
    }

    #[test]
    fn rank_oracle() {
        let m = vec![vec![int(1), int(2)], vec![int(2), int(4)], vec![int(0), int(1)]];
        assert_eq!(rank(&m), 2);
        assert_eq!(rank(&[vec![int(0), int(0)]]), 0);
    }

    #[test]
    fn schedule_parsing() {
        let s: Schedule = "p=1,2,4,8 qmax=64".parse().unwrap();
        assert_eq!(s, Schedule::default());
        assert_eq!(s.to_string().parse::<Schedule>().unwrap(), s);
        assert!("p=0".parse::<Schedule>().is_err());
    }

    #[test]
    fn trivial_ci_clause_tight() {
        let c = parse_constraint("[I(X;Y)=0] => I(X;Y) <= 0").unwrap();
        let gens = elemental(2).unwrap();
        let out = reduce_tight(&c.clauses[0], &gens, &Schedule::default()).unwrap();
        let TightOutcome::Proved { dropped, steps } = out else { panic!() };
        assert_eq!(dropped, vec![0]);
        assert_eq!(steps.len(), 4);
        for s in &steps {
            assert!(s.q <= 1);
            assert!(verify(&s.certificate, &s.certificate.target, &gens, &[]));
        }
    }

    #[test]
    fn slack_regime_on_conditional_triangle_max() {
        let c = parse_constraint("[H(XYZ) + H(X) >= 2H(XY), H(XYZ) + H(Y) >= 2H(YZ)] => 2H(XZ) >= H(XYZ) + H(Z)").unwrap();
        let gens = elemental(3).unwrap();
        let out = reduce_slack(&c.clauses[0], &gens, SlackBudget::default()).unwrap();
        let SlackOutcome::Proved { witness, lambda, certificate } = out else { panic!() };
        assert_eq!(witness, SlackWitness::Modular { weights: vec![int(2), int(0), int(1)] });
        assert_eq!(lambda, vec![int(1), int(1)]);
        assert!(verify(&certificate, &c.clauses[0].consequents[0], &gens, &c.clauses[0].antecedents));
    }

    #[test]
    fn max_driver_on_triangle_max() {
        let clause = Clause::new(vec![], triangle_terms()).unwrap();
        let gens = elemental(3).unwrap();
        let out = max_to_linear(&clause, &xyz(), &gens, &Budget::distributions_only(2, 2), &MaxOptions::default()).unwrap();
        match out {
            MaxOutcome::Valid { lambda, .. } => assert_eq!(lambda, vec![1, 1, 1]),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn max_driver_refutes() {
        let c = parse_constraint("max(-H(X), -H(Y)) >= 0").unwrap();
        let gens = elemental(2).unwrap();
        let out = max_to_linear(&c.clauses[0], &c.vars, &gens, &Budget::distributions_only(2, 2), &MaxOptions::default()).unwrap();
        let MaxOutcome::Invalid { counterexample, .. } = out else { panic!() };
        assert_eq!(counterexample.model.file_text(), "vars 2 2\n0 1 1/2\n1 0 1/2\n");
    }

    #[test]
    fn max_of_single_elemental() {
        let c = parse_constraint("max(H(X)) >= 0").unwrap();
        let gens = elemental(1).unwrap();
        let out = max_to_linear(&c.clauses[0], &c.vars, &gens, &Budget::empty(), &MaxOptions::default()).unwrap();
        assert!(matches!(out, MaxOutcome::Valid { ref lambda, .. } if lambda == &vec![1]));
    }
}
