//! Conditional independence implications: statements, their clause form,
//! proving, the polynomial system Δ and bounded falsification.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::{BooleanConstraint, Clause};
use crate::distributions::Distribution;
use crate::error::{BicError, Result};
use crate::expr::{check_n, LinExpr, VarSet};
use crate::parser::{format_set, CiText};
use crate::rational::Rational;
use crate::reductions::{reduce_tight, Schedule, TightOutcome};
use crate::refuter::{Budget, Counterexample, Model, Search};
use crate::shannon::{prove as shannon_prove, GeneratorSet, ProofCertificate, ProveOutcome};

/// `(Y ⫫ Z | X)`. `Y` and `Z` are nonempty and disjoint from `X`; they may
/// overlap each other, so `(X ⫫ X)` states that `X` is constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CIStatement {
    pub y: VarSet,
    pub z: VarSet,
    pub x: VarSet,
}

impl CIStatement {
    pub fn new(y: VarSet, z: VarSet, x: VarSet) -> Result<Self> {
        if y.is_empty() || z.is_empty() {
            return Err(BicError::Invalid("both sides of a CI statement must be nonempty".into()));
        }
        if !y.is_disjoint(x) || !z.is_disjoint(x) {
            return Err(BicError::Invalid("the conditioning set overlaps a side of the CI statement".into()));
        }
        Ok(CIStatement { y, z, x })
    }

    /// `I(Y;Z|X)` over `n` variables.
    pub fn expr(&self, n: usize) -> LinExpr {
        LinExpr::mutual_info(n, self.y, self.z, self.x)
    }

    pub fn vars(&self) -> VarSet {
        self.y.union(self.z).union(self.x)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a CIStatement, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let s = self.0;
                write!(f, "({} ⫫ {}", format_set(s.y, self.1), format_set(s.z, self.1))?;
                if !s.x.is_empty() {
                    write!(f, " | {}", format_set(s.x, self.1))?;
                }
                write!(f, ")")
            }
        }
        D(self, names)
    }
}

/// A CI implication over named variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CiImplication {
    pub vars: Vec<String>,
    pub antecedents: Vec<CIStatement>,
    pub consequent: CIStatement,
}

impl CiImplication {
    pub fn new(vars: Vec<String>, antecedents: Vec<CIStatement>, consequent: CIStatement) -> Result<Self> {
        check_n(vars.len())?;
        let full = VarSet::full(vars.len());
        for s in antecedents.iter().chain([&consequent]) {
            if !s.vars().is_subset(full) {
                return Err(BicError::VariableCount(vars.len()));
            }
        }
        Ok(CiImplication {
            vars,
            antecedents,
            consequent,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_text(crate::parser::parse_ci(text)?)
    }

    pub fn from_text(t: CiText) -> Result<Self> {
        let st = |(y, z, x): (VarSet, VarSet, VarSet)| CIStatement::new(y, z, x);
        let ants = t.antecedents.into_iter().map(st).collect::<Result<Vec<_>>>()?;
        Self::new(t.vars, ants, st(t.consequent)?)
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn to_clause(&self) -> Clause {
        to_clause(self.n(), &self.antecedents, &self.consequent)
    }

    pub fn to_constraint(&self) -> BooleanConstraint {
        BooleanConstraint::new(self.vars.clone(), vec![self.to_clause()]).expect("statement variables checked")
    }
}

impl fmt::Display for CiImplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ants: Vec<String> = self.antecedents.iter().map(|a| a.display(&self.vars).to_string()).collect();
        write!(f, "{} ⇒ {}", ants.join(" ∧ "), self.consequent.display(&self.vars))
    }
}

/// Each antecedent `I = 0` becomes `I ≥ 0` and `−I ≥ 0`; the consequent is
/// `−I ≥ 0`.
pub fn to_clause(n: usize, antecedents: &[CIStatement], consequent: &CIStatement) -> Clause {
    let mut ants = Vec::with_capacity(2 * antecedents.len());
    for a in antecedents {
        let e = a.expr(n);
        ants.push(-&e);
        ants.push(e);
    }
    Clause::new(ants, vec![-&consequent.expr(n)]).expect("common variable count")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CiProveOutcome {
    /// `−I_consequent = Σ μᵢ(−I_antecedentᵢ) + Σ λ_e g_e` exactly.
    Identity { certificate: ProofCertificate },
    /// Proved through the tight-antecedent schedule.
    Tight { schedule: Schedule, outcome: TightOutcome },
    NotProved { schedule: Schedule, outcome: TightOutcome },
}

impl CiProveOutcome {
    pub fn is_proved(&self) -> bool {
        !matches!(self, CiProveOutcome::NotProved { .. })
    }
}

/// Tries a direct identity first and falls back to the tight schedule.
pub fn prove(imp: &CiImplication, gens: &GeneratorSet, schedule: &Schedule) -> Result<CiProveOutcome> {
    let clause = imp.to_clause();
    let tight: Vec<LinExpr> = imp.antecedents.iter().map(|a| -&a.expr(imp.n())).collect();
    if let ProveOutcome::Proved { certificate } = shannon_prove(&clause.consequents[0], gens, &tight)? {
        return Ok(CiProveOutcome::Identity { certificate });
    }
    let outcome = reduce_tight(&clause, gens, schedule)?;
    Ok(if outcome.is_proved() {
        CiProveOutcome::Tight {
            schedule: schedule.clone(),
            outcome,
        }
    } else {
        CiProveOutcome::NotProved {
            schedule: schedule.clone(),
            outcome,
        }
    })
}

/// `(Σ a)(Σ b) = (Σ c)(Σ d)`, each sum over atom indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductEq {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
    pub d: Vec<usize>,
}

impl ProductEq {
    fn sum(idx: &[usize], p: &[Rational]) -> Rational {
        idx.iter().map(|&i| &p[i]).sum()
    }

    /// `lhs − rhs` at `p`.
    pub fn gap(&self, p: &[Rational]) -> Rational {
        Self::sum(&self.a, p) * Self::sum(&self.b, p) - Self::sum(&self.c, p) * Self::sum(&self.d, p)
    }
}

/// The system Δ over the `Nⁿ` atom probabilities of `[N]ⁿ`: simplex
/// constraints, the product equalities of every antecedent, and the negated
/// consequent as a list of disjuncts (at least one equality fails).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolySystem {
    pub n: usize,
    pub domain: usize,
    pub equalities: Vec<ProductEq>,
    pub negated: Vec<ProductEq>,
}

impl PolySystem {
    pub fn unknowns(&self) -> usize {
        self.domain.pow(self.n as u32)
    }

    /// Whether `p` is a point of Δ, exactly.
    pub fn satisfied_by(&self, p: &[Rational]) -> bool {
        p.len() == self.unknowns()
            && p.iter().all(|v| !v.is_negative())
            && p.iter().sum::<Rational>() == Rational::one()
            && self.equalities.iter().all(|e| e.gap(p).is_zero())
            && self.negated.iter().any(|e| !e.gap(p).is_zero())
    }
}

/// Atom index of `x ∈ [N]ⁿ` with `X₁` most significant.
fn atom(x: &[usize], domain: usize) -> usize {
    x.iter().fold(0, |acc, &v| acc * domain + v)
}

fn assignments(vars: &[usize], domain: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for &v in vars {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..domain).map(move |val| {
                    let mut p = prefix.clone();
                    p.push((v, val));
                    p
                })
            })
            .collect();
    }
    out
}

/// Atoms consistent with a partial assignment.
fn marginal_atoms(n: usize, domain: usize, fixed: &[(usize, usize)], keep: VarSet) -> Vec<usize> {
    let free: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for full in assignments(&free, domain) {
        if fixed
            .iter()
            .filter(|(v, _)| keep.contains(*v))
            .all(|&(v, val)| full[v].1 == val)
        {
            let x: Vec<usize> = full.iter().map(|&(_, val)| val).collect();
            out.push(atom(&x, domain));
        }
    }
    out
}

/// `p(xyz)·p(x) = p(xy)·p(xz)` for every assignment of `X ∪ Y ∪ Z`.
fn product_equalities(n: usize, domain: usize, s: &CIStatement) -> Vec<ProductEq> {
    let vars: Vec<usize> = s.vars().iter().collect();
    assignments(&vars, domain)
        .into_iter()
        .map(|fixed| ProductEq {
            a: marginal_atoms(n, domain, &fixed, s.vars()),
            b: marginal_atoms(n, domain, &fixed, s.x),
            c: marginal_atoms(n, domain, &fixed, s.x.union(s.y)),
            d: marginal_atoms(n, domain, &fixed, s.x.union(s.z)),
        })
        .collect()
}

pub fn build_delta(imp: &CiImplication, domain: usize) -> Result<PolySystem> {
    if domain == 0 {
        return Err(BicError::Invalid("domain size must be at least 1".into()));
    }
    let n = imp.n();
    if (domain as u128).pow(n as u32) > 1 << 20 {
        return Err(BicError::Invalid(format!("{domain}^{n} unknowns is too many")));
    }
    Ok(PolySystem {
        n,
        domain,
        equalities: imp.antecedents.iter().flat_map(|a| product_equalities(n, domain, a)).collect(),
        negated: product_equalities(n, domain, &imp.consequent),
    })
}

/// The atom vector of `dist` inside `[N]ⁿ`; `None` if some domain exceeds `N`.
pub fn embed(dist: &Distribution, domain: usize) -> Option<Vec<Rational>> {
    if dist.dims().iter().any(|&d| d > domain) {
        return None;
    }
    let mut p = vec![Rational::zero(); domain.pow(dist.n() as u32)];
    for (x, q) in dist.support() {
        p[atom(&x, domain)] = q.clone();
    }
    Some(p)
}

fn sum_term(idx: &[usize]) -> String {
    match idx {
        [] => "0.0".into(),
        [i] => format!("p_{i}"),
        _ => {
            let parts: Vec<String> = idx.iter().map(|i| format!("p_{i}")).collect();
            format!("(+ {})", parts.join(" "))
        }
    }
}

fn eq_term(e: &ProductEq) -> String {
    format!(
        "(= (* {} {}) (* {} {}))",
        sum_term(&e.a),
        sum_term(&e.b),
        sum_term(&e.c),
        sum_term(&e.d)
    )
}

/// SMT-LIB 2 (`QF_NRA`) text for Δ, with unknowns `p_0 … p_{Nⁿ−1}`.
pub fn export_delta(sys: &PolySystem) -> String {
    let m = sys.unknowns();
    let mut out = format!(
        "; bic delta n={} N={} unknowns={}\n(set-logic QF_NRA)\n",
        sys.n, sys.domain, m
    );
    for i in 0..m {
        out.push_str(&format!("(declare-const p_{i} Real)\n"));
    }
    for i in 0..m {
        out.push_str(&format!("(assert (>= p_{i} 0.0))\n"));
    }
    let all: Vec<usize> = (0..m).collect();
    out.push_str(&format!("(assert (= {} 1.0))\n", sum_term(&all)));
    for e in &sys.equalities {
        out.push_str(&format!("(assert {})\n", eq_term(e)));
    }
    if sys.negated.is_empty() {
        out.push_str("(assert false)\n");
    } else {
        let ds: Vec<String> = sys.negated.iter().map(|e| format!("(not {})", eq_term(e))).collect();
        out.push_str(&format!("(assert (or {}))\n", ds.join(" ")));
    }
    out.push_str("(check-sat)\n");
    out
}

/// `(n, N, unknowns)` from the header line of [`export_delta`] output.
pub fn parse_delta_header(text: &str) -> Result<(usize, usize, usize)> {
    let bad = || BicError::Invalid("missing or malformed '; bic delta' header".into());
    let line = text.lines().next().ok_or_else(bad)?;
    let rest = line.strip_prefix("; bic delta ").ok_or_else(bad)?;
    let mut vals = [None; 3];
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(bad)?;
        let v: usize = v.parse().map_err(|_| bad())?;
        match k {
            "n" => vals[0] = Some(v),
            "N" => vals[1] = Some(v),
            "unknowns" => vals[2] = Some(v),
            _ => return Err(bad()),
        }
    }
    match vals {
        [Some(n), Some(d), Some(m)] if d.checked_pow(n as u32) == Some(m) => Ok((n, d, m)),
        _ => Err(bad()),
    }
}

/// Limits for [`falsify`]: uniform domain sizes `1 … max_domain` and
/// probabilities with denominators up to `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FalsifyBudget {
    pub max_domain: usize,
    #[serde(rename = "D")]
    pub d: u64,
}

impl FromStr for FalsifyBudget {
    type Err = BicError;

    /// `N=2,D=4`.
    fn from_str(s: &str) -> Result<Self> {
        let mut b = FalsifyBudget { max_domain: 2, d: 4 };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || BicError::Invalid(format!("bad falsify budget item {part:?}; expected N=.. or D=.."));
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            match k {
                "N" => b.max_domain = v.parse().map_err(|_| bad())?,
                "D" => b.d = v.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        Ok(b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum FalsifyOutcome {
    Counterexample {
        domain: usize,
        counterexample: Counterexample,
        /// The pmf as a point of Δ at this domain size.
        #[serde(serialize_with = "crate::rational::ser_rational_vec")]
        atoms: Vec<Rational>,
        /// Index of a consequent product equality that fails.
        violated: usize,
    },
    NotFound {
        budget: FalsifyBudget,
        searched: u64,
    },
}

/// Scans the refuter's distribution stream with domain sizes up to
/// `N = 1, 2, …` and confirms a hit against Δ in exact arithmetic.
pub fn falsify(imp: &CiImplication, budget: FalsifyBudget, workers: usize) -> Result<FalsifyOutcome> {
    let constraint = imp.to_constraint();
    let mut searched = 0u64;
    for domain in 1..=budget.max_domain {
        let search = Search::new(&constraint, &Budget::distributions_only(domain, budget.d))?;
        let Some(cx) = search.scan(0..search.len(), workers)? else {
            searched += search.len();
            continue;
        };
        let Model::Distribution(dist) = &cx.model else {
            unreachable!("distribution-only budget")
        };
        let sys = build_delta(imp, domain)?;
        let atoms = embed(dist, domain).expect("domain bound");
        let disagree = || BicError::Invalid("entropic and product-equality checks disagree".into());
        let violated = sys
            .negated
            .iter()
            .position(|e| !e.gap(&atoms).is_zero())
            .ok_or_else(disagree)?;
        if !sys.satisfied_by(&atoms) {
            return Err(disagree());
        }
        return Ok(FalsifyOutcome::Counterexample {
            domain,
            counterexample: cx,
            atoms,
            violated,
        });
    }
    Ok(FalsifyOutcome::NotFound { budget, searched })
}
