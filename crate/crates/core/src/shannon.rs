//! Provability in the cone spanned by the elemental Shannon inequalities and
//! optional user-supplied valid inequalities, with exact certificates.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::{eval, EntropicCandidate};
use crate::distributions::{Distribution, DistributionJson, DistributionStream};
use crate::error::{BicError, Result};
use crate::expr::{check_n, LinExpr, VarSet};
use crate::lp::{LpBuilder, LpOutcome, Rel, StandardLp};
use crate::models::modular;
use crate::parser::parse_inequality;
use crate::rational::{fmt_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorTag {
    /// `h(Xᵢ | X_{[n]∖i}) ≥ 0`.
    ElementalMonotonicity { i: usize },
    /// `I(Xᵢ; Xⱼ | X_K) ≥ 0` with `i < j` and `K ⊆ [n]∖{i,j}`.
    ElementalSubmodularity { i: usize, j: usize, cond: VarSet },
    UserValid { provenance: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub expr: LinExpr,
    pub tag: GeneratorTag,
}

impl Generator {
    pub fn is_user(&self) -> bool {
        matches!(self.tag, GeneratorTag::UserValid { .. })
    }
}

/// Inequalities `g·h ≥ 0` assumed valid. The elemental part is always the
/// full canonical set for `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSet {
    n: usize,
    gens: Vec<Generator>,
}

/// The elemental inequalities: monotonicity first (by `i`), then
/// submodularity ordered by `(i, j)` and the conditioning mask.
pub fn elemental(n: usize) -> Result<GeneratorSet> {
    check_n(n)?;
    let full = VarSet::full(n);
    let mut gens = Vec::with_capacity(n + n * (n - 1) / 2 * (1 << n.saturating_sub(2)));
    for i in 0..n {
        let xi = VarSet::singleton(i);
        gens.push(Generator {
            id: format!("mono({i})"),
            expr: LinExpr::cond_entropy(n, xi, full.minus(xi)),
            tag: GeneratorTag::ElementalMonotonicity { i },
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let pair = VarSet::from_indices([i, j]);
            let rest = full.minus(pair);
            for k in VarSet::all(n).filter(|k| k.is_subset(rest)) {
                gens.push(Generator {
                    id: format!("sub({i},{j}|{})", k.0),
                    expr: LinExpr::mutual_info(n, VarSet::singleton(i), VarSet::singleton(j), k),
                    tag: GeneratorTag::ElementalSubmodularity { i, j, cond: k },
                });
            }
        }
    }
    Ok(GeneratorSet { n, gens })
}

impl GeneratorSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Generator> {
        self.gens.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Generator> {
        self.gens.iter().find(|g| g.id == id)
    }

    pub fn user_count(&self) -> usize {
        self.gens.iter().filter(|g| g.is_user()).count()
    }

    /// Adds `expr ≥ 0` as a trusted valid inequality.
    pub fn add_user(&mut self, expr: LinExpr, provenance: impl Into<String>) -> Result<&Generator> {
        if expr.n() != self.n {
            return Err(BicError::DimensionMismatch {
                expected: self.n,
                found: expr.n(),
            });
        }
        let id = format!("user({})", self.user_count());
        self.gens.push(Generator {
            id,
            expr,
            tag: GeneratorTag::UserValid {
                provenance: provenance.into(),
            },
        });
        Ok(self.gens.last().expect("just pushed"))
    }

    /// Loads one inequality per line (`a >= b` or `a <= b`); a trailing
    /// `# note` becomes the provenance, otherwise `source:line` is used.
    pub fn load_user(&mut self, text: &str, vars: &[String], source: &str) -> Result<usize> {
        let mut added = 0;
        for (lineno, raw) in text.lines().enumerate() {
            let (body, note) = match raw.split_once('#') {
                Some((b, c)) => (b, c.trim()),
                None => (raw, ""),
            };
            if body.trim().is_empty() {
                continue;
            }
            let expr = parse_inequality(body, vars).map_err(|e| match e {
                BicError::Syntax { message, mut span } => {
                    span.line = lineno + 1;
                    BicError::Syntax {
                        message: format!("{source}: {message}"),
                        span,
                    }
                }
                other => other,
            })?;
            let prov = if note.is_empty() {
                format!("{source}:{}", lineno + 1)
            } else {
                note.to_string()
            };
            self.add_user(expr, prov)?;
            added += 1;
        }
        Ok(added)
    }
}

/// `target = Σ μᵢ·antecedentᵢ + Σ λ_g·g` with all multipliers nonnegative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofCertificate {
    pub target: LinExpr,
    #[serde(
        serialize_with = "crate::rational::ser_rational_vec",
        deserialize_with = "crate::rational::de_rational_vec"
    )]
    pub antecedent_multipliers: Vec<Rational>,
    /// Generator id to multiplier; only nonzero multipliers are listed.
    #[serde(with = "rational_map")]
    pub generator_multipliers: BTreeMap<String, Rational>,
    /// Provenance notes of the user-valid generators the proof relies on.
    pub trusted: Vec<String>,
}

mod rational_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: BTreeMap<&String, String> = m.iter().map(|(k, v)| (k, fmt_rational(v))).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BTreeMap<String, Rational>, D::Error> {
        let strs = BTreeMap::<String, String>::deserialize(d)?;
        strs.into_iter()
            .map(|(k, v)| {
                parse_rational(&v)
                    .map(|q| (k, q))
                    .ok_or_else(|| serde::de::Error::custom("bad multiplier"))
            })
            .collect()
    }
}

impl ProofCertificate {
    /// `target − Σ μᵢ·antecedentᵢ − Σ λ_g·g`; zero for a valid certificate.
    /// Unknown generator ids make the residual `None`.
    pub fn residual(&self, gens: &GeneratorSet, antecedents: &[LinExpr]) -> Option<LinExpr> {
        if self.antecedent_multipliers.len() != antecedents.len() {
            return None;
        }
        let mut r = self.target.clone();
        for (mu, a) in self.antecedent_multipliers.iter().zip(antecedents) {
            if a.n() != r.n() {
                return None;
            }
            r.add_scaled(a, &-mu);
        }
        for (id, lam) in &self.generator_multipliers {
            let g = gens.get(id)?;
            if g.expr.n() != r.n() {
                return None;
            }
            r.add_scaled(&g.expr, &-lam);
        }
        Some(r)
    }
}

/// A point `y` (indexed by subset mask) with `y·g ≥ 0` for every generator,
/// `y·aᵢ ≥ 0` for every antecedent and `y·c < 0`: no certificate exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatingPoint {
    #[serde(
        serialize_with = "crate::rational::ser_rational_vec",
        deserialize_with = "crate::rational::de_rational_vec"
    )]
    pub h: Vec<Rational>,
}

impl SeparatingPoint {
    pub fn separates(&self, c: &LinExpr, gens: &GeneratorSet, antecedents: &[LinExpr]) -> bool {
        self.h.len() == 1 << c.n()
            && self.h[0].is_zero()
            && gens.iter().all(|g| !g.expr.dot(&self.h).is_negative())
            && antecedents.iter().all(|a| !a.dot(&self.h).is_negative())
            && c.dot(&self.h).is_negative()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ProveOutcome {
    Proved { certificate: ProofCertificate },
    /// The cone of the given generators and antecedents does not contain
    /// the target. This says nothing about validity beyond these generators.
    NotProvableAtGeneratorSet { separating: SeparatingPoint },
}

impl ProveOutcome {
    pub fn certificate(&self) -> Option<&ProofCertificate> {
        match self {
            ProveOutcome::Proved { certificate } => Some(certificate),
            _ => None,
        }
    }

    pub fn is_proved(&self) -> bool {
        self.certificate().is_some()
    }
}

fn check_dims(c: &LinExpr, gens: &GeneratorSet, antecedents: &[LinExpr]) -> Result<()> {
    for e in std::iter::once(c).chain(antecedents) {
        if e.n() != gens.n {
            return Err(BicError::DimensionMismatch {
                expected: gens.n,
                found: e.n(),
            });
        }
    }
    Ok(())
}

/// Decides whether `c` lies in the cone generated by `antecedents` and `gens`.
/// Among all certificates, one minimizing the total generator weight is
/// returned, so identities that follow from the antecedents alone come out
/// with zero generator multipliers.
pub fn prove(c: &LinExpr, gens: &GeneratorSet, antecedents: &[LinExpr]) -> Result<ProveOutcome> {
    check_dims(c, gens, antecedents)?;
    let n = gens.n;
    let k = antecedents.len();
    let cols: Vec<&LinExpr> = antecedents.iter().chain(gens.iter().map(|g| &g.expr)).collect();
    let rows = (1usize << n) - 1;
    let mut a = vec![vec![Rational::zero(); cols.len()]; rows];
    for (j, e) in cols.iter().enumerate() {
        for (s, q) in e.terms() {
            a[s.index() - 1][j] = q.clone();
        }
    }
    let b: Vec<Rational> = (1..=rows).map(|m| c.coeff(VarSet(m as u32))).collect();
    let cost = (0..cols.len())
        .map(|j| if j < k { Rational::zero() } else { Rational::one() })
        .collect();
    match crate::lp::solve(&StandardLp { a, b, cost }) {
        LpOutcome::Optimal { x, .. } => {
            let mut generator_multipliers = BTreeMap::new();
            let mut trusted = Vec::new();
            for (g, lam) in gens.iter().zip(&x[k..]) {
                if !lam.is_zero() {
                    generator_multipliers.insert(g.id.clone(), lam.clone());
                    if let GeneratorTag::UserValid { provenance } = &g.tag {
                        trusted.push(provenance.clone());
                    }
                }
            }
            let certificate = ProofCertificate {
                target: c.clone(),
                antecedent_multipliers: x[..k].to_vec(),
                generator_multipliers,
                trusted,
            };
            debug_assert!(verify(&certificate, c, gens, antecedents));
            Ok(ProveOutcome::Proved { certificate })
        }
        LpOutcome::Infeasible { farkas } => {
            let mut h = vec![Rational::zero()];
            h.extend(farkas);
            let separating = SeparatingPoint { h };
            debug_assert!(separating.separates(c, gens, antecedents));
            Ok(ProveOutcome::NotProvableAtGeneratorSet { separating })
        }
        LpOutcome::Unbounded => unreachable!("generator weights are bounded below by zero"),
    }
}

/// Outcome of [`prove_convex`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ConvexOutcome {
    /// `Σ λⱼ dⱼ` with `λ ≥ 0`, `Σ λⱼ = 1` is provable.
    Proved {
        #[serde(
            serialize_with = "crate::rational::ser_rational_vec",
            deserialize_with = "crate::rational::de_rational_vec"
        )]
        lambda: Vec<Rational>,
        certificate: ProofCertificate,
    },
    /// A point satisfying every generator and antecedent on which every
    /// `dⱼ` is negative.
    NotProvableAtGeneratorSet { separating: SeparatingPoint },
}

/// Searches for a convex combination of `ds` that is provable from the
/// antecedents and generators.
pub fn prove_convex(ds: &[LinExpr], gens: &GeneratorSet, antecedents: &[LinExpr]) -> Result<ConvexOutcome> {
    let Some(first) = ds.first() else {
        return Err(BicError::Invalid("no expressions to combine".into()));
    };
    for d in ds {
        check_dims(d, gens, antecedents)?;
    }
    let n = first.n();
    let l = ds.len();
    let k = antecedents.len();
    let m = gens.len();
    let masks = (1usize << n) - 1;
    let width = l + k + m;
    let mut a = vec![vec![Rational::zero(); width]; masks + 1];
    for (j, d) in ds.iter().enumerate() {
        for (s, q) in d.terms() {
            a[s.index() - 1][j] = q.clone();
        }
        a[masks][j] = Rational::one();
    }
    for (i, e) in antecedents.iter().chain(gens.iter().map(|g| &g.expr)).enumerate() {
        for (s, q) in e.terms() {
            a[s.index() - 1][l + i] = -q.clone();
        }
    }
    let mut b = vec![Rational::zero(); masks + 1];
    b[masks] = Rational::one();
    let cost = (0..width)
        .map(|j| if j < l + k { Rational::zero() } else { Rational::one() })
        .collect();
    match crate::lp::solve(&StandardLp { a, b, cost }) {
        LpOutcome::Optimal { x, .. } => {
            let lambda = x[..l].to_vec();
            let mut target = LinExpr::zero(n);
            for (lam, d) in lambda.iter().zip(ds) {
                target.add_scaled(d, lam);
            }
            let mut generator_multipliers = BTreeMap::new();
            let mut trusted = Vec::new();
            for (g, v) in gens.iter().zip(&x[l + k..]) {
                if !v.is_zero() {
                    generator_multipliers.insert(g.id.clone(), v.clone());
                    if let GeneratorTag::UserValid { provenance } = &g.tag {
                        trusted.push(provenance.clone());
                    }
                }
            }
            let certificate = ProofCertificate {
                target,
                antecedent_multipliers: x[l..l + k].to_vec(),
                generator_multipliers,
                trusted,
            };
            Ok(ConvexOutcome::Proved { lambda, certificate })
        }
        LpOutcome::Infeasible { farkas } => {
            let mut h = vec![Rational::zero()];
            h.extend(farkas[..masks].iter().map(|y| -y));
            Ok(ConvexOutcome::NotProvableAtGeneratorSet {
                separating: SeparatingPoint { h },
            })
        }
        LpOutcome::Unbounded => unreachable!("generator weights are bounded below by zero"),
    }
}

/// Exact re-check of a certificate by linear-expression arithmetic alone.
pub fn verify(cert: &ProofCertificate, c: &LinExpr, gens: &GeneratorSet, antecedents: &[LinExpr]) -> bool {
    if &cert.target != c {
        return false;
    }
    if cert.antecedent_multipliers.iter().any(|m| m.is_negative())
        || cert.generator_multipliers.values().any(|m| m.is_negative())
    {
        return false;
    }
    matches!(cert.residual(gens, antecedents), Some(r) if r.is_zero())
}

/// Where a slack witness came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum SlackWitness {
    Modular {
        #[serde(
            serialize_with = "crate::rational::ser_rational_vec",
            deserialize_with = "crate::rational::de_rational_vec"
        )]
        weights: Vec<Rational>,
    },
    Distribution {
        index: u64,
        distribution: DistributionJson,
    },
}

impl SlackWitness {
    pub fn candidate(&self) -> EntropicCandidate {
        match self {
            SlackWitness::Modular { weights } => modular(weights).expect("nonnegative weights"),
            SlackWitness::Distribution { distribution, .. } => {
                let mut pmf = BTreeMap::new();
                for atom in &distribution.pmf {
                    pmf.insert(atom.x.clone(), parse_rational(&atom.p).expect("canonical"));
                }
                Distribution::from_pmf(distribution.dims.clone(), &pmf)
                    .expect("witness distribution")
                    .entropic_vector()
            }
        }
    }
}

/// Search limits for slack witnesses among enumerated distributions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackBudget {
    pub max_support: usize,
    pub max_denominator: u64,
}

impl Default for SlackBudget {
    fn default() -> Self {
        SlackBudget {
            max_support: 2,
            max_denominator: 4,
        }
    }
}

/// Finds `h` with `cᵢ·h > 0` for every `i`: first the modular function
/// maximizing the smallest margin, scaled to a primitive integer weight
/// vector, then the distribution stream.
pub fn joint_slack(cs: &[LinExpr], budget: SlackBudget) -> Result<Option<SlackWitness>> {
    let Some(first) = cs.first() else {
        return Err(BicError::Invalid("joint_slack needs at least one expression".into()));
    };
    let n = first.n();
    for c in cs {
        first.same_n(c)?;
    }
    // Variables: w₁ … wₙ, t.
    let mut lp = LpBuilder::new(n + 1);
    for c in cs {
        let mut row: Vec<Rational> = (0..n).map(|j| c.on_basic_modular(j)).collect();
        row.push(-Rational::one());
        lp.row(row, Rel::Ge, Rational::zero());
    }
    let mut sum = vec![Rational::one(); n];
    sum.push(Rational::zero());
    lp.row(sum, Rel::Eq, Rational::one());
    let mut obj = vec![Rational::zero(); n];
    obj.push(Rational::one());
    if let LpOutcome::Optimal { x, value } = lp.maximize(obj) {
        if value.is_positive() {
            let weights = primitive_integer(&x[..n]);
            return Ok(Some(SlackWitness::Modular { weights }));
        }
    }
    let stream = DistributionStream::new(n, budget.max_support, budget.max_denominator)?;
    for (index, d) in stream.iter() {
        let h = d.entropic_vector();
        let mut all = true;
        for c in cs {
            if eval(c, &h)?.sign() <= 0 {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(SlackWitness::Distribution {
                index,
                distribution: d.to_json(),
            }));
        }
    }
    Ok(None)
}

/// The positive multiple of `v` that is an integer vector with gcd 1.
pub fn primitive_integer(v: &[Rational]) -> Vec<Rational> {
    let den = crate::rational::common_denominator(v.iter());
    let ints: Vec<num_bigint::BigInt> = v
        .iter()
        .map(|q| (q * Rational::from_integer(den.clone())).to_integer())
        .collect();
    let g = ints.iter().fold(num_bigint::BigInt::zero(), |g, x| num_integer::Integer::gcd(&g, x));
    if g.is_zero() {
        return v.to_vec();
    }
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Tightness {
    /// `−c` is provable, so `c·h ≤ 0` everywhere.
    Tight { certificate: ProofCertificate },
    /// Some witness has `c·h > 0`.
    Slack { witness: SlackWitness },
    Unknown,
}

pub fn classify_tight(c: &LinExpr, gens: &GeneratorSet, budget: SlackBudget) -> Result<Tightness> {
    if let ProveOutcome::Proved { certificate } = prove(&-c, gens, &[])? {
        return Ok(Tightness::Tight { certificate });
    }
    match joint_slack(std::slice::from_ref(c), budget)? {
        Some(witness) => Ok(Tightness::Slack { witness }),
        None => Ok(Tightness::Unknown),
    }
}
