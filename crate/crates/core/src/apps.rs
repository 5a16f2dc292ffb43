//! Constraint generators for applications and the named fixture corpus.

use std::collections::BTreeSet;
use std::path::Path;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::ci::CiImplication;
use crate::constraint::{BooleanConstraint, Clause};
use crate::error::{BicError, Result};
use crate::expr::{check_n, LinExpr, VarSet};
use crate::parser::parse_constraint;
use crate::rational::{fmt_rational, Rational};

/// The secret-sharing constraint for participants `1 … n−1` and dealer `n`:
/// the secret is determined by every qualified set and independent of every
/// other nonempty set, and then `h(Xₙ) = 0` or some share has
/// `h(Xᵢ) ≥ ℓ·h(Xₙ)`. `access` lists qualified sets of 1-based participants.
/// `h(Xₙ) = 0` appears as `−h(Xₙ) ≥ 0`.
pub fn secret_sharing_constraint(participants: usize, access: &[Vec<usize>], ratio: &Rational) -> Result<BooleanConstraint> {
    let n = participants + 1;
    check_n(n)?;
    if participants == 0 {
        return Err(BicError::Invalid("at least one participant is needed".into()));
    }
    let mut family = BTreeSet::new();
    for set in access {
        let mut mask = 0u32;
        for &p in set {
            if p == 0 || p > participants {
                return Err(BicError::Invalid(format!("participant {p} is not in 1..={participants}")));
            }
            mask |= 1 << (p - 1);
        }
        family.insert(mask);
    }
    let all = (1u32 << participants) - 1;
    if !family.contains(&all) {
        return Err(BicError::NotUpwardClosed(
            "the set of all participants must be qualified".into(),
        ));
    }
    for &f in &family {
        for i in 0..participants {
            let g = f | (1 << i);
            if !family.contains(&g) {
                return Err(BicError::NotUpwardClosed(format!(
                    "{{{}}} is qualified but {{{}}} is not",
                    members(f),
                    members(g)
                )));
            }
        }
    }
    let secret = VarSet::singleton(participants);
    let mut ants = Vec::new();
    for mask in 1..=all {
        let e = if family.contains(&mask) {
            LinExpr::cond_entropy(n, secret, VarSet(mask))
        } else {
            LinExpr::mutual_info(n, secret, VarSet(mask), VarSet(0))
        };
        ants.push(e.clone());
        ants.push(-&e);
    }
    let hs = LinExpr::h(n, secret);
    let mut cons = vec![-&hs];
    for i in 0..participants {
        let mut d = LinExpr::h(n, VarSet::singleton(i));
        d.add_scaled(&hs, &-ratio);
        cons.push(d);
    }
    let vars = (1..=n).map(|i| format!("X{i}")).collect();
    BooleanConstraint::new(vars, vec![Clause::new(ants, cons)?])
}

fn members(mask: u32) -> String {
    let v: Vec<String> = VarSet(mask).iter().map(|i| (i + 1).to_string()).collect();
    v.join(",")
}

/// Parses an access structure written as `12,13,23` (single-digit
/// participants) or `1 2|1 3` (space-separated participants, `|` between
/// sets).
pub fn parse_access(text: &str) -> Result<Vec<Vec<usize>>> {
    let bad = |t: &str| BicError::Invalid(format!("bad access structure element {t:?}"));
    let sets: Vec<&str> = if text.contains('|') {
        text.split('|').collect()
    } else {
        text.split(',').collect()
    };
    sets.iter()
        .map(|s| {
            let s = s.trim();
            if s.is_empty() {
                return Err(bad(s));
            }
            if s.contains(' ') {
                s.split_whitespace().map(|t| t.parse().map_err(|_| bad(t))).collect()
            } else {
                s.chars()
                    .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| bad(s)))
                    .collect()
            }
        })
        .collect()
}

/// Tool verdict a fixture is expected to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Provable,
    NotProvableAtElemental,
    Refutable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    pub expect: Expectation,
    #[serde(default)]
    pub ci: bool,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fixture {
    #[serde(flatten)]
    pub entry: ManifestEntry,
    pub source: String,
}

impl Fixture {
    pub fn constraint(&self) -> Result<BooleanConstraint> {
        parse_constraint(&self.source)
    }

    /// The CI reading of a fixture marked `ci`.
    pub fn ci(&self) -> Option<Result<CiImplication>> {
        self.entry.ci.then(|| CiImplication::parse(&self.source))
    }
}

const MANIFEST: &str = include_str!("../corpus/manifest.json");

const SOURCES: &[(&str, &str)] = &[
    ("triangle_max.iic", include_str!("../corpus/triangle_max.iic")),
    ("matus_k1.iic", include_str!("../corpus/matus_k1.iic")),
    ("matus_k2.iic", include_str!("../corpus/matus_k2.iic")),
    ("matus_k3.iic", include_str!("../corpus/matus_k3.iic")),
    ("shannon_fd.iic", include_str!("../corpus/shannon_fd.iic")),
    ("triangle_conditional.iic", include_str!("../corpus/triangle_conditional.iic")),
    ("essentially_conditioned.iic", include_str!("../corpus/essentially_conditioned.iic")),
    ("tight_schedule_p2.iic", include_str!("../corpus/tight_schedule_p2.iic")),
    ("sample_bic.iic", include_str!("../corpus/sample_bic.iic")),
    ("sample_iip.iic", include_str!("../corpus/sample_iip.iic")),
    ("sample_max.iic", include_str!("../corpus/sample_max.iic")),
    ("sample_cond.iic", include_str!("../corpus/sample_cond.iic")),
    ("sample_ci.iic", include_str!("../corpus/sample_ci.iic")),
    ("agm_triangle.iic", include_str!("../corpus/agm_triangle.iic")),
    ("false_ci.iic", include_str!("../corpus/false_ci.iic")),
    ("false_max.iic", include_str!("../corpus/false_max.iic")),
];

fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    serde_json::from_str(text).map_err(|e| BicError::Invalid(format!("corpus manifest: {e}")))
}

/// The built-in corpus.
pub fn corpus() -> Vec<Fixture> {
    parse_manifest(MANIFEST)
        .expect("built-in manifest")
        .into_iter()
        .map(|entry| {
            let source = SOURCES
                .iter()
                .find(|(f, _)| *f == entry.file)
                .map(|(_, s)| s.to_string())
                .expect("built-in fixture file");
            Fixture { entry, source }
        })
        .collect()
}

/// A corpus read from `dir/manifest.json` and the files it names.
pub fn load_corpus(dir: &Path) -> Result<Vec<Fixture>> {
    let manifest = std::fs::read_to_string(dir.join("manifest.json"))?;
    parse_manifest(&manifest)?
        .into_iter()
        .map(|entry| {
            let source = std::fs::read_to_string(dir.join(&entry.file))
                .map_err(|e| BicError::Io(format!("{}: {e}", entry.file)))?;
            Ok(Fixture { entry, source })
        })
        .collect()
}

pub fn fixture(name: &str) -> Option<Fixture> {
    corpus().into_iter().find(|f| f.entry.name == name)
}

/// The Matúš instance for `k ≥ 1` over `A B C D`:
/// `I(C;D|A) + (k+3)/2·I(C;D|B) + I(A;B) + (k−1)/2·I(B;C|D) + 1/k·I(B;D|C) − I(C;D)`.
pub fn matus(k: u64) -> LinExpr {
    assert!(k >= 1);
    let k = Rational::from_integer(k.into());
    let two = Rational::from_integer(2.into());
    let [a, b, c, d] = [0, 1, 2, 3].map(VarSet::singleton);
    let mi = |y, z, x| LinExpr::mutual_info(4, y, z, x);
    let mut e = mi(c, d, a);
    e.add_scaled(&mi(c, d, b), &((&k + Rational::from_integer(3.into())) / &two));
    e.add_scaled(&mi(a, b, VarSet(0)), &Rational::one());
    e.add_scaled(&mi(b, c, d), &((&k - Rational::one()) / &two));
    e.add_scaled(&mi(b, d, c), &k.recip());
    e.add_scaled(&mi(c, d, VarSet(0)), &-Rational::one());
    e
}

/// The four antecedent terms `I(C;D|A), I(C;D|B), I(A;B), I(B;C|D)`.
pub fn essentially_conditioned_terms() -> [LinExpr; 4] {
    let [a, b, c, d] = [0, 1, 2, 3].map(VarSet::singleton);
    [
        LinExpr::mutual_info(4, c, d, a),
        LinExpr::mutual_info(4, c, d, b),
        LinExpr::mutual_info(4, a, b, VarSet(0)),
        LinExpr::mutual_info(4, b, c, d),
    ]
}

/// `q·(I(C;D|A) + I(C;D|B) + I(A;B) + I(B;C|D)) + (1/p)·h(ABCD) − I(C;D)`.
pub fn tight_schedule_step(p: u64, q: u64) -> LinExpr {
    assert!(p >= 1);
    let mut e = LinExpr::h(4, VarSet::full(4)).scale(&Rational::new(1.into(), p.into()));
    for t in essentially_conditioned_terms() {
        e.add_scaled(&t, &Rational::from_integer(q.into()));
    }
    e.add_scaled(
        &LinExpr::mutual_info(4, VarSet::singleton(2), VarSet::singleton(3), VarSet(0)),
        &-Rational::one(),
    );
    e
}

/// `(k+3)/2` etc. as printed in fixture files.
pub fn matus_coefficients(k: u64) -> [String; 5] {
    let k = Rational::from_integer(k.into());
    let two = Rational::from_integer(2.into());
    [
        Rational::one(),
        (&k + Rational::from_integer(3.into())) / &two,
        Rational::one(),
        (&k - Rational::one()) / &two,
        k.recip(),
    ]
    .map(|q| fmt_rational(&q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn two_of_two_shape() {
        let c = secret_sharing_constraint(2, &[vec![1, 2]], &int(1)).unwrap();
        assert_eq!(c.vars, vec!["X1", "X2", "X3"]);
        let cl = &c.clauses[0];
        assert_eq!(cl.antecedents.len(), 6);
        assert_eq!(cl.consequents.len(), 3);
        let n = 3;
        let s = VarSet(4);
        assert!(cl.antecedents.contains(&LinExpr::cond_entropy(n, s, VarSet(3))));
        assert!(cl.antecedents.contains(&-&LinExpr::mutual_info(n, s, VarSet(1), VarSet(0))));
        assert_eq!(cl.consequents[0], -&LinExpr::h(n, s));
    }

    #[test]
    fn access_structure_validation() {
        assert!(matches!(
            secret_sharing_constraint(2, &[], &int(1)),
            Err(BicError::NotUpwardClosed(_))
        ));
        assert!(matches!(
            secret_sharing_constraint(3, &[vec![1], vec![1, 2, 3]], &int(1)),
            Err(BicError::NotUpwardClosed(_))
        ));
        assert!(secret_sharing_constraint(2, &[vec![3]], &int(1)).is_err());
        assert_eq!(parse_access("12,13,23").unwrap(), vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(parse_access("1 10|2").unwrap(), vec![vec![1, 10], vec![2]]);
    }

    #[test]
    fn corpus_parses_and_round_trips() {
        let all = corpus();
        assert_eq!(all.len(), SOURCES.len());
        for f in &all {
            let c = f.constraint().unwrap();
            let printed = crate::parser::format_constraint(&c);
            assert_eq!(parse_constraint(&printed).unwrap(), c, "{}", f.entry.name);
            if let Some(ci) = f.ci() {
                ci.unwrap();
            }
        }
    }

    #[test]
    fn matus_fixture_matches_generator() {
        for k in 1..=3 {
            let f = fixture(&format!("matus_k{k}")).unwrap();
            let c = f.constraint().unwrap();
            assert_eq!(c.clauses[0].consequents[0], matus(k));
        }
        assert_eq!(matus_coefficients(1), ["1", "2", "1", "0", "1"].map(String::from));
    }

    #[test]
    fn fd_fixture_uses_conditional_entropy() {
        let c = fixture("shannon_fd").unwrap().constraint().unwrap();
        let e = &c.clauses[0].consequents[0];
        let v = &c.vars;
        let idx = |s: &str| VarSet::from_indices(s.chars().map(|ch| v.iter().position(|x| x == &ch.to_string()).unwrap()));
        // h(X|YU) contributes +h(XYU) − h(YU); h(U|XZ) contributes +h(XZU) − h(XZ).
        assert_eq!(e.coeff(idx("XYU")), int(1));
        assert_eq!(e.coeff(idx("YU")), int(-1));
        assert_eq!(e.coeff(idx("XYZU")), int(-2));
    }

    #[test]
    fn tight_step_fixture_matches_generator() {
        let c = fixture("tight_schedule_p2").unwrap().constraint().unwrap();
        assert_eq!(c.clauses[0].consequents[0], tight_schedule_step(2, 3));
    }
}
