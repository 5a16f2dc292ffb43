//! Text syntax for information constraints (`.iic` files) and its printer.
//!
//! ```text
//! file        ::= [ "vars" name+ NEWLINE ] clause { "&&" clause }
//! clause      ::= "[" [ relation { "," relation } ] "]" "=>" consequent
//!               | consequent
//! consequent  ::= disjunct { "||" disjunct }
//! disjunct    ::= "max" "(" expr { "," expr } ")" ">=" expr
//!               | relation
//! relation    ::= expr ( ">=" | "<=" | "=" ) expr
//! expr        ::= [ "+" | "-" ] term { ( "+" | "-" ) term }
//! term        ::= factor { [ "*" ] factor }
//! factor      ::= NUMBER [ "/" NUMBER ] | atom | "(" expr ")"
//! atom        ::= ("H" | "h") "(" vars [ "|" vars ] ")"
//!               | "I" "(" vars ";" vars [ "|" vars ] ")"
//! vars        ::= name { [","] name }
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Inside `H(…)` and
//! `I(…)` an all-uppercase token such as `XYZ` names the single-letter
//! variables `X`, `Y`, `Z` unless it is itself a declared variable; any
//! other token (`x1`, `Share2`) is one variable. Without a `vars` line the
//! variables are the names used, in natural sort order.
//!
//! Every expression is homogeneous and linear in `h`: nonzero constant terms
//! and products of two entropy terms are rejected. Numeric literals are
//! integers or `p/q` fractions; decimal literals are rejected so that every
//! coefficient is an exact rational written as such.
//!
//! Equalities expand to a pair of opposite inequalities. In antecedent
//! position `e = 0` becomes two antecedents; as the sole consequent it
//! splits the clause into two clauses; inside a disjunction it is an error.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::constraint::{BooleanConstraint, Clause};
use crate::error::{BicError, Result};
use crate::expr::{LinExpr, VarSet, MAX_VARS};
use crate::rational::{fmt_rational, Rational};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Bar,
    OrOr,
    AndAnd,
    Implies,
    Ge,
    Le,
    Eq,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

fn syntax(message: impl Into<String>, span: SourceSpan) -> BicError {
    BicError::Syntax {
        message: message.into(),
        span,
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let span_at = |end: usize| SourceSpan {
            start,
            end,
            line,
            column: start - line_start + 1,
        };
        let two = if i + 1 < bytes.len() { &src[i..i + 2] } else { "" };
        let (tok, len) = match two {
            "||" => (Tok::OrOr, 2),
            "&&" => (Tok::AndAnd, 2),
            "=>" => (Tok::Implies, 2),
            ">=" => (Tok::Ge, 2),
            "<=" => (Tok::Le, 2),
            _ => match c {
                b'+' => (Tok::Plus, 1),
                b'-' => (Tok::Minus, 1),
                b'*' => (Tok::Star, 1),
                b'/' => (Tok::Slash, 1),
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b'[' => (Tok::LBrack, 1),
                b']' => (Tok::RBrack, 1),
                b',' => (Tok::Comma, 1),
                b';' => (Tok::Semi, 1),
                b'|' => (Tok::Bar, 1),
                b'=' => (Tok::Eq, 1),
                b'0'..=b'9' => {
                    let mut j = i;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j < bytes.len() && (bytes[j] == b'.' || bytes[j] == b'e' || bytes[j] == b'E') {
                        let mut k = j + 1;
                        while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'.') {
                            k += 1;
                        }
                        return Err(syntax(
                            format!("non-rational literal {:?}; write fractions as p/q", &src[i..k]),
                            span_at(k),
                        ));
                    }
                    let n: BigInt = src[i..j].parse().expect("digits");
                    (Tok::Num(n), j - i)
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut j = i;
                    while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                        j += 1;
                    }
                    (Tok::Ident(src[i..j].to_string()), j - i)
                }
                _ => {
                    let ch = src[i..].chars().next().unwrap_or('?');
                    return Err(syntax(format!("unexpected character {ch:?}"), span_at(i + ch.len_utf8())));
                }
            },
        };
        i += len;
        out.push(Token { tok, span: span_at(i) });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            start: src.len(),
            end: src.len(),
            line,
            column: src.len() - line_start + 1,
        },
    });
    Ok(out)
}

/// A linear expression over named variable sets, before names are resolved.
type Named = BTreeMap<BTreeSet<String>, Rational>;

#[derive(Clone, Debug)]
enum Val {
    Const(Rational),
    Lin(Named, SourceSpan),
}

fn named_add(a: &mut Named, b: &Named, q: &Rational) {
    for (k, v) in b {
        let e = a.entry(k.clone()).or_insert_with(Rational::zero);
        *e += v * q;
    }
    a.retain(|k, v| !v.is_zero() && !k.is_empty());
}

fn named_h(set: BTreeSet<String>, q: Rational) -> Named {
    let mut m = Named::new();
    if !set.is_empty() && !q.is_zero() {
        m.insert(set, q);
    }
    m
}

#[derive(Clone, Debug)]
enum Rel {
    Ge(Named),
    Eq(Named, SourceSpan),
}

#[derive(Clone, Debug)]
enum Disjunct {
    Rel(Rel),
    Max(Vec<Named>, SourceSpan),
}

#[derive(Clone, Debug)]
struct RawClause {
    antecedents: Vec<Rel>,
    consequent: Vec<Disjunct>,
    span: SourceSpan,
}

/// A CI statement `I(Y;Z|X) = 0` in named form.
#[derive(Clone, Debug)]
struct RawCi {
    y: BTreeSet<String>,
    z: BTreeSet<String>,
    x: BTreeSet<String>,
    span: SourceSpan,
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    declared: Option<Vec<String>>,
    used: BTreeMap<String, SourceSpan>,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, declared: Option<Vec<String>>) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            declared,
            used: BTreeMap::new(),
            _src: src,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(syntax(format!("expected {what}"), self.span()))
        }
    }

    fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
        SourceSpan {
            start: a.start,
            end: b.end.max(a.end),
            line: a.line,
            column: a.column,
        }
    }

    /// Optional `vars` directive: names on the same line as the keyword.
    fn directive(&mut self) -> Result<()> {
        if let Tok::Ident(k) = self.peek() {
            if k == "vars" && !matches!(self.peek_at(1), Tok::LParen) {
                let line = self.span().line;
                self.bump();
                let mut names = Vec::new();
                while let Tok::Ident(name) = self.peek().clone() {
                    if self.span().line != line {
                        break;
                    }
                    let sp = self.bump().span;
                    if names.contains(&name) {
                        return Err(syntax(format!("variable {name} declared twice"), sp));
                    }
                    names.push(name);
                }
                if names.is_empty() {
                    return Err(syntax("vars directive needs at least one name", self.span()));
                }
                if *self.peek() == Tok::Semi {
                    self.bump();
                }
                self.declared = Some(names);
            }
        }
        Ok(())
    }

    fn constraint(&mut self) -> Result<Vec<RawClause>> {
        self.directive()?;
        let mut clauses = vec![self.clause()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            clauses.push(self.clause()?);
        }
        if *self.peek() != Tok::Eof {
            return Err(syntax("expected '&&' or end of input", self.span()));
        }
        Ok(clauses)
    }

    fn clause(&mut self) -> Result<RawClause> {
        let start = self.span();
        let mut antecedents = Vec::new();
        if *self.peek() == Tok::LBrack {
            self.bump();
            if *self.peek() != Tok::RBrack {
                antecedents.push(self.relation()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    antecedents.push(self.relation()?);
                }
            }
            self.expect(Tok::RBrack, "']'")?;
            self.expect(Tok::Implies, "'=>'")?;
        }
        let mut consequent = vec![self.disjunct()?];
        while *self.peek() == Tok::OrOr {
            self.bump();
            consequent.push(self.disjunct()?);
        }
        let end = self.toks[self.pos.saturating_sub(1)].span;
        Ok(RawClause {
            antecedents,
            consequent,
            span: Self::join(start, end),
        })
    }

    fn disjunct(&mut self) -> Result<Disjunct> {
        if let Tok::Ident(k) = self.peek() {
            if k == "max" && *self.peek_at(1) == Tok::LParen {
                let start = self.bump().span;
                self.bump();
                let mut args = Vec::new();
                if *self.peek() == Tok::RParen {
                    return Err(syntax("empty consequent list in max()", self.span()));
                }
                loop {
                    let v = self.expr()?;
                    args.push(v);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                        continue;
                    }
                    break;
                }
                self.expect(Tok::RParen, "')'")?;
                let op = self.span();
                match self.peek() {
                    Tok::Ge => {
                        self.bump();
                    }
                    Tok::Eq => return Err(syntax("equality in a disjunctive consequent", op)),
                    _ => return Err(syntax("expected '>=' after max(...)", op)),
                }
                let rhs = self.expr()?;
                let end = self.toks[self.pos - 1].span;
                let span = Self::join(start, end);
                let mut out = Vec::new();
                for a in args {
                    out.push(self.linear_diff(a, rhs.clone(), span)?);
                }
                return Ok(Disjunct::Max(out, span));
            }
        }
        Ok(Disjunct::Rel(self.relation()?))
    }

    fn relation(&mut self) -> Result<Rel> {
        let start = self.span();
        let lhs = self.expr()?;
        let op = self.bump();
        let rhs = self.expr()?;
        let end = self.toks[self.pos - 1].span;
        let span = Self::join(start, end);
        match op.tok {
            Tok::Ge => Ok(Rel::Ge(self.linear_diff(lhs, rhs, span)?)),
            Tok::Le => Ok(Rel::Ge(self.linear_diff(rhs, lhs, span)?)),
            Tok::Eq => Ok(Rel::Eq(self.linear_diff(lhs, rhs, span)?, span)),
            _ => Err(syntax("expected '>=', '<=' or '='", op.span)),
        }
    }

    fn linear_diff(&self, a: Val, b: Val, span: SourceSpan) -> Result<Named> {
        let mut out = Named::new();
        for (v, q) in [(a, Rational::one()), (b, -Rational::one())] {
            match v {
                Val::Const(c) if c.is_zero() => {}
                Val::Const(_) => {
                    return Err(syntax("constant terms are not allowed; inequalities are homogeneous in h", span))
                }
                Val::Lin(m, _) => named_add(&mut out, &m, &q),
            }
        }
        Ok(out)
    }

    fn expr(&mut self) -> Result<Val> {
        let mut sign = Rational::one();
        match self.peek() {
            Tok::Minus => {
                self.bump();
                sign = -sign;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        let first = self.term()?;
        let mut acc = scale_val(first, &sign);
        loop {
            let s = match self.peek() {
                Tok::Plus => Rational::one(),
                Tok::Minus => -Rational::one(),
                _ => break,
            };
            let op_span = self.bump().span;
            let t = self.term()?;
            acc = add_vals(acc, scale_val(t, &s), op_span)?;
        }
        Ok(acc)
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Tok::Num(_) | Tok::LParen => true,
            Tok::Ident(k) => (k == "H" || k == "h" || k == "I") && *self.peek_at(1) == Tok::LParen,
            _ => false,
        }
    }

    fn term(&mut self) -> Result<Val> {
        let mut acc = self.factor()?;
        loop {
            let span = self.span();
            if *self.peek() == Tok::Star {
                self.bump();
            } else if !self.starts_factor() {
                break;
            }
            let f = self.factor()?;
            acc = mul_vals(acc, f, span)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Val> {
        let t = self.bump();
        match t.tok {
            Tok::Num(n) => {
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let d = self.bump();
                    match d.tok {
                        Tok::Num(d) if !d.is_zero() => Ok(Val::Const(Rational::new(n, d))),
                        Tok::Num(_) => Err(syntax("zero denominator", d.span)),
                        _ => Err(syntax("expected denominator after '/'", d.span)),
                    }
                } else {
                    Ok(Val::Const(Rational::from_integer(n)))
                }
            }
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(v)
            }
            Tok::Ident(ref k) if (k == "H" || k == "h") && *self.peek() == Tok::LParen => {
                self.bump();
                let y = self.varlist()?;
                let x = if *self.peek() == Tok::Bar {
                    self.bump();
                    self.varlist()?
                } else {
                    BTreeSet::new()
                };
                let end = self.expect(Tok::RParen, "')'")?;
                let xy: BTreeSet<String> = x.union(&y).cloned().collect();
                let mut m = named_h(xy, Rational::one());
                named_add(&mut m, &named_h(x, Rational::one()), &-Rational::one());
                Ok(Val::Lin(m, Self::join(t.span, end)))
            }
            Tok::Ident(ref k) if k == "I" && *self.peek() == Tok::LParen => {
                let ci = self.mutual_info_atom(t.span)?;
                Ok(Val::Lin(mutual_info_named(&ci), ci.span))
            }
            Tok::Ident(k) => Err(syntax(format!("unexpected identifier {k:?}; entropy terms are written H(...) or I(...)"), t.span)),
            Tok::Eof => Err(syntax("unexpected end of input", t.span)),
            _ => Err(syntax("expected a number, H(...), I(...) or '('", t.span)),
        }
    }

    /// Parses `(Y;Z|X)` after the `I` keyword.
    fn mutual_info_atom(&mut self, start: SourceSpan) -> Result<RawCi> {
        self.expect(Tok::LParen, "'('")?;
        let y = self.varlist()?;
        self.expect(Tok::Semi, "';'")?;
        let z = self.varlist()?;
        let x = if *self.peek() == Tok::Bar {
            self.bump();
            self.varlist()?
        } else {
            BTreeSet::new()
        };
        let end = self.expect(Tok::RParen, "')'")?;
        Ok(RawCi {
            y,
            z,
            x,
            span: Self::join(start, end),
        })
    }

    fn varlist(&mut self) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(name) => {
                    let sp = self.bump().span;
                    for v in self.split_name(&name) {
                        self.used.entry(v.clone()).or_insert(sp);
                        out.insert(v);
                    }
                }
                Tok::Comma if !out.is_empty() => {
                    self.bump();
                }
                _ => break,
            }
        }
        if out.is_empty() {
            return Err(syntax("expected variable names", self.span()));
        }
        Ok(out)
    }

    fn split_name(&self, name: &str) -> Vec<String> {
        if let Some(d) = &self.declared {
            if d.iter().any(|v| v == name) {
                return vec![name.to_string()];
            }
        }
        if name.len() > 1 && name.bytes().all(|b| b.is_ascii_uppercase()) {
            name.chars().map(|c| c.to_string()).collect()
        } else {
            vec![name.to_string()]
        }
    }

    /// Final variable list: declared names, or the used names in natural order.
    fn variables(&self) -> Result<Vec<String>> {
        let names = match &self.declared {
            Some(d) => {
                for (u, sp) in &self.used {
                    if !d.contains(u) {
                        return Err(syntax(format!("unknown variable {u:?}"), *sp));
                    }
                }
                d.clone()
            }
            None => {
                let mut v: Vec<String> = self.used.keys().cloned().collect();
                v.sort_by_key(|a| natural_key(a));
                v
            }
        };
        if names.is_empty() {
            return Err(syntax("no variables", SourceSpan::default()));
        }
        if names.len() > MAX_VARS {
            return Err(BicError::VariableCount(names.len()));
        }
        Ok(names)
    }
}

fn natural_key(s: &str) -> (String, u64, String) {
    let digits_at = s.rfind(|c: char| !c.is_ascii_digit()).map(|i| i + 1).unwrap_or(0);
    let (head, tail) = s.split_at(digits_at);
    (head.to_string(), tail.parse().unwrap_or(0), s.to_string())
}

fn mutual_info_named(ci: &RawCi) -> Named {
    let xy: BTreeSet<String> = ci.x.union(&ci.y).cloned().collect();
    let xz: BTreeSet<String> = ci.x.union(&ci.z).cloned().collect();
    let xyz: BTreeSet<String> = xy.union(&ci.z).cloned().collect();
    let mut m = named_h(xy, Rational::one());
    named_add(&mut m, &named_h(xz, Rational::one()), &Rational::one());
    named_add(&mut m, &named_h(xyz, Rational::one()), &-Rational::one());
    named_add(&mut m, &named_h(ci.x.clone(), Rational::one()), &-Rational::one());
    m
}

fn scale_val(v: Val, q: &Rational) -> Val {
    match v {
        Val::Const(c) => Val::Const(c * q),
        Val::Lin(m, sp) => Val::Lin(m.into_iter().map(|(k, c)| (k, c * q)).collect(), sp),
    }
}

fn add_vals(a: Val, b: Val, span: SourceSpan) -> Result<Val> {
    match (a, b) {
        (Val::Const(x), Val::Const(y)) => Ok(Val::Const(x + y)),
        (Val::Lin(mut m, sp), Val::Lin(n, _)) => {
            named_add(&mut m, &n, &Rational::one());
            Ok(Val::Lin(m, sp))
        }
        (Val::Lin(m, sp), Val::Const(c)) | (Val::Const(c), Val::Lin(m, sp)) => {
            if c.is_zero() {
                Ok(Val::Lin(m, sp))
            } else {
                Err(syntax("constant terms are not allowed; inequalities are homogeneous in h", span))
            }
        }
    }
}

fn mul_vals(a: Val, b: Val, span: SourceSpan) -> Result<Val> {
    match (a, b) {
        (Val::Const(x), Val::Const(y)) => Ok(Val::Const(x * y)),
        (Val::Const(c), v @ Val::Lin(..)) | (v @ Val::Lin(..), Val::Const(c)) => Ok(scale_val(v, &c)),
        (Val::Lin(..), Val::Lin(..)) => Err(syntax("product of two entropy terms is not linear", span)),
    }
}

fn resolve(named: &Named, names: &[String]) -> LinExpr {
    let n = names.len();
    let mut e = LinExpr::zero(n);
    for (set, q) in named {
        let mask = VarSet::from_indices(set.iter().map(|v| names.iter().position(|x| x == v).expect("resolved")));
        e.add_term(mask, q.clone());
    }
    e
}

fn resolve_set(set: &BTreeSet<String>, names: &[String]) -> VarSet {
    VarSet::from_indices(set.iter().map(|v| names.iter().position(|x| x == v).expect("resolved")))
}

/// Parses one linear expression over the given ordered variables.
pub fn parse_expr(text: &str, vars: &[String]) -> Result<LinExpr> {
    let mut p = Parser::new(text, Some(vars.to_vec()))?;
    let v = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(syntax("unexpected trailing input", p.span()));
    }
    p.variables()?;
    match v {
        Val::Const(c) if c.is_zero() => Ok(LinExpr::zero(vars.len())),
        Val::Const(_) => Err(syntax("constant expression; expected entropy terms", SourceSpan::default())),
        Val::Lin(m, _) => Ok(resolve(&m, vars)),
    }
}

/// Parses a single inequality `a >= b` or `a <= b` into `e` with `e·h ≥ 0`.
pub fn parse_inequality(text: &str, vars: &[String]) -> Result<LinExpr> {
    let mut p = Parser::new(text, Some(vars.to_vec()))?;
    let r = p.relation()?;
    if *p.peek() != Tok::Eof {
        return Err(syntax("unexpected trailing input", p.span()));
    }
    p.variables()?;
    match r {
        Rel::Ge(m) => Ok(resolve(&m, vars)),
        Rel::Eq(_, sp) => Err(syntax("expected an inequality, found an equality", sp)),
    }
}

/// Parses a full constraint file.
pub fn parse_constraint(text: &str) -> Result<BooleanConstraint> {
    let mut p = Parser::new(text, None)?;
    let raw = p.constraint()?;
    let names = p.variables()?;
    let mut clauses = Vec::new();
    for rc in raw {
        let mut ants = Vec::new();
        for a in &rc.antecedents {
            match a {
                Rel::Ge(m) => ants.push(resolve(m, &names)),
                Rel::Eq(m, _) => {
                    let e = resolve(m, &names);
                    ants.push(e.clone());
                    ants.push(-&e);
                }
            }
        }
        let single = rc.consequent.len() == 1;
        let mut cons = Vec::new();
        let mut split_eq = None;
        for d in &rc.consequent {
            match d {
                Disjunct::Rel(Rel::Ge(m)) => cons.push(resolve(m, &names)),
                Disjunct::Rel(Rel::Eq(m, sp)) => {
                    if !single {
                        return Err(syntax("equality in a disjunctive consequent", *sp));
                    }
                    split_eq = Some(resolve(m, &names));
                }
                Disjunct::Max(ms, sp) => {
                    if ms.is_empty() {
                        return Err(syntax("empty consequent list", *sp));
                    }
                    cons.extend(ms.iter().map(|m| resolve(m, &names)));
                }
            }
        }
        if let Some(e) = split_eq {
            clauses.push(Clause::new(ants.clone(), vec![e.clone()])?);
            clauses.push(Clause::new(ants, vec![-&e])?);
        } else {
            if cons.is_empty() {
                return Err(syntax("empty consequent list", rc.span));
            }
            clauses.push(Clause::new(ants, cons)?);
        }
    }
    BooleanConstraint::new(names, clauses)
}

/// A conditional-independence implication in parsed form: each statement is
/// `(Y, Z, X)` meaning `I(Y;Z|X) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiText {
    pub vars: Vec<String>,
    pub antecedents: Vec<(VarSet, VarSet, VarSet)>,
    pub consequent: (VarSet, VarSet, VarSet),
}

/// Parses `[I(Y1;Z1|X1) = 0, …] => I(Y;Z|X) = 0`; the bracket may be omitted
/// when there are no antecedents.
pub fn parse_ci(text: &str) -> Result<CiText> {
    let mut p = Parser::new(text, None)?;
    p.directive()?;
    let mut ants = Vec::new();
    if *p.peek() == Tok::LBrack {
        p.bump();
        if *p.peek() != Tok::RBrack {
            ants.push(ci_statement(&mut p)?);
            while *p.peek() == Tok::Comma {
                p.bump();
                ants.push(ci_statement(&mut p)?);
            }
        }
        p.expect(Tok::RBrack, "']'")?;
        p.expect(Tok::Implies, "'=>'")?;
    }
    let cons = ci_statement(&mut p)?;
    if *p.peek() != Tok::Eof {
        return Err(syntax("unexpected trailing input", p.span()));
    }
    let names = p.variables()?;
    let conv = |c: &RawCi| (resolve_set(&c.y, &names), resolve_set(&c.z, &names), resolve_set(&c.x, &names));
    Ok(CiText {
        antecedents: ants.iter().map(conv).collect(),
        consequent: conv(&cons),
        vars: names,
    })
}

fn ci_statement(p: &mut Parser) -> Result<RawCi> {
    let t = p.bump();
    match t.tok {
        Tok::Ident(ref k) if k == "I" => {}
        _ => return Err(syntax("expected a CI statement I(Y;Z|X) = 0", t.span)),
    }
    let ci = p.mutual_info_atom(t.span)?;
    p.expect(Tok::Eq, "'= 0'")?;
    match p.bump().tok {
        Tok::Num(n) if n.is_zero() => Ok(ci),
        _ => Err(syntax("a CI statement must be '= 0'", ci.span)),
    }
}

fn juxtaposable(names: &[String]) -> bool {
    names.iter().all(|n| n.len() == 1 && n.as_bytes()[0].is_ascii_uppercase())
}

pub fn format_set(set: VarSet, names: &[String]) -> String {
    let parts: Vec<&str> = set.iter().map(|i| names[i].as_str()).collect();
    if juxtaposable(names) {
        parts.concat()
    } else {
        parts.join(" ")
    }
}

/// Canonical text of an expression: terms in subset-index order.
pub fn format_expr(e: &LinExpr, names: &[String]) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (set, q)) in e.terms().enumerate() {
        let neg = q < &Rational::zero();
        let mag = if neg { -q.clone() } else { q.clone() };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !mag.is_one() {
            out.push_str(&fmt_rational(&mag));
            out.push('*');
        }
        out.push_str("H(");
        out.push_str(&format_set(set, names));
        out.push(')');
    }
    out
}

pub fn format_clause(c: &Clause, names: &[String]) -> String {
    let mut out = String::new();
    if !c.antecedents.is_empty() {
        let ants: Vec<String> = c
            .antecedents
            .iter()
            .map(|a| format!("{} >= 0", format_expr(a, names)))
            .collect();
        out.push('[');
        out.push_str(&ants.join(", "));
        out.push_str("] => ");
    }
    if c.consequents.len() == 1 {
        out.push_str(&format_expr(&c.consequents[0], names));
    } else {
        let parts: Vec<String> = c.consequents.iter().map(|d| format_expr(d, names)).collect();
        out.push_str("max(");
        out.push_str(&parts.join(", "));
        out.push(')');
    }
    out.push_str(" >= 0");
    out
}

/// Canonical `.iic` text: a `vars` line, then the clauses joined by `&&`.
pub fn format_constraint(c: &BooleanConstraint) -> String {
    let clauses: Vec<String> = c.clauses.iter().map(|cl| format_clause(cl, &c.vars)).collect();
    format!("vars {}\n{}\n", c.vars.join(" "), clauses.join("\n&& "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn xyz() -> Vec<String> {
        ["X", "Y", "Z"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn conditional_mutual_information() {
        let e = parse_expr("I(Y;Z|X)", &xyz()).unwrap();
        assert_eq!(e.coeff(VarSet(0b011)), int(1));
        assert_eq!(e.coeff(VarSet(0b101)), int(1));
        assert_eq!(e.coeff(VarSet(0b111)), int(-1));
        assert_eq!(e.coeff(VarSet(0b001)), int(-1));
        assert_eq!(e.terms().count(), 4);
    }

    #[test]
    fn conditional_entropy() {
        let e = parse_expr("H(Y|X)", &xyz()).unwrap();
        assert_eq!(e, LinExpr::from_terms(3, [(VarSet(3), int(1)), (VarSet(1), int(-1))]));
    }

    #[test]
    fn scaled_terms() {
        let e = parse_expr("2*H(XY) - H(X) - H(XYZ)", &xyz()).unwrap();
        assert_eq!(
            e,
            LinExpr::from_terms(3, [(VarSet(3), int(2)), (VarSet(1), int(-1)), (VarSet(7), int(-1))])
        );
        let j = parse_expr("2H(XY) - H(X) - H(XYZ)", &xyz()).unwrap();
        assert_eq!(e, j);
        let k = parse_expr("(2/3)h(XYZ)", &xyz()).unwrap();
        assert_eq!(k.coeff(VarSet(7)), crate::rational::rat(2, 3));
    }

    #[test]
    fn ci_row_expands_equalities() {
        let c = parse_constraint("[I(X;Y)=0, I(X;Z|Y)=0] => I(X;Z) <= 0").unwrap();
        assert_eq!(c.clauses.len(), 1);
        assert_eq!(c.clauses[0].antecedents.len(), 4);
        assert_eq!(c.clauses[0].consequents.len(), 1);
        let i_xz = parse_expr("I(X;Z)", &xyz()).unwrap();
        assert_eq!(c.clauses[0].consequents[0], -&i_xz);
    }

    #[test]
    fn consequent_equality_splits_clause() {
        let c = parse_constraint("[I(X;Y)=0, I(X;Z|Y)=0] => I(X;Z) = 0").unwrap();
        assert_eq!(c.clauses.len(), 2);
        assert_eq!(c.clauses[0].consequents[0], -&c.clauses[1].consequents[0]);
    }

    #[test]
    fn max_inequality() {
        let c = parse_constraint("max(2H(XY)-H(X)-H(XYZ), 2H(YZ)-H(Y)-H(XYZ), 2H(XZ)-H(Z)-H(XYZ)) >= 0").unwrap();
        assert_eq!(c.clauses.len(), 1);
        assert!(c.clauses[0].antecedents.is_empty());
        assert_eq!(c.clauses[0].consequents.len(), 3);
    }

    #[test]
    fn simple_inequality() {
        let c = parse_constraint("H(X) >= 0").unwrap();
        assert_eq!(c.clauses.len(), 1);
        assert!(c.clauses[0].antecedents.is_empty());
        assert_eq!(c.clauses[0].consequents.len(), 1);
        assert_eq!(c.vars, vec!["X".to_string()]);
    }

    #[test]
    fn max_with_rhs() {
        let c = parse_constraint("max(h(XY),h(YZ),h(XZ)) >= (2/3)h(XYZ)").unwrap();
        let d = &c.clauses[0].consequents[0];
        assert_eq!(d.coeff(VarSet(3)), int(1));
        assert_eq!(d.coeff(VarSet(7)), crate::rational::rat(-2, 3));
    }

    #[test]
    fn errors_carry_spans() {
        match parse_constraint("H(X) >=\n  1.5*H(Y)").unwrap_err() {
            BicError::Syntax { message, span } => {
                assert!(message.contains("non-rational"));
                assert_eq!((span.line, span.column), (2, 3));
            }
            e => panic!("{e}"),
        }
        match parse_expr("H(W)", &xyz()).unwrap_err() {
            BicError::Syntax { message, span } => {
                assert!(message.contains("unknown variable"));
                assert_eq!(span.start, 2);
            }
            e => panic!("{e}"),
        }
        assert!(parse_constraint("max() >= 0").is_err());
        assert!(parse_constraint("H(X) = 0 || H(Y) >= 0").is_err());
        assert!(parse_constraint("max(H(X), H(Y)) = 0").is_err());
        assert!(parse_constraint("H(X) >= 1").is_err());
        assert!(parse_constraint("H(X)*H(Y) >= 0").is_err());
    }

    #[test]
    fn vars_directive_fixes_order() {
        let c = parse_constraint("vars A B C D  # four variables\nI(C;D|A) >= 0").unwrap();
        assert_eq!(c.n(), 4);
        assert_eq!(c.clauses[0].consequents[0].coeff(VarSet(0b1101)), int(-1));
    }

    #[test]
    fn multi_letter_names() {
        let c = parse_constraint("H(x1 x2) - H(x1) >= 0").unwrap();
        assert_eq!(c.vars, vec!["x1".to_string(), "x2".to_string()]);
        let text = format_constraint(&c);
        assert_eq!(text, "vars x1 x2\n-H(x1) + H(x1 x2) >= 0\n");
        assert_eq!(parse_constraint(&text).unwrap(), c);
    }

    #[test]
    fn printer_round_trips() {
        let c = parse_constraint("[H(XYZ) + H(X) >= 2H(XY), h(XYZ)+h(Y) >= 2h(YZ)] => 2h(XZ) >= h(XYZ) + h(Z)").unwrap();
        let text = format_constraint(&c);
        assert_eq!(parse_constraint(&text).unwrap(), c);
    }

    #[test]
    fn ci_text() {
        let ci = parse_ci("[I(X;Y)=0, I(X;Z|Y)=0] => I(X;Z)=0").unwrap();
        assert_eq!(ci.vars.len(), 3);
        assert_eq!(ci.antecedents.len(), 2);
        assert_eq!(ci.consequent, (VarSet(1), VarSet(4), VarSet(0)));
        let lone = parse_ci("I(X;X) = 0").unwrap();
        assert!(lone.antecedents.is_empty());
    }
}
