//! Exact two-phase simplex over arbitrary-precision rationals.
//!
//! Problems are `minimize cost·x subject to A x = b, x ≥ 0`. Pivoting follows
//! Bland's rule, so the method terminates on degenerate problems. When the
//! system is infeasible the solver returns a Farkas vector `y` with
//! `yᵀA ≥ 0` and `yᵀb < 0`.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible { farkas: Vec<Rational> },
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct StandardLp {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub cost: Vec<Rational>,
}

struct Tableau {
    /// Rows `0..m`: constraint rows, each of width `cols + 1` (last = rhs).
    rows: Vec<Vec<Rational>>,
    /// Reduced-cost row, width `cols + 1` (last = −objective).
    obj: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !prow[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                row[j] -= d;
            }
        }
        if !self.obj[c].is_zero() {
            let f = self.obj[c].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.obj[j] -= d;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations with columns in `allowed`. Returns false when
    /// the objective is unbounded below.
    fn run(&mut self, allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            let enter = (0..self.cols).find(|&j| allowed(j) && self.obj[j].is_negative());
            let Some(c) = enter else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[self.cols] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves a standard-form LP exactly.
pub fn solve(lp: &StandardLp) -> LpOutcome {
    let m = lp.b.len();
    let nv = lp.cost.len();
    assert!(lp.a.iter().all(|r| r.len() == nv), "ragged constraint matrix");
    assert_eq!(lp.a.len(), m);
    let cols = nv + m;
    let mut flip = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        flip[i] = lp.b[i].is_negative();
        let s = if flip[i] { -Rational::one() } else { Rational::one() };
        let mut row = vec![Rational::zero(); cols + 1];
        for (slot, a) in row.iter_mut().zip(&lp.a[i]).take(nv) {
            if !a.is_zero() {
                *slot = a * &s;
            }
        }
        row[nv + i] = Rational::one();
        row[cols] = &lp.b[i] * &s;
        rows.push(row);
    }
    // Phase 1 reduced costs: minimize the sum of artificials.
    let mut obj = vec![Rational::zero(); cols + 1];
    for row in &rows {
        for j in 0..nv {
            obj[j] -= &row[j];
        }
        obj[cols] -= &row[cols];
    }
    let mut t = Tableau {
        rows,
        obj,
        basis: (nv..cols).collect(),
        cols,
    };
    t.run(&|_| true);
    if !t.obj[cols].is_zero() {
        // y = c_B B⁻¹ read from the artificial columns: y_i = 1 − reduced cost.
        let farkas = (0..m)
            .map(|i| {
                let y = Rational::one() - &t.obj[nv + i];
                let z = -y;
                if flip[i] {
                    -z
                } else {
                    z
                }
            })
            .collect();
        return LpOutcome::Infeasible { farkas };
    }
    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= nv {
            if let Some(c) = (0..nv).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, c);
                r += 1;
            } else {
                t.rows.remove(r);
                t.basis.remove(r);
            }
        } else {
            r += 1;
        }
    }
    // Phase 2 reduced costs.
    let mut obj = vec![Rational::zero(); cols + 1];
    obj[..nv].clone_from_slice(&lp.cost);
    for (i, row) in t.rows.iter().enumerate() {
        let cb = &lp.cost[t.basis[i]];
        if cb.is_zero() {
            continue;
        }
        for j in 0..=cols {
            if !row[j].is_zero() {
                obj[j] -= cb * &row[j];
            }
        }
    }
    t.obj = obj;
    if !t.run(&|j| j < nv) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); nv];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < nv {
            x[bv] = t.rows[i][cols].clone();
        }
    }
    let value = -t.obj[cols].clone();
    LpOutcome::Optimal { x, value }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// Builds a standard-form LP from rows with `≤`, `≥` or `=` relations over
/// nonnegative variables, adding slack columns as needed.
#[derive(Clone, Debug, Default)]
pub struct LpBuilder {
    nvars: usize,
    rows: Vec<(Vec<Rational>, Rel, Rational)>,
}

impl LpBuilder {
    pub fn new(nvars: usize) -> Self {
        LpBuilder {
            nvars,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, coeffs: Vec<Rational>, rel: Rel, rhs: Rational) -> &mut Self {
        assert_eq!(coeffs.len(), self.nvars);
        self.rows.push((coeffs, rel, rhs));
        self
    }

    /// Minimizes `cost·x`; the returned point and Farkas vector are over the
    /// original variables and rows respectively.
    pub fn minimize(&self, cost: Vec<Rational>) -> LpOutcome {
        assert_eq!(cost.len(), self.nvars);
        let slacks = self.rows.iter().filter(|r| r.1 != Rel::Eq).count();
        let width = self.nvars + slacks;
        let mut a = Vec::with_capacity(self.rows.len());
        let mut b = Vec::with_capacity(self.rows.len());
        let mut k = self.nvars;
        for (coeffs, rel, rhs) in &self.rows {
            let mut row = coeffs.clone();
            row.resize(width, Rational::zero());
            match rel {
                Rel::Le => {
                    row[k] = Rational::one();
                    k += 1;
                }
                Rel::Ge => {
                    row[k] = -Rational::one();
                    k += 1;
                }
                Rel::Eq => {}
            }
            a.push(row);
            b.push(rhs.clone());
        }
        let mut c = cost;
        c.resize(width, Rational::zero());
        match solve(&StandardLp { a, b, cost: c }) {
            LpOutcome::Optimal { mut x, value } => {
                x.truncate(self.nvars);
                LpOutcome::Optimal { x, value }
            }
            other => other,
        }
    }

    pub fn maximize(&self, cost: Vec<Rational>) -> LpOutcome {
        let neg = cost.into_iter().map(|c| -c).collect();
        match self.minimize(neg) {
            LpOutcome::Optimal { x, value } => LpOutcome::Optimal { x, value: -value },
            other => other,
        }
    }
}
