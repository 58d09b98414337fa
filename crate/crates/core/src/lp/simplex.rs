//! Exact feasibility for linear systems over nonnegative variables.
//!
//! Phase one of the tableau simplex method on `BigRational`s, pivoting with
//! Bland's smallest-index rule.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};

use crate::rational::{format_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: BTreeMap<usize, Rational>,
    pub rel: Relation,
    pub rhs: Rational,
}

impl Row {
    pub fn new(coeffs: BTreeMap<usize, Rational>, rel: Relation, rhs: Rational) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Self { coeffs, rel, rhs }
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        let lhs: Rational = self.coeffs.iter().map(|(&j, c)| c * &x[j]).sum();
        match self.rel {
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }

    fn is_nonnegativity(&self) -> bool {
        self.rel == Relation::Ge
            && self.rhs.is_zero()
            && self.coeffs.len() == 1
            && self.coeffs.values().all(Signed::is_positive)
    }
}

/// Feasibility problem over variables `0..vars`, all implicitly `≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpInstance {
    pub vars: usize,
    pub rows: Vec<Row>,
}

/// A satisfying assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasiblePoint {
    pub values: Vec<Rational>,
}

impl LpInstance {
    pub fn new(vars: usize) -> Self {
        Self {
            vars,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, coeffs: BTreeMap<usize, Rational>, rel: Relation, rhs: Rational) {
        self.rows.push(Row::new(coeffs, rel, rhs));
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.vars && x.iter().all(|v| !v.is_negative()) && self.rows.iter().all(|r| r.satisfied_by(x))
    }

    /// Plain-text matrix: one line per row with `p/q` coefficients for every
    /// variable, then the relation and the right-hand side.
    pub fn dump(&self) -> String {
        let mut out = format!("vars {} rows {}\n", self.vars, self.rows.len());
        let zero = Rational::zero();
        for r in &self.rows {
            let cells: Vec<String> = (0..self.vars)
                .map(|j| format_rational(r.coeffs.get(&j).unwrap_or(&zero)))
                .collect();
            let rel = match r.rel {
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "{} {} {}", cells.join(" "), rel, format_rational(&r.rhs));
        }
        out
    }

    pub fn feasible(&self) -> Option<FeasiblePoint> {
        feasible(self)
    }
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is rhs.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            for v in self.t[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = self.t[r].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the objective row; returns when no reduced cost is negative.
    fn optimize(&mut self, allowed: usize) {
        let m = self.basis.len();
        loop {
            let obj = &self.t[m];
            let Some(c) = (0..allowed).find(|&j| obj[j].is_negative()) else {
                return;
            };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..m {
                let a = &self.t[i][c];
                if a.is_positive() {
                    let ratio = &self.t[i][self.cols] / a;
                    let better = match &best {
                        None => true,
                        Some((br, bb, _)) => ratio < *br || (ratio == *br && self.basis[i] < *bb),
                    };
                    if better {
                        best = Some((ratio, self.basis[i], i));
                    }
                }
            }
            match best {
                Some((_, _, r)) => self.pivot(r, c),
                // cannot happen for a phase-one objective bounded below by 0
                None => return,
            }
        }
    }
}

/// Returns a point satisfying every row with all variables `≥ 0`, or `None`
/// if the system is infeasible.
pub fn feasible(lp: &LpInstance) -> Option<FeasiblePoint> {
    let rows: Vec<&Row> = lp.rows.iter().filter(|r| !r.is_nonnegativity()).collect();
    for r in &rows {
        if r.coeffs.keys().any(|&j| j >= lp.vars) {
            return None;
        }
    }
    let m = rows.len();
    let n = lp.vars;
    let slacks: Vec<usize> = (0..m).filter(|&i| rows[i].rel == Relation::Ge).collect();
    let ns = slacks.len();
    // columns: structural | slack | artificial | rhs
    let cols = n + ns + m;
    let mut t = vec![vec![Rational::zero(); cols + 1]; m + 1];
    for (i, r) in rows.iter().enumerate() {
        let flip = r.rhs.is_negative();
        let sign = |v: &Rational| if flip { -v.clone() } else { v.clone() };
        for (&j, c) in &r.coeffs {
            t[i][j] = sign(c);
        }
        if let Some(k) = slacks.iter().position(|&s| s == i) {
            t[i][n + k] = sign(&-Rational::one());
        }
        t[i][n + ns + i] = Rational::one();
        t[i][cols] = sign(&r.rhs);
    }
    for j in (0..n + ns).chain(std::iter::once(cols)) {
        let s: Rational = (0..m).map(|i| &t[i][j]).sum();
        t[m][j] = -s;
    }
    let mut tab = Tableau {
        t,
        basis: (0..m).map(|i| n + ns + i).collect(),
        cols,
    };
    tab.optimize(n + ns);
    if !tab.t[m][cols].is_zero() {
        return None;
    }
    let mut values = vec![Rational::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = tab.t[i][cols].clone();
        }
    }
    debug_assert!(lp.is_satisfied_by(&values));
    Some(FeasiblePoint { values })
}
