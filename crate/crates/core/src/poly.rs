//! Linear assertions as polyhedra, the Farkas and Motzkin encodings, and emptiness checks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::lang::AffineExpr;
use crate::lp::{LinForm, LpProblem, LpResult, PivotLimit, Rel, Sense, VarId};
use crate::rational::{self, Rational};

/// `expr <= 0`, or `expr < 0` when `strict`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinConstraint {
    pub expr: AffineExpr,
    pub strict: bool,
}

impl LinConstraint {
    pub fn le(expr: AffineExpr) -> Self {
        LinConstraint { expr, strict: false }
    }

    pub fn lt(expr: AffineExpr) -> Self {
        LinConstraint { expr, strict: true }
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let v = self.expr.eval(x);
        if self.strict {
            v.is_negative()
        } else {
            !v.is_positive()
        }
    }

    pub fn holds_f64(&self, x: &[f64]) -> bool {
        let v = self.expr.eval_f64(x);
        if self.strict {
            v < 0.0
        } else {
            v <= 0.0
        }
    }

    /// `not (e <= 0)` is `-e < 0`, and vice versa.
    pub fn negate(&self) -> Self {
        LinConstraint { expr: self.expr.neg(), strict: !self.strict }
    }

    /// Truth value when the expression has no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        if self.expr.is_constant() {
            Some(self.holds(&vec![Rational::zero(); self.expr.nvars()]))
        } else {
            None
        }
    }

    /// Row form `coeffs · x (<|<=) rhs`.
    pub fn row(&self) -> (Vec<Rational>, Rational) {
        (self.expr.coeffs.clone(), -self.expr.constant.clone())
    }
}

/// Conjunction of linear constraints over `nvars` program variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinAssertion {
    pub nvars: usize,
    pub constraints: Vec<LinConstraint>,
}

/// Dense rows `a · x <= b`.
pub type Rows = Vec<(Vec<Rational>, Rational)>;

impl LinAssertion {
    pub fn new(nvars: usize, constraints: Vec<LinConstraint>) -> Self {
        LinAssertion { nvars, constraints }
    }

    pub fn universe(nvars: usize) -> Self {
        LinAssertion { nvars, constraints: Vec::new() }
    }

    /// `0 <= -1`: the canonical empty set.
    pub fn empty(nvars: usize) -> Self {
        LinAssertion::new(nvars, vec![LinConstraint::le(AffineExpr::constant(nvars, rational::one()))])
    }

    pub fn is_universe(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|c| c.holds(x))
    }

    pub fn contains_f64(&self, x: &[f64]) -> bool {
        self.constraints.iter().all(|c| c.holds_f64(x))
    }

    pub fn and(&self, other: &LinAssertion) -> LinAssertion {
        let mut cs = self.constraints.clone();
        for c in &other.constraints {
            if !cs.contains(c) {
                cs.push(c.clone());
            }
        }
        LinAssertion::new(self.nvars, cs)
    }

    /// Non-strict rows `(A, b)` and strict rows `(B, d)`.
    pub fn rows(&self) -> (Rows, Rows) {
        let mut ns = Vec::new();
        let mut st = Vec::new();
        for c in &self.constraints {
            if c.strict {
                st.push(c.row());
            } else {
                ns.push(c.row());
            }
        }
        (ns, st)
    }

    /// All rows with strictness dropped.
    pub fn closed_rows(&self) -> Rows {
        self.constraints.iter().map(LinConstraint::row).collect()
    }

    pub fn has_strict(&self) -> bool {
        self.constraints.iter().any(|c| c.strict)
    }

    pub fn is_empty(&self) -> Result<bool, PivotLimit> {
        let (a, b) = self.rows();
        emptiness_mixed(self.nvars, &a, &b)
    }

    /// Non-strict closure; an empty set maps to the canonical empty assertion.
    pub fn closure(&self) -> Result<LinAssertion, PivotLimit> {
        if self.is_empty()? {
            return Ok(LinAssertion::empty(self.nvars));
        }
        Ok(LinAssertion::new(
            self.nvars,
            self.constraints.iter().map(|c| LinConstraint { expr: c.expr.clone(), strict: false }).collect(),
        ))
    }
}

fn add_point_vars(lp: &mut LpProblem, n: usize) -> Vec<VarId> {
    (0..n).map(|j| lp.add_var(format!("x{j}"), false)).collect()
}

fn row_form(vars: &[VarId], row: &[Rational]) -> LinForm {
    let mut f = LinForm::zero();
    for (v, a) in vars.iter().zip(row) {
        f.add_term(*v, a);
    }
    f
}

pub fn emptiness_nonstrict(nvars: usize, rows: &[(Vec<Rational>, Rational)]) -> Result<bool, PivotLimit> {
    let mut lp = LpProblem::new();
    let x = add_point_vars(&mut lp, nvars);
    for (a, b) in rows {
        lp.add(&row_form(&x, a) - &LinForm::constant(b.clone()), Rel::Le);
    }
    Ok(lp.feasible()?.is_none())
}

/// Maximizes a common slack `z` in `Bx + z <= d` subject to `Ax <= b`; nonempty iff the
/// optimum is positive or unbounded.
pub fn emptiness_mixed(nvars: usize, nonstrict: &[(Vec<Rational>, Rational)], strict: &[(Vec<Rational>, Rational)]) -> Result<bool, PivotLimit> {
    if strict.is_empty() {
        return emptiness_nonstrict(nvars, nonstrict);
    }
    let mut lp = LpProblem::new();
    let x = add_point_vars(&mut lp, nvars);
    let z = lp.add_var("z", false);
    for (a, b) in nonstrict {
        lp.add(&row_form(&x, a) - &LinForm::constant(b.clone()), Rel::Le);
    }
    for (a, d) in strict {
        let mut f = row_form(&x, a);
        f.add_term(z, &rational::one());
        lp.add(&f - &LinForm::constant(d.clone()), Rel::Le);
    }
    lp.set_objective(Sense::Maximize, LinForm::var(z));
    Ok(match lp.solve()? {
        LpResult::Infeasible { .. } => true,
        LpResult::Unbounded { .. } => false,
        LpResult::Optimal { value, .. } => !value.is_positive(),
    })
}

pub fn emptiness_strict(nvars: usize, strict: &[(Vec<Rational>, Rational)]) -> Result<bool, PivotLimit> {
    emptiness_mixed(nvars, &[], strict)
}

/// Multipliers and emitted rows of one Farkas or Motzkin encoding.
#[derive(Clone, Debug)]
pub struct FarkasBlock {
    pub xi: Vec<VarId>,
    pub zeta: Vec<VarId>,
    pub first_row: usize,
    pub end_row: usize,
}

impl FarkasBlock {
    /// Readable s-expression of the rows this block added to `lp`.
    pub fn sexpr(&self, lp: &LpProblem, tag: &str) -> String {
        let mut s = format!("({tag} (xi");
        for v in &self.xi {
            s.push(' ');
            s.push_str(&lp.names[*v]);
        }
        s.push(')');
        if !self.zeta.is_empty() {
            s.push_str(" (zeta");
            for v in &self.zeta {
                s.push(' ');
                s.push_str(&lp.names[*v]);
            }
            s.push(')');
        }
        for c in &lp.constraints[self.first_row..self.end_row] {
            let op = match c.rel {
                Rel::Le => "<=",
                Rel::Eq => "=",
                Rel::Ge => ">=",
            };
            s.push_str(&format!("\n  ({op} {} 0)", c.form.render(&lp.names)));
        }
        s.push(')');
        s
    }
}

/// Encodes `{x : A x <= b} ⊆ {x : c·x <= d}` as `ξ >= 0, Aᵀξ = c, bᵀξ <= d`, where `c` and `d`
/// are linear forms over the unknowns of `lp`. `h` must be nonempty and closed; with no rows this
/// becomes `c = 0, d >= 0`.
pub fn farkas(lp: &mut LpProblem, h: &Rows, c: &[LinForm], d: &LinForm, prefix: &str) -> FarkasBlock {
    let first_row = lp.constraints.len();
    let xi: Vec<VarId> = (0..h.len()).map(|i| lp.add_var(format!("{prefix}xi{i}"), true)).collect();
    for (j, cj) in c.iter().enumerate() {
        let mut f = LinForm::zero();
        for (i, (a, _)) in h.iter().enumerate() {
            f.add_term(xi[i], &a[j]);
        }
        lp.add(&f - cj, Rel::Eq);
    }
    let mut f = LinForm::zero();
    for (i, (_, b)) in h.iter().enumerate() {
        f.add_term(xi[i], b);
    }
    lp.add(&f - d, Rel::Le);
    FarkasBlock { xi, zeta: Vec::new(), first_row, end_row: lp.constraints.len() }
}

/// Bilinear Motzkin block for `H ∩ {x : B x < c} = ∅` with template-linear `B`, `c`.
///
/// The multipliers on the strict rows multiply unknowns, so the block is kept symbolic until the
/// strict-row weights `ζ` are fixed; with `Σζ = 1` the encoding is
/// `ξ >= 0, Aᵀξ + Bᵀζ = 0, bᵀξ + cᵀζ <= 0`.
#[derive(Clone, Debug)]
pub struct MotzkinBlock {
    pub h: Rows,
    pub b: Vec<Vec<LinForm>>,
    pub c: Vec<LinForm>,
}

impl MotzkinBlock {
    pub fn new(h: Rows, b: Vec<Vec<LinForm>>, c: Vec<LinForm>) -> Self {
        MotzkinBlock { h, b, c }
    }

    pub fn arity(&self) -> usize {
        self.c.len()
    }

    /// Linear block for fixed weights `zeta` (nonnegative, summing to one).
    pub fn instantiate(&self, lp: &mut LpProblem, zeta: &[Rational], prefix: &str) -> FarkasBlock {
        let first_row = lp.constraints.len();
        let nvars = self.h.first().map(|r| r.0.len()).unwrap_or_else(|| self.b.first().map_or(0, Vec::len));
        let xi: Vec<VarId> = (0..self.h.len()).map(|i| lp.add_var(format!("{prefix}xi{i}"), true)).collect();
        for j in 0..nvars {
            let mut f = LinForm::zero();
            for (i, (a, _)) in self.h.iter().enumerate() {
                f.add_term(xi[i], &a[j]);
            }
            for (k, z) in zeta.iter().enumerate() {
                f.add_scaled(&self.b[k][j], z);
            }
            lp.add(f, Rel::Eq);
        }
        let mut f = LinForm::zero();
        for (i, (_, b)) in self.h.iter().enumerate() {
            f.add_term(xi[i], b);
        }
        for (k, z) in zeta.iter().enumerate() {
            f.add_scaled(&self.c[k], z);
        }
        lp.add(f, Rel::Le);
        FarkasBlock { xi, zeta: Vec::new(), first_row, end_row: lp.constraints.len() }
    }

    /// When `B` and `c` are constant the block is linear with `ζ` as unknowns; `Σζ = 1`
    /// normalizes `1ᵀζ > 0`.
    pub fn emit_constant(&self, lp: &mut LpProblem, prefix: &str) -> FarkasBlock {
        let first_row = lp.constraints.len();
        let nvars = self.h.first().map(|r| r.0.len()).unwrap_or_else(|| self.b.first().map_or(0, Vec::len));
        let xi: Vec<VarId> = (0..self.h.len()).map(|i| lp.add_var(format!("{prefix}xi{i}"), true)).collect();
        let zeta: Vec<VarId> = (0..self.arity()).map(|k| lp.add_var(format!("{prefix}zeta{k}"), true)).collect();
        for j in 0..nvars {
            let mut f = LinForm::zero();
            for (i, (a, _)) in self.h.iter().enumerate() {
                f.add_term(xi[i], &a[j]);
            }
            for (k, z) in zeta.iter().enumerate() {
                assert!(self.b[k][j].is_constant(), "emit_constant needs constant rows");
                f.add_term(*z, &self.b[k][j].constant);
            }
            lp.add(f, Rel::Eq);
        }
        let mut f = LinForm::zero();
        for (i, (_, b)) in self.h.iter().enumerate() {
            f.add_term(xi[i], b);
        }
        for (k, z) in zeta.iter().enumerate() {
            f.add_term(*z, &self.c[k].constant);
        }
        lp.add(f, Rel::Le);
        let mut sum = LinForm::constant(-Rational::one());
        for z in &zeta {
            sum.add_term(*z, &rational::one());
        }
        lp.add(sum, Rel::Eq);
        FarkasBlock { xi, zeta, first_row, end_row: lp.constraints.len() }
    }
}
