//! Exact rational linear programming: a dense two-phase simplex with Bland's rule.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::Write;
use core::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::qnum::Q;
use crate::rational::{fmt_short, Rational};

pub type VarId = usize;

pub const PIVOT_LIMIT: u64 = 1_000_000;
/// Consecutive degenerate pivots tolerated before pricing falls back to Bland's rule.
const DEGENERATE_RUN: u32 = 50;

/// Affine form over LP variables: `Σ terms[v]·v + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinForm {
    pub terms: BTreeMap<VarId, Rational>,
    pub constant: Rational,
}

impl LinForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, Rational::one())
    }

    pub fn term(v: VarId, coef: Rational) -> Self {
        let mut f = Self::zero();
        f.add_term(v, &coef);
        f
    }

    pub fn constant(c: Rational) -> Self {
        LinForm { terms: BTreeMap::new(), constant: c }
    }

    pub fn add_term(&mut self, v: VarId, coef: &Rational) {
        if coef.is_zero() {
            return;
        }
        let entry = self.terms.entry(v).or_insert_with(Rational::zero);
        *entry += coef;
        if entry.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn add_scaled(&mut self, other: &LinForm, k: &Rational) {
        if k.is_zero() {
            return;
        }
        for (v, c) in &other.terms {
            self.add_term(*v, &(c * k));
        }
        self.constant += &other.constant * k;
    }

    pub fn coef(&self, v: VarId) -> Rational {
        self.terms.get(&v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut s = self.constant.clone();
        for (v, c) in &self.terms {
            s += c * &x[*v];
        }
        s
    }

    pub fn scaled(&self, k: &Rational) -> LinForm {
        let mut f = LinForm::zero();
        f.add_scaled(self, k);
        f
    }

    pub fn render(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (v, c) in &self.terms {
            let name = names.get(*v).map(String::as_str).unwrap_or("?");
            if out.is_empty() {
                if c.is_one() {
                    let _ = write!(out, "{name}");
                } else if (-c).is_one() {
                    let _ = write!(out, "-{name}");
                } else {
                    let _ = write!(out, "{}*{name}", fmt_short(c));
                }
            } else if c.is_negative() {
                if (-c).is_one() {
                    let _ = write!(out, " - {name}");
                } else {
                    let _ = write!(out, " - {}*{name}", fmt_short(&-c));
                }
            } else if c.is_one() {
                let _ = write!(out, " + {name}");
            } else {
                let _ = write!(out, " + {}*{name}", fmt_short(c));
            }
        }
        if out.is_empty() {
            return fmt_short(&self.constant);
        }
        if self.constant.is_positive() {
            let _ = write!(out, " + {}", fmt_short(&self.constant));
        } else if self.constant.is_negative() {
            let _ = write!(out, " - {}", fmt_short(&-&self.constant));
        }
        out
    }
}

impl Add<&LinForm> for &LinForm {
    type Output = LinForm;
    fn add(self, rhs: &LinForm) -> LinForm {
        let mut f = self.clone();
        f.add_scaled(rhs, &Rational::one());
        f
    }
}

impl Sub<&LinForm> for &LinForm {
    type Output = LinForm;
    fn sub(self, rhs: &LinForm) -> LinForm {
        let mut f = self.clone();
        f.add_scaled(rhs, &-Rational::one());
        f
    }
}

impl Neg for &LinForm {
    type Output = LinForm;
    fn neg(self) -> LinForm {
        self.scaled(&-Rational::one())
    }
}

impl Mul<&Rational> for &LinForm {
    type Output = LinForm;
    fn mul(self, k: &Rational) -> LinForm {
        self.scaled(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

/// `form REL 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub form: LinForm,
    pub rel: Rel,
}

impl Constraint {
    pub fn holds(&self, x: &[Rational]) -> bool {
        let v = self.form.eval(x);
        match self.rel {
            Rel::Le => !v.is_positive(),
            Rel::Eq => v.is_zero(),
            Rel::Ge => !v.is_negative(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub names: Vec<String>,
    pub nonneg: Vec<bool>,
    pub constraints: Vec<Constraint>,
    pub objective: Option<(Sense, LinForm)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpResult {
    /// `residual` is the phase-one optimum (sum of artificial values), a crude infeasibility measure.
    Infeasible { residual: Rational },
    Optimal { value: Rational, x: Vec<Rational> },
    /// Feasible point plus a direction along which the objective improves without bound.
    Unbounded { x: Vec<Rational>, ray: Vec<Rational> },
}

impl LpResult {
    pub fn point(&self) -> Option<&[Rational]> {
        match self {
            LpResult::Optimal { x, .. } | LpResult::Unbounded { x, .. } => Some(x),
            LpResult::Infeasible { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("simplex aborted after {0} pivots")]
pub struct PivotLimit(pub u64);

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, nonneg: bool) -> VarId {
        self.names.push(name.into());
        self.nonneg.push(nonneg);
        self.names.len() - 1
    }

    pub fn add(&mut self, form: LinForm, rel: Rel) {
        self.constraints.push(Constraint { form, rel });
    }

    pub fn add_le(&mut self, lhs: &LinForm, rhs: &LinForm) {
        self.add(lhs - rhs, Rel::Le);
    }

    pub fn add_eq(&mut self, lhs: &LinForm, rhs: &LinForm) {
        self.add(lhs - rhs, Rel::Eq);
    }

    pub fn set_objective(&mut self, sense: Sense, form: LinForm) {
        self.objective = Some((sense, form));
    }

    /// Exact re-substitution check of a candidate point.
    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.nonneg.iter().zip(x).all(|(nn, v)| !*nn || !v.is_negative())
            && self.constraints.iter().all(|c| c.holds(x))
    }

    /// Checks that `ray` is a recession direction that strictly improves the objective.
    pub fn is_improving_ray(&self, ray: &[Rational]) -> bool {
        let Some((sense, obj)) = &self.objective else { return false };
        if ray.len() != self.num_vars() {
            return false;
        }
        if self.nonneg.iter().zip(ray).any(|(nn, v)| *nn && v.is_negative()) {
            return false;
        }
        let homog = |f: &LinForm| {
            let mut s = Rational::zero();
            for (v, c) in &f.terms {
                s += c * &ray[*v];
            }
            s
        };
        let rows_ok = self.constraints.iter().all(|c| {
            let v = homog(&c.form);
            match c.rel {
                Rel::Le => !v.is_positive(),
                Rel::Eq => v.is_zero(),
                Rel::Ge => !v.is_negative(),
            }
        });
        let gain = homog(obj);
        rows_ok
            && match sense {
                Sense::Maximize => gain.is_positive(),
                Sense::Minimize => gain.is_negative(),
            }
    }

    pub fn solve(&self) -> Result<LpResult, PivotLimit> {
        Simplex::build(self).run(self, true)
    }

    /// Phase one only.
    pub fn feasible(&self) -> Result<Option<Vec<Rational>>, PivotLimit> {
        Ok(match Simplex::build(self).run(self, false)? {
            LpResult::Infeasible { .. } => None,
            other => other.point().map(<[Rational]>::to_vec),
        })
    }

    /// Plain-text dump in an LP-like format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        match &self.objective {
            Some((Sense::Maximize, f)) => {
                let _ = writeln!(out, "maximize\n  {}", f.render(&self.names));
            }
            Some((Sense::Minimize, f)) => {
                let _ = writeln!(out, "minimize\n  {}", f.render(&self.names));
            }
            None => {
                let _ = writeln!(out, "feasibility");
            }
        }
        let _ = writeln!(out, "subject to");
        for c in &self.constraints {
            let mut lhs = c.form.clone();
            let rhs = -core::mem::take(&mut lhs.constant);
            let rel = match c.rel {
                Rel::Le => "<=",
                Rel::Eq => "=",
                Rel::Ge => ">=",
            };
            let _ = writeln!(out, "  {} {rel} {}", lhs.render(&self.names), fmt_short(&rhs));
        }
        let _ = writeln!(out, "bounds");
        for (name, nn) in self.names.iter().zip(&self.nonneg) {
            if *nn {
                let _ = writeln!(out, "  {name} >= 0");
            } else {
                let _ = writeln!(out, "  {name} free");
            }
        }
        out
    }
}

/// Column layout: split originals, then slack/surplus, then artificials.
struct Simplex {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    ncols: usize,
    first_art: usize,
    /// (positive column, optional negative column) per original variable.
    map: Vec<(usize, Option<usize>)>,
    pivots: u64,
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

impl Simplex {
    fn build(p: &LpProblem) -> Self {
        let mut map = Vec::with_capacity(p.num_vars());
        let mut col = 0;
        for nn in &p.nonneg {
            if *nn {
                map.push((col, None));
                col += 1;
            } else {
                map.push((col, Some(col + 1)));
                col += 2;
            }
        }
        let mut slack_count = 0;
        let mut art_count = 0;
        let mut normalized = Vec::with_capacity(p.constraints.len());
        for c in &p.constraints {
            let rhs = -&c.form.constant;
            let flip = rhs.is_negative();
            let rel = match (c.rel, flip) {
                (Rel::Le, true) => Rel::Ge,
                (Rel::Ge, true) => Rel::Le,
                (r, _) => r,
            };
            match rel {
                Rel::Le => slack_count += 1,
                Rel::Ge => {
                    slack_count += 1;
                    art_count += 1;
                }
                Rel::Eq => art_count += 1,
            }
            normalized.push((c, flip, rel, rhs));
        }
        let first_slack = col;
        let first_art = first_slack + slack_count;
        let ncols = first_art + art_count;
        let mut rows = Vec::with_capacity(normalized.len());
        let mut basis = Vec::with_capacity(normalized.len());
        let mut next_slack = first_slack;
        let mut next_art = first_art;
        for (c, flip, rel, rhs) in normalized {
            let mut row = vec![Q::ZERO; ncols + 1];
            for (v, k) in &c.form.terms {
                let k = Q::from_rational(&if flip { -k } else { k.clone() });
                let (pos, neg) = map[*v];
                if let Some(neg) = neg {
                    row[neg] = k.neg();
                }
                row[pos] = k;
            }
            row[ncols] = Q::from_rational(&if flip { -rhs } else { rhs });
            match rel {
                Rel::Le => {
                    row[next_slack] = Q::ONE;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Rel::Ge => {
                    row[next_slack] = Q::ONE.neg();
                    next_slack += 1;
                    row[next_art] = Q::ONE;
                    basis.push(next_art);
                    next_art += 1;
                }
                Rel::Eq => {
                    row[next_art] = Q::ONE;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            rows.push(row);
        }
        Simplex { rows, basis, ncols, first_art, map, pivots: 0 }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Q]) {
        let mut prow = core::mem::take(&mut self.rows[r]);
        let piv = prow[c].clone();
        if !piv.is_one() {
            for v in prow.iter_mut() {
                if !v.is_zero() {
                    *v = v.div(&piv);
                }
            }
        }
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        let eliminate = |row: &mut [Q]| {
            if row[c].is_zero() {
                return;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] = row[j].sub(&f.mul(&prow[j]));
            }
        };
        for row in self.rows.iter_mut() {
            if !row.is_empty() {
                eliminate(row);
            }
        }
        eliminate(obj);
        self.rows[r] = prow;
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes the objective row over columns `< limit`: most negative reduced cost, switching to
    /// Bland's rule after a run of degenerate pivots so cycling cannot occur.
    fn iterate(&mut self, obj: &mut [Q], limit: usize) -> Result<Phase, PivotLimit> {
        let rhs = self.ncols;
        let mut degenerate = 0;
        loop {
            if self.pivots >= PIVOT_LIMIT {
                return Err(PivotLimit(self.pivots));
            }
            let enter = if degenerate < DEGENERATE_RUN {
                (0..limit).filter(|&j| obj[j].is_negative()).min_by(|&a, &b| obj[a].cmp(&obj[b]))
            } else {
                (0..limit).find(|&j| obj[j].is_negative())
            };
            let Some(enter) = enter else {
                return Ok(Phase::Optimal);
            };
            let mut leave: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[enter].is_positive() {
                    continue;
                }
                let ratio = row[rhs].div(&row[enter]);
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => match ratio.cmp(lr) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*li],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                None => return Ok(Phase::Unbounded(enter)),
                Some((r, step)) => {
                    degenerate = if step.is_zero() { degenerate + 1 } else { 0 };
                    self.pivot(r, enter, obj)
                }
            }
        }
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut vals = vec![Rational::zero(); self.ncols];
        for (i, b) in self.basis.iter().enumerate() {
            vals[*b] = self.rows[i][self.ncols].to_rational();
        }
        vals
    }

    fn to_original(&self, cols: &[Rational]) -> Vec<Rational> {
        self.map
            .iter()
            .map(|(p, n)| match n {
                Some(n) => &cols[*p] - &cols[*n],
                None => cols[*p].clone(),
            })
            .collect()
    }

    fn run(mut self, p: &LpProblem, optimize: bool) -> Result<LpResult, PivotLimit> {
        let n = self.ncols;
        // Phase one: minimize the sum of artificials.
        let mut obj = vec![Q::ZERO; n + 1];
        for v in &mut obj[self.first_art..n] {
            *v = Q::ONE;
        }
        for (i, b) in self.basis.iter().enumerate() {
            if *b >= self.first_art {
                for (j, v) in self.rows[i].iter().enumerate() {
                    if !v.is_zero() {
                        obj[j] = obj[j].sub(v);
                    }
                }
            }
        }
        if let Phase::Unbounded(_) = self.iterate(&mut obj, n)? {
            unreachable!("phase one objective is bounded below by zero");
        }
        let residual = -obj[n].to_rational();
        if residual.is_positive() {
            return Ok(LpResult::Infeasible { residual });
        }
        // Drive zero-valued artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_art {
                match (0..self.first_art).find(|&j| !self.rows[i][j].is_zero()) {
                    Some(j) => self.pivot(i, j, &mut obj),
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        let objective = match (&p.objective, optimize) {
            (Some(o), true) => o,
            _ => {
                let x = self.to_original(&self.column_values());
                let value = Rational::zero();
                return Ok(LpResult::Optimal { value, x });
            }
        };
        let (sense, form) = objective;
        let mut cost = vec![Q::ZERO; n + 1];
        for (v, c) in &form.terms {
            let c = Q::from_rational(c);
            let c = match sense {
                Sense::Minimize => c,
                Sense::Maximize => c.neg(),
            };
            let (pos, neg) = self.map[*v];
            if let Some(neg) = neg {
                cost[neg] = c.neg();
            }
            cost[pos] = c;
        }
        let mut obj = cost.clone();
        for (i, b) in self.basis.iter().enumerate() {
            let cb = &cost[*b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    obj[j] = obj[j].sub(&cb.mul(v));
                }
            }
        }
        let limit = self.first_art;
        match self.iterate(&mut obj, limit)? {
            Phase::Optimal => {
                let x = self.to_original(&self.column_values());
                let value = form.eval(&x);
                Ok(LpResult::Optimal { value, x })
            }
            Phase::Unbounded(enter) => {
                let cols = self.column_values();
                let mut dir = vec![Rational::zero(); n];
                dir[enter] = Rational::one();
                for (i, b) in self.basis.iter().enumerate() {
                    dir[*b] = -self.rows[i][enter].to_rational();
                }
                Ok(LpResult::Unbounded { x: self.to_original(&cols), ray: self.to_original(&dir) })
            }
        }
    }
}

/// Convenience used in diagnostics.
pub fn describe(result: &LpResult) -> String {
    match result {
        LpResult::Infeasible { residual } => format!("infeasible (residual {})", fmt_short(residual)),
        LpResult::Optimal { value, .. } => format!("optimal {}", fmt_short(value)),
        LpResult::Unbounded { .. } => String::from("unbounded"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn le(p: &mut LpProblem, terms: &[(VarId, i64)], rhs: i64) {
        let mut f = LinForm::constant(int(-rhs));
        for (v, c) in terms {
            f.add_term(*v, &int(*c));
        }
        p.add(f, Rel::Le);
    }

    #[test]
    fn bounded_max() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", false);
        le(&mut p, &[(x, 1)], 3);
        p.set_objective(Sense::Maximize, LinForm::var(x));
        match p.solve().unwrap() {
            LpResult::Optimal { value, x: pt } => {
                assert_eq!(value, int(3));
                assert_eq!(pt, vec![int(3)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_max_has_checkable_ray() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", false);
        le(&mut p, &[(x, -1)], 0);
        p.set_objective(Sense::Maximize, LinForm::var(x));
        match p.solve().unwrap() {
            LpResult::Unbounded { x, ray } => {
                assert!(p.satisfied_by(&x));
                assert!(p.is_improving_ray(&ray));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_empty() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", false);
        le(&mut p, &[(x, 1)], 1);
        le(&mut p, &[(x, -1)], -2);
        assert_eq!(p.feasible().unwrap(), None);
        let empty = LpProblem::new();
        assert_eq!(empty.feasible().unwrap(), Some(vec![]));
    }

    #[test]
    fn equalities_and_redundant_rows() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", true);
        let y = p.add_var("y", true);
        let mut f = LinForm::constant(int(-4));
        f.add_term(x, &int(1));
        f.add_term(y, &int(1));
        p.add(f.clone(), Rel::Eq);
        p.add(f.scaled(&int(2)), Rel::Eq);
        p.set_objective(Sense::Minimize, &LinForm::var(x) - &LinForm::var(y));
        match p.solve().unwrap() {
            LpResult::Optimal { value, x: pt } => {
                assert_eq!(value, int(-4));
                assert!(p.satisfied_by(&pt));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn beale_cycling_instance_terminates() {
        // Beale's example: cycles under the textbook largest-coefficient rule.
        let mut p = LpProblem::new();
        let x: Vec<VarId> = (0..4).map(|i| p.add_var(format!("x{i}"), true)).collect();
        let row = |coefs: [Rational; 4]| {
            let mut f = LinForm::zero();
            for (v, c) in x.iter().zip(coefs) {
                f.add_term(*v, &c);
            }
            f
        };
        p.add(row([ratio(1, 4), int(-60), ratio(-1, 25), int(9)]), Rel::Le);
        p.add(row([ratio(1, 2), int(-90), ratio(-1, 50), int(3)]), Rel::Le);
        let mut third = row([int(0), int(0), int(1), int(0)]);
        third.constant = int(-1);
        p.add(third, Rel::Le);
        p.set_objective(Sense::Maximize, row([ratio(3, 4), int(-150), ratio(1, 50), int(-6)]));
        match p.solve().unwrap() {
            LpResult::Optimal { value, x: pt } => {
                assert_eq!(value, ratio(1, 20));
                assert!(p.satisfied_by(&pt));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dump_is_readable() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", true);
        le(&mut p, &[(x, 2)], 3);
        let text = p.dump();
        assert!(text.contains("2*x <= 3"));
        assert!(text.contains("x >= 0"));
    }
}
