//! Affine probabilistic programs: AST, parser and pretty-printer.
//!
//! Surface syntax (one program per file, `#` starts a comment):
//!
//! ```text
//! var x := 5;
//! dist r ~ discrete(0: 1/2, 1: 1/4, 2: 1/4);
//! @[x >= -1]
//! while x >= 0 do
//!   @[x >= 0]
//!   if prob(0.3) then x := x + 1 else x := x - 1 fi
//! od
//! @[x < 0]
//! ```

mod lexer;
mod parser;
mod print;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use crate::poly::{LinAssertion, LinConstraint};
use crate::rational::{self, Rational};

pub use parser::parse_program;
pub use print::{print_pred, print_program};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

/// `Σ coeffs[i]·x_i + constant` over the program variables, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffineExpr {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl AffineExpr {
    pub fn zero(nvars: usize) -> Self {
        AffineExpr { coeffs: vec![Rational::zero(); nvars], constant: Rational::zero() }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        AffineExpr { coeffs: vec![Rational::zero(); nvars], constant: c }
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = Self::zero(nvars);
        e.coeffs[i] = Rational::one();
        e
    }

    pub fn nvars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut s = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                s += c * v;
            }
        }
        s
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        let mut s = rational::to_f64(&self.constant);
        for (c, v) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                s += rational::to_f64(c) * v;
            }
        }
        s
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        AffineExpr {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            constant: &self.constant + &other.constant,
        }
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, k: &Rational) -> AffineExpr {
        AffineExpr { coeffs: self.coeffs.iter().map(|a| a * k).collect(), constant: &self.constant * k }
    }

    pub fn neg(&self) -> AffineExpr {
        self.scale(&-Rational::one())
    }
}

/// Right-hand side of an assignment: affine in program variables plus a linear random part.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RExpr {
    pub affine: AffineExpr,
    pub random: Vec<Rational>,
}

impl RExpr {
    pub fn has_random(&self) -> bool {
        self.random.iter().any(|c| !c.is_zero())
    }

    pub fn random_vars(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.random.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    /// Expected value given the random-variable means.
    pub fn mean_affine(&self, rvars: &[(String, Distribution)]) -> AffineExpr {
        let mut e = self.affine.clone();
        for (j, c) in self.random_vars() {
            e.constant += c * rvars[j].1.mean();
        }
        e
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Distribution {
    /// `(value, probability)` pairs, probabilities summing to one.
    Discrete(Vec<(Rational, Rational)>),
    Uniform(Rational, Rational),
}

impl Distribution {
    pub fn mean(&self) -> Rational {
        match self {
            Distribution::Discrete(vs) => vs.iter().map(|(v, p)| v * p).sum(),
            Distribution::Uniform(lo, hi) => (lo + hi) / rational::int(2),
        }
    }

    pub fn variance(&self) -> Rational {
        match self {
            Distribution::Discrete(vs) => {
                let m = self.mean();
                vs.iter().map(|(v, p)| (v - &m) * (v - &m) * p).sum()
            }
            Distribution::Uniform(lo, hi) => {
                let w = hi - lo;
                &w * &w / rational::int(12)
            }
        }
    }

    /// Smallest and largest value of the support.
    pub fn support(&self) -> (Rational, Rational) {
        match self {
            Distribution::Discrete(vs) => {
                let mut lo = vs[0].0.clone();
                let mut hi = vs[0].0.clone();
                for (v, p) in vs {
                    if p.is_zero() {
                        continue;
                    }
                    if *v < lo {
                        lo = v.clone();
                    }
                    if *v > hi {
                        hi = v.clone();
                    }
                }
                (lo, hi)
            }
            Distribution::Uniform(lo, hi) => (lo.clone(), hi.clone()),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Distribution::Discrete(_))
    }
}

/// Boolean combination of affine literals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pred {
    True,
    False,
    Lit(LinConstraint),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    Not(Box<Pred>),
}

impl Pred {
    pub fn eval(&self, x: &[Rational]) -> bool {
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Lit(c) => c.holds(x),
            Pred::And(ps) => ps.iter().all(|p| p.eval(x)),
            Pred::Or(ps) => ps.iter().any(|p| p.eval(x)),
            Pred::Not(p) => !p.eval(x),
        }
    }

    pub fn eval_f64(&self, x: &[f64]) -> bool {
        match self {
            Pred::True => true,
            Pred::False => false,
            Pred::Lit(c) => c.holds_f64(x),
            Pred::And(ps) => ps.iter().all(|p| p.eval_f64(x)),
            Pred::Or(ps) => ps.iter().any(|p| p.eval_f64(x)),
            Pred::Not(p) => !p.eval_f64(x),
        }
    }

    /// Negation normal form: negations pushed onto literals, which become strict/non-strict flips.
    pub fn nnf(&self) -> Pred {
        self.push(false)
    }

    fn push(&self, negate: bool) -> Pred {
        match (self, negate) {
            (Pred::True, false) | (Pred::False, true) => Pred::True,
            (Pred::True, true) | (Pred::False, false) => Pred::False,
            (Pred::Lit(c), false) => Pred::Lit(c.clone()),
            (Pred::Lit(c), true) => Pred::Lit(c.negate()),
            (Pred::And(ps), false) | (Pred::Or(ps), true) => Pred::And(ps.iter().map(|p| p.push(negate)).collect()),
            (Pred::Or(ps), false) | (Pred::And(ps), true) => Pred::Or(ps.iter().map(|p| p.push(negate)).collect()),
            (Pred::Not(p), n) => p.push(!n),
        }
    }

    /// Disjunctive normal form over `nvars` program variables. Trivially true literals are
    /// dropped and trivially false conjunctions removed; the empty list means `false`.
    pub fn dnf(&self, nvars: usize) -> Vec<LinAssertion> {
        let mut out = Vec::new();
        for conj in dnf_lists(&self.nnf()) {
            let mut keep = Vec::new();
            let mut dead = false;
            for c in conj {
                match c.constant_truth() {
                    Some(true) => {}
                    Some(false) => {
                        dead = true;
                        break;
                    }
                    None => {
                        if !keep.contains(&c) {
                            keep.push(c)
                        }
                    }
                }
            }
            if !dead {
                let a = LinAssertion::new(nvars, keep);
                if !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        out
    }

    /// Rebuilds a predicate from DNF disjuncts.
    pub fn from_dnf(ds: &[LinAssertion]) -> Pred {
        match ds.len() {
            0 => Pred::False,
            1 => conj_pred(&ds[0]),
            _ => Pred::Or(ds.iter().map(conj_pred).collect()),
        }
    }

    pub fn is_dnf(&self) -> bool {
        let lit_conj = |p: &Pred| match p {
            Pred::Lit(_) | Pred::True => true,
            Pred::And(cs) => cs.iter().all(|c| matches!(c, Pred::Lit(_))),
            _ => false,
        };
        match self {
            Pred::False => true,
            Pred::Or(ds) => ds.len() > 1 && ds.iter().all(lit_conj),
            other => lit_conj(other),
        }
    }

    pub fn mentions_strict(&self) -> bool {
        match self {
            Pred::Lit(c) => c.strict,
            Pred::And(ps) | Pred::Or(ps) => ps.iter().any(Pred::mentions_strict),
            Pred::Not(p) => p.mentions_strict(),
            _ => false,
        }
    }
}

fn conj_pred(a: &LinAssertion) -> Pred {
    match a.constraints.len() {
        0 => Pred::True,
        1 => Pred::Lit(a.constraints[0].clone()),
        _ => Pred::And(a.constraints.iter().cloned().map(Pred::Lit).collect()),
    }
}

fn dnf_lists(p: &Pred) -> Vec<Vec<LinConstraint>> {
    match p {
        Pred::True => vec![vec![]],
        Pred::False => vec![],
        Pred::Lit(c) => vec![vec![c.clone()]],
        Pred::Or(ps) => ps.iter().flat_map(dnf_lists).collect(),
        Pred::And(ps) => {
            let mut acc: Vec<Vec<LinConstraint>> = vec![vec![]];
            for q in ps {
                let parts = dnf_lists(q);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for b in &parts {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        next.push(c);
                    }
                }
                acc = next;
            }
            acc
        }
        Pred::Not(_) => unreachable!("dnf_lists expects negation normal form"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Angel,
    Demon,
    Prob(Rational),
    Guard(Pred),
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub kind: StmtKind,
    pub annotation: Option<Pred>,
    pub pos: Pos,
}

/// Positions are ignored so that re-parsed programs compare equal.
impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.annotation == other.annotation
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Skip,
    Assign { var: usize, rhs: RExpr },
    Seq(Vec<Stmt>),
    If { branch: Branch, then_branch: Box<Stmt>, else_branch: Box<Stmt> },
    While { guard: Pred, body: Box<Stmt> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub pvars: Vec<(String, Rational)>,
    pub rvars: Vec<(String, Distribution)>,
    pub body: Stmt,
    /// Annotation following the program, attached to the terminal location.
    pub final_annotation: Option<Pred>,
}

impl Program {
    pub fn nvars(&self) -> usize {
        self.pvars.len()
    }

    pub fn var_names(&self) -> Vec<String> {
        self.pvars.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn initial(&self) -> Vec<Rational> {
        self.pvars.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Every assignment has the shape `x := x + g(r)`.
    pub fn is_incremental(&self) -> bool {
        fn walk(s: &Stmt) -> bool {
            match &s.kind {
                StmtKind::Skip => true,
                StmtKind::Assign { var, rhs } => rhs.affine.coeffs.iter().enumerate().all(|(i, c)| {
                    if i == *var {
                        c.is_one()
                    } else {
                        c.is_zero()
                    }
                }),
                StmtKind::Seq(ss) => ss.iter().all(walk),
                StmtKind::If { then_branch, else_branch, .. } => walk(then_branch) && walk(else_branch),
                StmtKind::While { body, .. } => walk(body),
            }
        }
        walk(&self.body)
    }

    pub fn has_nonnegative_probabilities(&self) -> bool {
        fn walk(s: &Stmt) -> bool {
            match &s.kind {
                StmtKind::If { branch: Branch::Prob(p), then_branch, else_branch } => {
                    !p.is_negative() && walk(then_branch) && walk(else_branch)
                }
                StmtKind::If { then_branch, else_branch, .. } => walk(then_branch) && walk(else_branch),
                StmtKind::Seq(ss) => ss.iter().all(walk),
                StmtKind::While { body, .. } => walk(body),
                _ => true,
            }
        }
        walk(&self.body)
    }
}
