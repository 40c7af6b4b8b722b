use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

use super::lexer::{tokenize, Tok, Token};
use super::{AffineExpr, Branch, Distribution, Pos, Pred, Program, RExpr, Stmt, StmtKind};
use crate::error::{Error, Result};
use crate::poly::LinConstraint;
use crate::rational::{self, Rational};

const KEYWORDS: &[&str] = &[
    "var", "dist", "skip", "if", "then", "else", "fi", "while", "do", "od", "angel", "demon", "prob", "true", "false",
    "and", "or", "not",
];

const DISTRIBUTIONS: &[&str] = &["uniform", "discrete"];

pub fn parse_program(src: &str) -> Result<Program> {
    let toks = tokenize(src)?;
    check_calls(&toks)?;
    let mut p = Parser { toks, at: 0, pvars: Vec::new(), rvars: Vec::new() };
    p.program()
}

/// Any `name(` that is not a known construct is reported as an unsupported distribution before
/// parsing, so the diagnostic does not depend on declarations.
fn check_calls(toks: &[Token]) -> Result<()> {
    for w in toks.windows(2) {
        if let (Tok::Ident(name), Tok::Sym("(")) = (&w[0].tok, &w[1].tok) {
            if !KEYWORDS.contains(&name.as_str()) && !DISTRIBUTIONS.contains(&name.as_str()) {
                return Err(Error::UnknownDistribution { line: w[0].pos.line, col: w[0].pos.col, name: name.clone() });
            }
        }
    }
    Ok(())
}

/// Affine expression over program and random variables, with the position of the first random
/// variable for diagnostics.
struct Lin {
    affine: AffineExpr,
    random: Vec<Rational>,
    random_at: Option<(Pos, String)>,
}

impl Lin {
    fn is_constant(&self) -> bool {
        self.affine.is_constant() && self.random.iter().all(Zero::is_zero)
    }

    fn scale(mut self, k: &Rational) -> Lin {
        self.affine = self.affine.scale(k);
        for r in &mut self.random {
            *r *= k;
        }
        self
    }

    fn add(mut self, other: Lin, sign: &Rational) -> Lin {
        self.affine = self.affine.add(&other.affine.scale(sign));
        for (a, b) in self.random.iter_mut().zip(&other.random) {
            *a += b * sign;
        }
        if self.random_at.is_none() {
            self.random_at = other.random_at;
        }
        self
    }
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
    pvars: Vec<(String, Rational)>,
    rvars: Vec<(String, Distribution)>,
}

fn syntax(pos: Pos, msg: impl Into<String>) -> Error {
    Error::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(i) => format!("`{i}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{s}`, found {}", self.describe())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected `{k}`, found {}", self.describe())))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok((name, pos))
            }
            _ => Err(syntax(pos, format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn declared(&self, name: &str) -> bool {
        self.pvars.iter().any(|(n, _)| n == name) || self.rvars.iter().any(|(n, _)| n == name)
    }

    fn program(&mut self) -> Result<Program> {
        loop {
            if self.eat_kw("var") {
                let (name, pos) = self.ident()?;
                if self.declared(&name) {
                    return Err(syntax(pos, format!("`{name}` declared twice")));
                }
                self.expect_sym(":=")?;
                let v = self.constant()?;
                self.pvars.push((name, v));
                self.expect_sym(";")?;
            } else if self.eat_kw("dist") {
                let (name, pos) = self.ident()?;
                if self.declared(&name) {
                    return Err(syntax(pos, format!("`{name}` declared twice")));
                }
                self.expect_sym("~")?;
                let d = self.distribution()?;
                self.rvars.push((name, d));
                self.expect_sym(";")?;
            } else {
                break;
            }
        }
        let (body, trailing) = self.seq(true)?;
        if *self.peek() != Tok::Eof {
            return Err(syntax(self.pos(), format!("unexpected {}", self.describe())));
        }
        Ok(Program { pvars: core::mem::take(&mut self.pvars), rvars: core::mem::take(&mut self.rvars), body, final_annotation: trailing })
    }

    fn distribution(&mut self) -> Result<Distribution> {
        let (kind, pos) = match self.peek().clone() {
            Tok::Ident(k) => {
                let pos = self.pos();
                self.bump();
                (k, pos)
            }
            _ => return Err(syntax(self.pos(), format!("expected distribution, found {}", self.describe()))),
        };
        let bad = |msg: String| Error::BadDistribution { line: pos.line, col: pos.col, msg };
        match kind.as_str() {
            "uniform" => {
                self.expect_sym("(")?;
                let lo = self.constant()?;
                self.expect_sym(",")?;
                let hi = self.constant()?;
                self.expect_sym(")")?;
                if lo >= hi {
                    return Err(bad(format!("uniform({lo},{hi}) needs lo < hi")));
                }
                Ok(Distribution::Uniform(lo, hi))
            }
            "discrete" => {
                self.expect_sym("(")?;
                let mut outcomes = Vec::new();
                loop {
                    let v = self.constant()?;
                    self.expect_sym(":")?;
                    let p = self.constant()?;
                    if p.is_negative() || p > Rational::one() {
                        return Err(bad(format!("probability {} is outside [0,1]", rational::fmt_short(&p))));
                    }
                    outcomes.push((v, p));
                    if !self.eat_sym(",") {
                        break;
                    }
                }
                self.expect_sym(")")?;
                let total: Rational = outcomes.iter().map(|(_, p)| p.clone()).sum();
                if !total.is_one() {
                    return Err(bad(format!("probabilities sum to {}, not 1", rational::fmt_short(&total))));
                }
                Ok(Distribution::Discrete(outcomes))
            }
            other => Err(Error::UnknownDistribution { line: pos.line, col: pos.col, name: other.to_string() }),
        }
    }

    /// Constant rational expression such as `-2`, `1/4` or `0.6`.
    fn constant(&mut self) -> Result<Rational> {
        let pos = self.pos();
        let e = self.expr()?;
        if !e.is_constant() {
            return Err(syntax(pos, "expected a constant"));
        }
        Ok(e.affine.constant)
    }

    fn starts_stmt(&self) -> bool {
        match self.peek() {
            Tok::Ident(k) => !KEYWORDS.contains(&k.as_str()) || ["skip", "if", "while"].contains(&k.as_str()),
            Tok::Sym("@[") => true,
            _ => false,
        }
    }

    fn annotation(&mut self) -> Result<Pred> {
        self.expect_sym("@[")?;
        let p = self.pred()?;
        self.expect_sym("]")?;
        Ok(p)
    }

    /// Statement sequence; at top level a final annotation may follow the last statement.
    fn seq(&mut self, top: bool) -> Result<(Stmt, Option<Pred>)> {
        let start = self.pos();
        let mut stmts = Vec::new();
        let mut trailing = None;
        loop {
            let ann = if self.is_sym("@[") { Some(self.annotation()?) } else { None };
            if ann.is_some() && !self.starts_stmt() {
                if top && *self.peek() == Tok::Eof && !stmts.is_empty() {
                    trailing = ann;
                    break;
                }
                return Err(syntax(self.pos(), format!("expected statement after annotation, found {}", self.describe())));
            }
            let mut s = self.stmt()?;
            s.annotation = ann;
            stmts.push(s);
            if self.eat_sym(";") {
                if self.starts_stmt() {
                    continue;
                }
                break;
            }
            if top && self.is_sym("@[") {
                let pos = self.pos();
                let ann = self.annotation()?;
                if *self.peek() != Tok::Eof {
                    return Err(syntax(pos, "annotation must precede a statement or end the program; missing `;`?"));
                }
                trailing = Some(ann);
            }
            break;
        }
        let body = if stmts.len() == 1 {
            stmts.pop().unwrap()
        } else {
            Stmt { kind: StmtKind::Seq(stmts), annotation: None, pos: start }
        };
        Ok((body, trailing))
    }

    fn stmt(&mut self) -> Result<Stmt> {
        let pos = self.pos();
        let kind = if self.eat_kw("skip") {
            StmtKind::Skip
        } else if self.eat_kw("if") {
            let branch = self.branch()?;
            self.expect_kw("then")?;
            let (then_branch, _) = self.seq(false)?;
            let else_branch = if self.eat_kw("else") {
                self.seq(false)?.0
            } else {
                Stmt { kind: StmtKind::Skip, annotation: None, pos: self.pos() }
            };
            self.expect_kw("fi")?;
            StmtKind::If { branch, then_branch: Box::new(then_branch), else_branch: Box::new(else_branch) }
        } else if self.eat_kw("while") {
            let guard = self.guard()?;
            self.expect_kw("do")?;
            let (body, _) = self.seq(false)?;
            self.expect_kw("od")?;
            StmtKind::While { guard, body: Box::new(body) }
        } else {
            let (name, npos) = self.ident()?;
            let var = match self.pvars.iter().position(|(n, _)| *n == name) {
                Some(i) => i,
                None if self.rvars.iter().any(|(n, _)| *n == name) => {
                    return Err(syntax(npos, format!("cannot assign to random variable `{name}`")));
                }
                None => return Err(Error::Undeclared { line: npos.line, col: npos.col, name }),
            };
            self.expect_sym(":=")?;
            let e = self.expr()?;
            StmtKind::Assign { var, rhs: RExpr { affine: e.affine, random: e.random } }
        };
        Ok(Stmt { kind, annotation: None, pos })
    }

    fn branch(&mut self) -> Result<Branch> {
        if self.eat_kw("angel") {
            return Ok(Branch::Angel);
        }
        if self.eat_kw("demon") {
            return Ok(Branch::Demon);
        }
        if self.is_kw("prob") {
            self.bump();
            self.expect_sym("(")?;
            let pos = self.pos();
            let p = self.constant()?;
            self.expect_sym(")")?;
            if p.is_negative() || p > Rational::one() {
                return Err(Error::ProbabilityRange { line: pos.line, col: pos.col, value: rational::fmt_short(&p) });
            }
            return Ok(Branch::Prob(p));
        }
        Ok(Branch::Guard(self.guard()?))
    }

    fn guard(&mut self) -> Result<Pred> {
        self.pred()
    }

    /// Predicate in negation normal form with flattened connectives.
    fn pred(&mut self) -> Result<Pred> {
        let mut parts = vec![self.conj()?];
        while self.eat_sym("||") || self.eat_kw("or") {
            parts.push(self.conj()?);
        }
        Ok(flatten(parts, false))
    }

    fn conj(&mut self) -> Result<Pred> {
        let mut parts = vec![self.unary()?];
        while self.eat_sym("&&") || self.eat_kw("and") {
            parts.push(self.unary()?);
        }
        Ok(flatten(parts, true))
    }

    fn unary(&mut self) -> Result<Pred> {
        if self.eat_sym("!") || self.eat_kw("not") {
            return Ok(self.unary()?.nnf_negated());
        }
        if self.eat_kw("true") {
            return Ok(Pred::True);
        }
        if self.eat_kw("false") {
            return Ok(Pred::False);
        }
        if self.is_sym("(") {
            let save = self.at;
            if let Ok(p) = self.comparison() {
                return Ok(p);
            }
            self.at = save;
            self.bump();
            let p = self.pred()?;
            self.expect_sym(")")?;
            return Ok(p);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Pred> {
        let lhs = self.expr()?;
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Sym(s @ ("<=" | ">=" | "<" | ">" | "==")) => *s,
            _ => return Err(syntax(pos, format!("expected comparison, found {}", self.describe()))),
        };
        self.bump();
        let rhs = self.expr()?;
        for side in [&lhs, &rhs] {
            if let Some((p, name)) = &side.random_at {
                return Err(Error::RandomInGuard { line: p.line, col: p.col, name: name.clone() });
            }
        }
        let d = lhs.affine.sub(&rhs.affine);
        Ok(match op {
            "<=" => Pred::Lit(LinConstraint::le(d)),
            "<" => Pred::Lit(LinConstraint::lt(d)),
            ">=" => Pred::Lit(LinConstraint::le(d.neg())),
            ">" => Pred::Lit(LinConstraint::lt(d.neg())),
            _ => Pred::And(vec![Pred::Lit(LinConstraint::le(d.clone())), Pred::Lit(LinConstraint::le(d.neg()))]),
        })
    }

    fn expr(&mut self) -> Result<Lin> {
        let mut acc = self.term()?;
        loop {
            let sign = if self.eat_sym("+") {
                Rational::one()
            } else if self.eat_sym("-") {
                -Rational::one()
            } else {
                break;
            };
            let t = self.term()?;
            acc = acc.add(t, &sign);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Lin> {
        let mut acc = self.factor()?;
        loop {
            if self.is_sym("*") {
                let pos = self.pos();
                self.bump();
                let f = self.factor()?;
                acc = if acc.is_constant() {
                    let k = acc.affine.constant.clone();
                    f.scale(&k)
                } else if f.is_constant() {
                    acc.scale(&f.affine.constant)
                } else {
                    return Err(syntax(pos, "product of two variables is not affine"));
                };
            } else if self.is_sym("/") {
                let pos = self.pos();
                self.bump();
                let f = self.factor()?;
                if !f.is_constant() {
                    return Err(syntax(pos, "division by a variable is not affine"));
                }
                if f.affine.constant.is_zero() {
                    return Err(syntax(pos, "division by zero"));
                }
                acc = acc.scale(&f.affine.constant.recip());
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Lin> {
        let n = self.pvars.len();
        let m = self.rvars.len();
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                let v = rational::parse_decimal(&text).ok_or_else(|| syntax(pos, format!("malformed number `{text}`")))?;
                Ok(Lin { affine: AffineExpr::constant(n, v), random: vec![Rational::zero(); m], random_at: None })
            }
            Tok::Sym("-") => {
                self.bump();
                Ok(self.factor()?.scale(&-Rational::one()))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) if DISTRIBUTIONS.contains(&name.as_str()) && *self.peek_at(1) == Tok::Sym("(") => Err(Error::BadDistribution {
                line: pos.line,
                col: pos.col,
                msg: format!("declare `{name}(..)` in the preamble with `dist r ~ {name}(..);`"),
            }),
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                if let Some(i) = self.pvars.iter().position(|(v, _)| *v == name) {
                    return Ok(Lin { affine: AffineExpr::var(n, i), random: vec![Rational::zero(); m], random_at: None });
                }
                if let Some(j) = self.rvars.iter().position(|(v, _)| *v == name) {
                    let mut random = vec![Rational::zero(); m];
                    random[j] = Rational::one();
                    return Ok(Lin { affine: AffineExpr::zero(n), random, random_at: Some((pos, name)) });
                }
                Err(Error::Undeclared { line: pos.line, col: pos.col, name })
            }
            _ => Err(syntax(pos, format!("expected expression, found {}", self.describe()))),
        }
    }
}

fn flatten(parts: Vec<Pred>, and: bool) -> Pred {
    let mut out = Vec::new();
    for p in parts {
        match (p, and) {
            (Pred::And(ps), true) | (Pred::Or(ps), false) => out.extend(ps),
            (p, _) => out.push(p),
        }
    }
    if out.len() == 1 {
        return out.pop().unwrap();
    }
    if and {
        Pred::And(out)
    } else {
        Pred::Or(out)
    }
}

impl Pred {
    /// Negation of an NNF predicate, itself in NNF and flattened.
    pub(crate) fn nnf_negated(&self) -> Pred {
        match self {
            Pred::True => Pred::False,
            Pred::False => Pred::True,
            Pred::Lit(c) => Pred::Lit(c.negate()),
            Pred::And(ps) => flatten(ps.iter().map(Pred::nnf_negated).collect(), false),
            Pred::Or(ps) => flatten(ps.iter().map(Pred::nnf_negated).collect(), true),
            Pred::Not(p) => p.nnf(),
        }
    }
}
