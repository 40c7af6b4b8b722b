//! Independent verification of a candidate witness by exact LPs over the invariant polyhedra.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::{corners, image_at, LrsmWitness};
use crate::error::{Error, Result};
use crate::lang::AffineExpr;
use crate::lp::{LinForm, LpProblem, LpResult, Sense};
use crate::poly::LinAssertion;
use crate::rational::Rational;
use crate::sgs::{Invariant, LocKind, Sgs};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckItem {
    pub loc: usize,
    pub condition: String,
    pub ok: bool,
    /// Worst value of the checked expression, `None` when unbounded.
    pub worst: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.items.iter().all(|i| i.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.ok)
    }

    fn push(&mut self, loc: usize, condition: String, worst: Sup, bound: &Rational) {
        let (ok, worst) = match worst {
            Sup::Empty => (true, None),
            Sup::Unbounded => (false, None),
            Sup::Value(v) => (v <= *bound, Some(v)),
        };
        self.items.push(CheckItem { loc, condition, ok, worst });
    }
}

enum Sup {
    Empty,
    Unbounded,
    Value(Rational),
}

fn region(h: &LinAssertion) -> Result<Option<LinAssertion>> {
    if h.is_empty()? {
        return Ok(None);
    }
    Ok(Some(h.closure()?))
}

fn base_lp(h: &LinAssertion) -> LpProblem {
    let mut lp = LpProblem::new();
    for i in 0..h.nvars {
        lp.add_var(format!("x{i}"), false);
    }
    for (row, rhs) in h.closed_rows() {
        let mut f = LinForm::zero();
        for (i, c) in row.iter().enumerate() {
            f.add_term(i, c);
        }
        lp.add_le(&f, &LinForm::constant(rhs));
    }
    lp
}

fn form(e: &AffineExpr) -> LinForm {
    let mut f = LinForm::constant(e.constant.clone());
    for (i, c) in e.coeffs.iter().enumerate() {
        f.add_term(i, c);
    }
    f
}

/// Supremum of `e` over the closure of `h`.
fn sup(h: &LinAssertion, e: &AffineExpr) -> Result<Sup> {
    let Some(cl) = region(h)? else { return Ok(Sup::Empty) };
    let mut lp = base_lp(&cl);
    lp.set_objective(Sense::Maximize, form(e));
    Ok(match lp.solve()? {
        LpResult::Optimal { value, .. } => Sup::Value(value),
        LpResult::Unbounded { .. } => Sup::Unbounded,
        LpResult::Infeasible { .. } => Sup::Empty,
    })
}

/// Supremum over the closure of `h` of the pointwise minimum of `es`.
fn sup_min(h: &LinAssertion, es: &[AffineExpr]) -> Result<Sup> {
    let Some(cl) = region(h)? else { return Ok(Sup::Empty) };
    let mut lp = base_lp(&cl);
    let z = lp.add_var("z", false);
    for e in es {
        lp.add_le(&LinForm::var(z), &form(e));
    }
    lp.set_objective(Sense::Maximize, LinForm::var(z));
    Ok(match lp.solve()? {
        LpResult::Optimal { value, .. } => Sup::Value(value),
        LpResult::Unbounded { .. } => Sup::Unbounded,
        LpResult::Infeasible { .. } => Sup::Empty,
    })
}

fn eta_expr(w: &LrsmWitness, l: usize) -> AffineExpr {
    AffineExpr { coeffs: w.a[l].clone(), constant: w.b[l].clone() }
}

/// `η(tgt, image) − η(src, x)` as an affine expression in `x`.
fn delta(w: &LrsmWitness, src: usize, tgt: usize, image: &[AffineExpr]) -> AffineExpr {
    let n = image.len();
    let mut e = AffineExpr::constant(n, w.b[tgt].clone());
    for (a, im) in w.a[tgt].iter().zip(image) {
        e = e.add(&im.scale(a));
    }
    e.sub(&eta_expr(w, src))
}

/// Checks every condition of the witness against the invariant.
pub fn check_lrsm(sgs: &Sgs, inv: &Invariant, w: &LrsmWitness) -> Result<CheckReport> {
    if !inv.holds(sgs.l_in, &sgs.x0) {
        return Err(Error::Invalid(String::from("initial valuation violates the invariant at the entry location")));
    }
    let nl = sgs.num_locations();
    if w.a.len() != nl || w.b.len() != nl || w.a.iter().any(|r| r.len() != sgs.nvars()) {
        return Err(Error::Invalid(String::from("witness shape does not match the program")));
    }
    let n = sgs.nvars();
    let mut rep = CheckReport::default();
    let zero = Rational::zero();
    let one = Rational::one();
    let mut scalar = |name: &str, v: &Rational, ok: bool| {
        rep.items.push(CheckItem { loc: sgs.l_out, condition: String::from(name), ok, worst: Some(v.clone()) });
    };
    scalar("epsilon >= 1", &w.eps, w.eps >= one);
    scalar("K <= -1", &w.k, w.k <= -&one);
    scalar("K' <= -1", &w.kprime, w.kprime <= -&one);
    if let Some((lo, hi)) = &w.diff_bounds {
        let neg = -&w.eps;
        scalar("a <= -epsilon <= b", &neg, *lo <= neg && neg <= *hi);
    }
    let neg_eps = -&w.eps;
    for l in 0..nl {
        let eta = eta_expr(w, l);
        for (di, h) in inv.disjuncts[l].iter().enumerate() {
            if l == sgs.l_out {
                rep.push(l, format!("d{di}: eta <= K"), sup(h, &eta)?, &w.k);
                rep.push(l, format!("d{di}: eta >= K'"), sup(h, &eta.neg())?, &-&w.kprime);
                continue;
            }
            rep.push(l, format!("d{di}: eta >= 0"), sup(h, &eta.neg())?, &zero);
            match sgs.kind(l) {
                LocKind::Probabilistic => {
                    let mut pre = AffineExpr::zero(n);
                    for tr in sgs.successors(l) {
                        let image = tr.update.mean_image(n, &sgs.rvars);
                        pre = pre.add(&delta(w, l, tr.tgt, &image).scale(tr.prob.as_ref().unwrap()));
                    }
                    rep.push(l, format!("d{di}: expected decrease"), sup(h, &pre)?, &neg_eps);
                }
                LocKind::Deterministic | LocKind::Demonic => {
                    for tr in sgs.successors(l) {
                        let e = delta(w, l, tr.tgt, &tr.update.mean_image(n, &sgs.rvars));
                        for piece in pieces(sgs, h, tr.src, &tr.guard) {
                            rep.push(l, format!("d{di}: decrease to {}", tr.tgt), sup(&piece, &e)?, &neg_eps);
                        }
                    }
                }
                LocKind::Angelic => {
                    let es: Vec<AffineExpr> =
                        sgs.successors(l).map(|tr| delta(w, l, tr.tgt, &tr.update.mean_image(n, &sgs.rvars))).collect();
                    rep.push(l, format!("d{di}: best decrease"), sup_min(h, &es)?, &neg_eps);
                }
            }
            if let Some((lo, hi)) = &w.diff_bounds {
                for tr in sgs.successors(l) {
                    for r in corners(&tr.update, &sgs.rvars) {
                        let e = delta(w, l, tr.tgt, &image_at(&tr.update, n, &r));
                        for piece in pieces(sgs, h, tr.src, &tr.guard) {
                            rep.push(l, format!("d{di}: difference to {} <= b", tr.tgt), sup(&piece, &e)?, hi);
                            rep.push(l, format!("d{di}: difference to {} >= a", tr.tgt), sup(&piece, &e.neg())?, &-lo);
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

fn pieces(sgs: &Sgs, h: &LinAssertion, src: usize, guard: &crate::lang::Pred) -> Vec<LinAssertion> {
    if sgs.kind(src) != LocKind::Deterministic {
        return alloc::vec![h.clone()];
    }
    guard.dnf(sgs.nvars()).iter().map(|g| h.and(g)).collect()
}
