//! Linear ranking supermartingale synthesis: template, Farkas/Motzkin constraint generation,
//! angelic search, and the bounded-difference and variance extensions.

mod check;
mod game;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lang::{AffineExpr, Distribution};
use crate::lp::{LinForm, LpProblem, LpResult, Sense, VarId};
use crate::poly::{farkas, FarkasBlock, MotzkinBlock, Rows};
use crate::rational::{self, Rational};
use crate::sgs::{Invariant, LocKind, Sgs, Transition, Update};

pub use check::{check_lrsm, CheckItem, CheckReport};
pub use game::{refute_by_game, GameVerdict};

/// Affine function of the program variables whose coefficients are linear forms over the unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct TExpr {
    pub coeffs: Vec<LinForm>,
    pub constant: LinForm,
}

impl TExpr {
    pub fn zero(n: usize) -> Self {
        TExpr { coeffs: vec![LinForm::zero(); n], constant: LinForm::zero() }
    }

    pub fn add_scaled(&mut self, other: &TExpr, k: &Rational) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            a.add_scaled(b, k);
        }
        self.constant.add_scaled(&other.constant, k);
    }

    pub fn sub(&self, other: &TExpr) -> TExpr {
        let mut t = self.clone();
        t.add_scaled(other, &-Rational::one());
        t
    }

    pub fn neg_coeffs(&self) -> Vec<LinForm> {
        self.coeffs.iter().map(|c| -c).collect()
    }

    /// Values of the coefficients and constant under an assignment of the unknowns.
    pub fn eval(&self, u: &[Rational]) -> AffineExpr {
        AffineExpr { coeffs: self.coeffs.iter().map(|c| c.eval(u)).collect(), constant: self.constant.eval(u) }
    }
}

/// LP variables of the per-location affine template `η(ℓ,x) = a_ℓ·x + b_ℓ` and the certificate constants.
#[derive(Clone, Debug)]
pub struct Template {
    pub a: Vec<Vec<VarId>>,
    pub b: Vec<VarId>,
    pub eps: VarId,
    pub k: VarId,
    pub kprime: VarId,
}

impl Template {
    pub fn eta(&self, l: usize) -> TExpr {
        TExpr { coeffs: self.a[l].iter().map(|v| LinForm::var(*v)).collect(), constant: LinForm::var(self.b[l]) }
    }

    /// `η(ℓ, image(x))` for an affine image of the valuation.
    pub fn eta_after(&self, l: usize, image: &[AffineExpr]) -> TExpr {
        let n = image.len();
        let mut t = TExpr { coeffs: vec![LinForm::zero(); n], constant: LinForm::var(self.b[l]) };
        for (i, e) in image.iter().enumerate() {
            let ai = self.a[l][i];
            for (j, c) in e.coeffs.iter().enumerate() {
                t.coeffs[j].add_term(ai, c);
            }
            t.constant.add_term(ai, &e.constant);
        }
        t
    }

    /// `η(ℓ, x)` at a concrete valuation.
    pub fn eta_at(&self, l: usize, x: &[Rational]) -> LinForm {
        let mut f = LinForm::var(self.b[l]);
        for (v, xi) in self.a[l].iter().zip(x) {
            f.add_term(*v, xi);
        }
        f
    }
}

/// Difference `η(tgt, E f(x)) − η(ℓ, x)` along one transition, random variables at their means.
pub fn transition_delta(sgs: &Sgs, t: &Template, tr: &Transition) -> TExpr {
    let image = tr.update.mean_image(sgs.nvars(), &sgs.rvars);
    t.eta_after(tr.tgt, &image).sub(&t.eta(tr.src))
}

/// `(c, d)` such that the decrease condition reads `c·x <= d − ε`: for probabilistic locations the
/// weighted pre-expectation, otherwise the single transition `tr`.
pub fn pre_expectation_coeffs(sgs: &Sgs, t: &Template, l: usize, tr: Option<usize>) -> Result<(Vec<LinForm>, LinForm)> {
    if l == sgs.l_out {
        return Err(Error::Invalid(String::from("pre-expectation is not taken at the terminal location")));
    }
    let delta = match (sgs.kind(l), tr) {
        (LocKind::Probabilistic, _) => {
            let n = sgs.nvars();
            let mut pre = TExpr::zero(n);
            for tr in sgs.successors(l) {
                let image = tr.update.mean_image(n, &sgs.rvars);
                pre.add_scaled(&t.eta_after(tr.tgt, &image), tr.prob.as_ref().unwrap());
            }
            pre.sub(&t.eta(l))
        }
        (_, Some(i)) => transition_delta(sgs, t, &sgs.transitions[i]),
        (_, None) => return Err(Error::Invalid(format!("location {l} needs a transition"))),
    };
    Ok((delta.coeffs, -&delta.constant))
}

#[derive(Clone, Debug)]
pub struct BlockRecord {
    pub loc: usize,
    pub disjunct: usize,
    pub tag: &'static str,
    pub rows: Rows,
    pub c: Vec<LinForm>,
    pub d: LinForm,
    pub block: FarkasBlock,
}

/// One angelic location and invariant disjunct: a bilinear Motzkin block over the two successors.
#[derive(Clone, Debug)]
pub struct AngelicGroup {
    pub loc: usize,
    pub disjunct: usize,
    pub block: MotzkinBlock,
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    /// Homogeneous rows of all linear blocks.
    pub lp: LpProblem,
    pub tmpl: Template,
    pub records: Vec<BlockRecord>,
    pub angelic: Vec<AngelicGroup>,
    /// `η(ℓ_in, x₀)`.
    pub w0: LinForm,
    /// `(a_lo, b_hi)` when difference bounds were added.
    pub diff: Option<(VarId, VarId)>,
    /// `(c, M)` when variance constraints were added.
    pub bern: Option<(VarId, VarId)>,
}

/// How the otherwise homogeneous system is pinned down.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `ε >= 1, K <= -1, K' <= -1`.
    Standard,
    /// `ε = 1, K <= -1, K' <= -1`.
    EpsOne,
    /// Charnes–Cooper scaling `ε = 1, K <= -s, K' <= -s, 0 <= s <= 1`, used to optimize ratios over `ε`.
    Ratio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LrsmWitness {
    pub a: Vec<Vec<Rational>>,
    pub b: Vec<Rational>,
    pub eps: Rational,
    pub k: Rational,
    pub kprime: Rational,
    pub diff_bounds: Option<(Rational, Rational)>,
    pub bernstein: Option<(Rational, Rational)>,
}

impl LrsmWitness {
    pub fn eta(&self, l: usize, x: &[Rational]) -> Rational {
        let mut v = self.b[l].clone();
        for (a, xi) in self.a[l].iter().zip(x) {
            v += a * xi;
        }
        v
    }

    pub fn eta_f64(&self, l: usize, x: &[f64]) -> f64 {
        let mut v = rational::to_f64(&self.b[l]);
        for (a, xi) in self.a[l].iter().zip(x) {
            v += rational::to_f64(a) * xi;
        }
        v
    }

    pub fn w0(&self, sgs: &Sgs) -> Rational {
        self.eta(sgs.l_in, &sgs.x0)
    }

    /// `(η(ℓ_in, x₀) − K') / ε`.
    pub fn upper_bound(&self, sgs: &Sgs) -> Rational {
        (self.w0(sgs) - &self.kprime) / &self.eps
    }

    /// Multiplies every component by a positive scalar.
    pub fn scaled(&self, k: &Rational) -> LrsmWitness {
        let s = |v: &Rational| v * k;
        LrsmWitness {
            a: self.a.iter().map(|r| r.iter().map(s).collect()).collect(),
            b: self.b.iter().map(s).collect(),
            eps: s(&self.eps),
            k: s(&self.k),
            kprime: s(&self.kprime),
            diff_bounds: self.diff_bounds.as_ref().map(|(l, h)| (s(l), s(h))),
            bernstein: self.bernstein.as_ref().map(|(c, m)| (s(c), s(m))),
        }
    }
}

fn closed(h: &crate::poly::LinAssertion) -> Result<Rows> {
    Ok(h.closure()?.closed_rows())
}

/// Guard disjuncts of `tr` intersected with `h`, closed, with empty pieces dropped.
fn guarded_pieces(sgs: &Sgs, h: &crate::poly::LinAssertion, tr: &Transition) -> Result<Vec<Rows>> {
    let mut out = Vec::new();
    if sgs.kind(tr.src) != LocKind::Deterministic {
        out.push(closed(h)?);
        return Ok(out);
    }
    for g in tr.guard.dnf(sgs.nvars()) {
        let hg = h.and(&g);
        if !hg.is_empty()? {
            out.push(closed(&hg)?);
        }
    }
    Ok(out)
}

impl ConstraintSystem {
    fn record(&mut self, loc: usize, disjunct: usize, tag: &'static str, rows: Rows, c: Vec<LinForm>, d: LinForm) {
        let prefix = format!("l{loc}k{disjunct}{tag}{}_", self.records.len());
        let block = farkas(&mut self.lp, &rows, &c, &d, &prefix);
        self.records.push(BlockRecord { loc, disjunct, tag, rows, c, d, block });
    }

    pub fn eps_form(&self) -> LinForm {
        LinForm::var(self.tmpl.eps)
    }

    /// Copy of the cone with the normalization rows; returns the scaling variable in ratio mode.
    fn normalized(&self, norm: Normalization) -> (LpProblem, Option<VarId>) {
        let mut lp = self.lp.clone();
        let t = &self.tmpl;
        let one = LinForm::constant(Rational::one());
        let mut s_var = None;
        match norm {
            Normalization::Standard => {
                lp.add_le(&one, &LinForm::var(t.eps));
                lp.add_le(&LinForm::var(t.k), &-&one);
                lp.add_le(&LinForm::var(t.kprime), &-&one);
            }
            Normalization::EpsOne => {
                lp.add_eq(&LinForm::var(t.eps), &one);
                lp.add_le(&LinForm::var(t.k), &-&one);
                lp.add_le(&LinForm::var(t.kprime), &-&one);
            }
            Normalization::Ratio => {
                let s = lp.add_var("s", true);
                lp.add_eq(&LinForm::var(t.eps), &one);
                lp.add_le(&LinForm::var(t.k), &-&LinForm::var(s));
                lp.add_le(&LinForm::var(t.kprime), &-&LinForm::var(s));
                lp.add_le(&LinForm::var(s), &one);
                s_var = Some(s);
            }
        }
        (lp, s_var)
    }

    /// Linear system for fixed angelic weights `ts` (one per group); `None` drops the angelic blocks.
    pub fn instantiate(&self, ts: Option<&[Rational]>, norm: Normalization) -> (LpProblem, Option<VarId>) {
        let (mut lp, s) = self.normalized(norm);
        if let Some(ts) = ts {
            for (g, t) in self.angelic.iter().zip(ts) {
                let prefix = format!("l{}k{}ang_", g.loc, g.disjunct);
                g.block.instantiate(&mut lp, &[t.clone(), Rational::one() - t], &prefix);
            }
        }
        (lp, s)
    }

    /// Reads a witness off an LP point, undoing ratio scaling.
    pub fn witness_from(&self, x: &[Rational], s: Option<VarId>) -> LrsmWitness {
        let scale = match s {
            Some(s) if !x[s].is_zero() => x[s].recip(),
            _ => Rational::one(),
        };
        let v = |id: VarId| &x[id] * &scale;
        let t = &self.tmpl;
        LrsmWitness {
            a: t.a.iter().map(|r| r.iter().map(|&id| v(id)).collect()).collect(),
            b: t.b.iter().map(|&id| v(id)).collect(),
            eps: v(t.eps),
            k: v(t.k),
            kprime: v(t.kprime),
            diff_bounds: self.diff.map(|(lo, hi)| (v(lo), v(hi))),
            bernstein: self.bern.map(|(c, m)| (v(c), v(m))),
        }
    }

    pub fn bilinear_groups(&self) -> usize {
        self.angelic.len()
    }

    /// Readable dump of every linear block and the angelic groups.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&r.block.sexpr(&self.lp, &format!("farkas l{} {} {}", r.loc, r.disjunct, r.tag)));
            s.push('\n');
        }
        for g in &self.angelic {
            s.push_str(&format!("(motzkin l{} {} rows {})\n", g.loc, g.disjunct, g.block.h.len()));
        }
        s
    }
}

/// Algorithm steps 1–8: template, per-location blocks, and the angelic bilinear groups.
pub fn build_constraints(sgs: &Sgs, inv: &Invariant) -> Result<ConstraintSystem> {
    let n = sgs.nvars();
    let mut lp = LpProblem::new();
    let mut a = Vec::with_capacity(sgs.num_locations());
    let mut b = Vec::with_capacity(sgs.num_locations());
    for l in 0..sgs.num_locations() {
        a.push((0..n).map(|i| lp.add_var(format!("a{l}_{}", sgs.var_names[i]), false)).collect::<Vec<_>>());
        b.push(lp.add_var(format!("b{l}"), false));
    }
    let eps = lp.add_var("eps", false);
    let k = lp.add_var("K", false);
    let kprime = lp.add_var("Kp", false);
    let tmpl = Template { a, b, eps, k, kprime };
    let w0 = tmpl.eta_at(sgs.l_in, &sgs.x0);
    let mut sys = ConstraintSystem { lp, tmpl, records: Vec::new(), angelic: Vec::new(), w0, diff: None, bern: None };
    let epsf = sys.eps_form();

    for l in 0..sgs.num_locations() {
        let eta = sys.tmpl.eta(l);
        for (di, h) in inv.disjuncts[l].iter().enumerate() {
            let rows = closed(h)?;
            if l == sgs.l_out {
                let kf = LinForm::var(sys.tmpl.k);
                let kpf = LinForm::var(sys.tmpl.kprime);
                sys.record(l, di, "upper", rows.clone(), eta.coeffs.clone(), &kf - &eta.constant);
                sys.record(l, di, "lower", rows, eta.neg_coeffs(), &eta.constant - &kpf);
                continue;
            }
            sys.record(l, di, "nonneg", rows.clone(), eta.neg_coeffs(), eta.constant.clone());
            match sgs.kind(l) {
                LocKind::Probabilistic => {
                    let (c, d) = pre_expectation_coeffs(sgs, &sys.tmpl, l, None)?;
                    sys.record(l, di, "decrease", rows, c, &d - &epsf);
                }
                LocKind::Deterministic | LocKind::Demonic => {
                    for &ti in &sgs.outgoing[l] {
                        let (c, d) = pre_expectation_coeffs(sgs, &sys.tmpl, l, Some(ti))?;
                        for piece in guarded_pieces(sgs, h, &sgs.transitions[ti])? {
                            sys.record(l, di, "decrease", piece, c.clone(), &d - &epsf);
                        }
                    }
                }
                LocKind::Angelic => {
                    let mut bs = Vec::new();
                    let mut cs = Vec::new();
                    for &ti in &sgs.outgoing[l] {
                        let delta = transition_delta(sgs, &sys.tmpl, &sgs.transitions[ti]);
                        bs.push(delta.neg_coeffs());
                        cs.push(&delta.constant + &epsf);
                    }
                    if bs.len() == 1 {
                        // a lone successor is a plain decrease condition
                        let (c, d) = pre_expectation_coeffs(sgs, &sys.tmpl, l, Some(sgs.outgoing[l][0]))?;
                        sys.record(l, di, "decrease", rows, c, &d - &epsf);
                    } else {
                        sys.angelic.push(AngelicGroup { loc: l, disjunct: di, block: MotzkinBlock::new(rows, bs, cs) });
                    }
                }
            }
        }
    }
    Ok(sys)
}

/// Corner valuations of the random variables used by an update.
fn corners(update: &Update, rvars: &[(String, Distribution)]) -> Vec<Vec<Rational>> {
    let used = update.random_vars();
    let mut out = vec![vec![Rational::zero(); rvars.len()]];
    for j in used {
        let (lo, hi) = rvars[j].1.support();
        let mut next = Vec::with_capacity(out.len() * 2);
        for c in &out {
            for v in [&lo, &hi] {
                let mut c2 = c.clone();
                c2[j] = v.clone();
                next.push(c2);
            }
        }
        out = next;
    }
    out
}

/// Image of the update with the random variables fixed to `r`.
fn image_at(update: &Update, n: usize, r: &[Rational]) -> Vec<AffineExpr> {
    let mut out: Vec<AffineExpr> = (0..n).map(|i| AffineExpr::var(n, i)).collect();
    if let Update::Assign { var, rhs } = update {
        let mut e = rhs.affine.clone();
        for (j, c) in rhs.random_vars() {
            e.constant += c * &r[j];
        }
        out[*var] = e;
    }
    out
}

/// Adds unknowns `a_lo, b_hi` with `a_lo <= η(ℓ',f(x,r)) − η(ℓ,x) <= b_hi` on every transition out of a
/// non-terminal location (random variables at the corners of their support) and `a_lo <= −ε <= b_hi`.
///
/// Angelic locations are constrained on both successors, which covers whichever one the compatible
/// scheduler picks.
pub fn build_bound_constraints(sys: &mut ConstraintSystem, sgs: &Sgs, inv: &Invariant) -> Result<()> {
    if sys.diff.is_some() {
        return Ok(());
    }
    let alo = sys.lp.add_var("a_lo", false);
    let bhi = sys.lp.add_var("b_hi", false);
    sys.diff = Some((alo, bhi));
    let epsf = sys.eps_form();
    let (lo, hi) = (LinForm::var(alo), LinForm::var(bhi));
    sys.lp.add_le(&lo, &-&epsf);
    sys.lp.add_le(&-&epsf, &hi);
    let n = sgs.nvars();
    for l in 0..sgs.num_locations() {
        if l == sgs.l_out {
            continue;
        }
        for (di, h) in inv.disjuncts[l].iter().enumerate() {
            for &ti in &sgs.outgoing[l] {
                let tr = &sgs.transitions[ti];
                let pieces = guarded_pieces(sgs, h, tr)?;
                for r in corners(&tr.update, &sgs.rvars) {
                    let delta = sys.tmpl.eta_after(tr.tgt, &image_at(&tr.update, n, &r)).sub(&sys.tmpl.eta(l));
                    for piece in &pieces {
                        // delta <= b_hi and a_lo <= delta
                        sys.record(l, di, "diff-hi", piece.clone(), delta.coeffs.clone(), &hi - &delta.constant);
                        sys.record(l, di, "diff-lo", piece.clone(), delta.neg_coeffs(), &delta.constant - &lo);
                    }
                }
            }
        }
    }
    Ok(())
}

/// True when every update has the shape `x := x + g(r)`.
pub fn is_incremental(sgs: &Sgs) -> bool {
    sgs.transitions.iter().all(|t| match &t.update {
        Update::Identity => true,
        Update::Assign { var, rhs } => {
            rhs.affine.coeffs.iter().enumerate().all(|(i, c)| if i == *var { c.is_one() } else { c.is_zero() })
        }
    })
}

/// Variance and one-sided jump constraints for incremental programs, with unknowns `c, M >= 0`.
pub fn build_bernstein_constraints(sys: &mut ConstraintSystem, sgs: &Sgs) -> Result<()> {
    if sys.bern.is_some() {
        return Ok(());
    }
    if !is_incremental(sgs) {
        return Err(Error::Unsupported(String::from("variance bounds need an incremental program (x := x + g(r))")));
    }
    let n = sgs.nvars();
    let cv = sys.lp.add_var("c", true);
    let mv = sys.lp.add_var("M", true);
    sys.bern = Some((cv, mv));
    let (cf, mf) = (LinForm::var(cv), LinForm::var(mv));
    let nonterm: Vec<usize> = (0..sgs.num_locations()).filter(|&l| l != sgs.l_out).collect();
    for &l in &nonterm[1..] {
        for i in 0..n {
            let (x, y) = (sys.tmpl.a[l][i], sys.tmpl.a[nonterm[0]][i]);
            sys.lp.add_eq(&LinForm::var(x), &LinForm::var(y));
        }
    }
    for l in nonterm {
        match sgs.kind(l) {
            LocKind::Probabilistic => {
                let succ: Vec<&Transition> = sgs.successors(l).collect();
                if succ.len() != 2 || succ.iter().any(|t| t.update != Update::Identity || t.tgt == sgs.l_out) {
                    return Err(Error::Unsupported(format!("probabilistic location {l} has an unexpected shape")));
                }
                let p = succ[0].prob.clone().unwrap();
                let q = Rational::one() - &p;
                let u = rational::sqrt_upper(&(&p * &q), 30);
                let (b1, b2) = (LinForm::var(sys.tmpl.b[succ[0].tgt]), LinForm::var(sys.tmpl.b[succ[1].tgt]));
                let diff = &b1 - &b2;
                sys.lp.add_le(&(&diff * &u), &cf);
                sys.lp.add_le(&(&-&diff * &u), &cf);
                let mut pre = b1.scaled(&p);
                pre.add_scaled(&b2, &q);
                sys.lp.add_le(&(&b1 - &pre), &mf);
                sys.lp.add_le(&(&b2 - &pre), &mf);
            }
            LocKind::Deterministic => {
                for tr in sgs.successors(l) {
                    let Update::Assign { var, rhs } = &tr.update else { continue };
                    if !rhs.has_random() || tr.tgt == sgs.l_out {
                        continue;
                    }
                    let mut var_g = Rational::zero();
                    let mut mean_g = Rational::zero();
                    for (j, c) in rhs.random_vars() {
                        var_g += c * c * sgs.rvars[j].1.variance();
                        mean_g += c * sgs.rvars[j].1.mean();
                    }
                    let sigma = rational::sqrt_upper(&var_g, 30);
                    let ai = LinForm::var(sys.tmpl.a[tr.tgt][*var]);
                    sys.lp.add_le(&(&ai * &sigma), &cf);
                    sys.lp.add_le(&(&-&ai * &sigma), &cf);
                    for r in corners(&tr.update, &sgs.rvars) {
                        let mut g = Rational::zero();
                        for (j, c) in rhs.random_vars() {
                            g += c * &r[j];
                        }
                        sys.lp.add_le(&(&ai * &(g - &mean_g)), &mf);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    /// The full system (no angelic locations) is infeasible.
    Lp,
    /// The system without the angelic blocks is already infeasible.
    LinearPart,
    /// The angel cannot force almost-sure termination in the finite reachable game.
    Game,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Found { witness: LrsmWitness, ts: Vec<Rational> },
    Infeasible(Refutation),
    /// Angelic search exhausted without a witness.
    Unknown { tried: usize },
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub grid: u32,
    pub refine_depth: u32,
    /// Maximum number of LP calls in the angelic search.
    pub budget: usize,
    /// Configuration cap for the finite-game refutation.
    pub game_limit: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { grid: 64, refine_depth: 12, budget: 4096, game_limit: 200_000 }
    }
}

enum Probe {
    Feasible(Vec<Rational>),
    Infeasible(Rational),
}

fn probe(lp: &LpProblem) -> Result<Probe> {
    Ok(match lp.solve()? {
        LpResult::Infeasible { residual } => Probe::Infeasible(residual),
        other => Probe::Feasible(other.point().unwrap().to_vec()),
    })
}

/// Decides the system: one LP without angelic locations, otherwise linear-part refutation followed by
/// the grid-and-refine search over the angelic weights.
pub fn solve_system(sys: &ConstraintSystem, opts: &SearchOptions) -> Result<Outcome> {
    if sys.angelic.is_empty() {
        let (lp, _) = sys.instantiate(None, Normalization::Standard);
        return Ok(match probe(&lp)? {
            Probe::Feasible(x) => Outcome::Found { witness: sys.witness_from(&x, None), ts: Vec::new() },
            Probe::Infeasible(_) => Outcome::Infeasible(Refutation::Lp),
        });
    }
    let (lp, _) = sys.instantiate(None, Normalization::Standard);
    if let Probe::Infeasible(_) = probe(&lp)? {
        return Ok(Outcome::Infeasible(Refutation::LinearPart));
    }
    angelic_search(sys, opts)
}

fn angelic_search(sys: &ConstraintSystem, opts: &SearchOptions) -> Result<Outcome> {
    let m = sys.angelic.len();
    let mut tried = 0usize;
    let mut seen: Vec<Vec<Rational>> = Vec::new();
    let mut best: Option<(Rational, Vec<Rational>)> = None;
    let mut attempt = |ts: Vec<Rational>, tried: &mut usize, best: &mut Option<(Rational, Vec<Rational>)>| -> Result<Option<Outcome>> {
        if seen.contains(&ts) || *tried >= opts.budget {
            return Ok(None);
        }
        *tried += 1;
        let (lp, _) = sys.instantiate(Some(&ts), Normalization::Standard);
        let r = probe(&lp)?;
        seen.push(ts.clone());
        match r {
            Probe::Feasible(x) => Ok(Some(Outcome::Found { witness: sys.witness_from(&x, None), ts })),
            Probe::Infeasible(res) => {
                if best.as_ref().is_none_or(|(b, _)| res < *b) {
                    *best = Some((res, ts));
                }
                Ok(None)
            }
        }
    };
    // coarse levels first: pure choices, then halves, then the full grid for few groups
    let mut levels: Vec<Vec<Rational>> = vec![vec![rational::zero(), rational::one()], vec![rational::ratio(1, 2)]];
    if m <= 2 {
        let g = opts.grid.max(2) as i64;
        let mut extra = Vec::new();
        let mut step = 4;
        while step <= g {
            for k in 1..step {
                let v = rational::ratio(k, step);
                if !levels.iter().flatten().any(|w| *w == v) && !extra.contains(&v) {
                    extra.push(v);
                }
            }
            step *= 2;
        }
        for v in extra {
            levels.push(vec![v]);
        }
    }
    let mut pool: Vec<Rational> = Vec::new();
    for level in &levels {
        pool.extend(level.iter().cloned());
        let mut idx = vec![0usize; m];
        loop {
            let ts: Vec<Rational> = idx.iter().map(|&i| pool[i].clone()).collect();
            if ts.iter().any(|t| level.contains(t)) {
                if let Some(o) = attempt(ts, &mut tried, &mut best)? {
                    return Ok(o);
                }
            }
            if tried >= opts.budget {
                return Ok(Outcome::Unknown { tried });
            }
            let mut pos = m;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < pool.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || m == 0 {
                break;
            }
        }
    }
    // dyadic refinement around the cell with the smallest phase-one residual
    let Some((_, mut centre)) = best.clone() else { return Ok(Outcome::Unknown { tried }) };
    let mut h = Rational::new(BigInt::one(), BigInt::from(opts.grid.max(2)));
    for _ in 0..opts.refine_depth {
        h /= rational::int(2);
        for i in 0..m {
            for dir in [-1i64, 1] {
                let mut ts = centre.clone();
                ts[i] = &ts[i] + &h * rational::int(dir);
                if ts[i].is_negative() || ts[i] > Rational::one() {
                    continue;
                }
                if let Some(o) = attempt(ts, &mut tried, &mut best)? {
                    return Ok(o);
                }
            }
        }
        centre = best.as_ref().unwrap().1.clone();
        if tried >= opts.budget {
            break;
        }
    }
    Ok(Outcome::Unknown { tried })
}

/// Full pipeline with the finite-game refutation for angelic programs.
pub fn synthesize(sgs: &Sgs, inv: &Invariant, opts: &SearchOptions) -> Result<(ConstraintSystem, Outcome)> {
    let sys = build_constraints(sgs, inv)?;
    if !sys.angelic.is_empty() {
        let (lp, _) = sys.instantiate(None, Normalization::Standard);
        if let Probe::Infeasible(_) = probe(&lp)? {
            return Ok((sys, Outcome::Infeasible(Refutation::LinearPart)));
        }
        if refute_by_game(sgs, opts.game_limit)? == GameVerdict::AngelLoses {
            return Ok((sys, Outcome::Infeasible(Refutation::Game)));
        }
    }
    let out = solve_system(&sys, opts)?;
    Ok((sys, out))
}

fn check_initial(sys: &ConstraintSystem, sgs: &Sgs, inv: &Invariant) -> Result<()> {
    let _ = sys;
    if !inv.holds(sgs.l_in, &sgs.x0) {
        return Err(Error::Invalid(String::from("initial valuation violates the invariant at the entry location")));
    }
    Ok(())
}

fn check_weights(sys: &ConstraintSystem, ts: &[Rational]) -> Result<()> {
    if ts.len() != sys.angelic.len() {
        return Err(Error::Invalid(format!("{} angelic weights given, {} needed", ts.len(), sys.angelic.len())));
    }
    Ok(())
}

/// Minimizes `η(ℓ_in,x₀) − K'` with `ε = 1` (angelic weights fixed to `ts`).
pub fn optimize_ub(sys: &ConstraintSystem, sgs: &Sgs, inv: &Invariant, ts: &[Rational]) -> Result<Option<(LrsmWitness, Rational)>> {
    check_initial(sys, sgs, inv)?;
    check_weights(sys, ts)?;
    let (mut lp, _) = sys.instantiate(Some(ts), Normalization::EpsOne);
    lp.set_objective(Sense::Minimize, &sys.w0 - &LinForm::var(sys.tmpl.kprime));
    Ok(match lp.solve()? {
        LpResult::Optimal { value, x } => Some((sys.witness_from(&x, None), value)),
        LpResult::Infeasible { .. } => None,
        LpResult::Unbounded { .. } => return Err(Error::Invalid(String::from("upper bound is unbounded below"))),
    })
}

/// Whether `η(ℓ_in,x₀) − K' <= U` is feasible with `ε = 1`.
pub fn ub_feasible(sys: &ConstraintSystem, ts: &[Rational], u: &Rational) -> Result<bool> {
    check_weights(sys, ts)?;
    let (mut lp, _) = sys.instantiate(Some(ts), Normalization::EpsOne);
    lp.add_le(&(&sys.w0 - &LinForm::var(sys.tmpl.kprime)), &LinForm::constant(u.clone()));
    Ok(lp.feasible()?.is_some())
}

/// Lexicographic minimization of ratios over `ε`: each objective is minimized in ratio mode and then
/// frozen at its optimum before the next one. Returns the witness and the optimal values.
pub fn minimize_ratios(sys: &ConstraintSystem, ts: &[Rational], objectives: &[LinForm]) -> Result<Option<(LrsmWitness, Vec<Rational>)>> {
    check_weights(sys, ts)?;
    let (base, s) = sys.instantiate(Some(ts), Normalization::Ratio);
    let s = s.unwrap();
    let mut lp = base;
    let mut values = Vec::new();
    let mut last = None;
    for obj in objectives {
        lp.set_objective(Sense::Minimize, obj.clone());
        match lp.solve()? {
            LpResult::Optimal { value, x } => {
                lp.add_le(obj, &LinForm::constant(value.clone()));
                values.push(value);
                last = Some(x);
            }
            LpResult::Infeasible { .. } => return Ok(None),
            LpResult::Unbounded { .. } => return Err(Error::Invalid(String::from("ratio objective unbounded below"))),
        }
    }
    // prefer a point with positive scale so the witness is exact
    lp.set_objective(Sense::Maximize, LinForm::var(s));
    let x = match lp.solve()? {
        LpResult::Optimal { x, .. } | LpResult::Unbounded { x, .. } => x,
        LpResult::Infeasible { .. } => last.unwrap(),
    };
    if x[s].is_zero() {
        // the optimum is only approached as ε grows: settle for ε <= 2^20
        let (mut lp, s2) = sys.instantiate(Some(ts), Normalization::Ratio);
        let s2 = s2.unwrap();
        lp.add_le(&LinForm::constant(Rational::new(BigInt::one(), BigInt::one() << 20usize)), &LinForm::var(s2));
        let mut vals = Vec::new();
        let mut xx = None;
        for obj in objectives {
            lp.set_objective(Sense::Minimize, obj.clone());
            match lp.solve()? {
                LpResult::Optimal { value, x } => {
                    lp.add_le(obj, &LinForm::constant(value.clone()));
                    vals.push(value);
                    xx = Some(x);
                }
                _ => return Ok(None),
            }
        }
        let x = xx.unwrap();
        return Ok(Some((sys.witness_from(&x, Some(s2)), vals)));
    }
    Ok(Some((sys.witness_from(&x, Some(s)), values)))
}

/// `max (ε(x−1) − W₀) / (b_hi − a_lo)` subject to `(x−2)ε >= W₀`, the best `M` for the tail bound on
/// `ℙ(T > x)`. `None` when no bounded witness exists or the threshold rows are infeasible.
pub fn max_tail_margin(sys: &ConstraintSystem, ts: &[Rational], x: &Rational) -> Result<Option<(LrsmWitness, Rational)>> {
    check_weights(sys, ts)?;
    let Some((lo, hi)) = sys.diff else { return Ok(None) };
    let mut lp = sys.lp.clone();
    {
        for (g, t) in sys.angelic.iter().zip(ts) {
            g.block.instantiate(&mut lp, &[t.clone(), Rational::one() - t], &format!("l{}k{}ang_", g.loc, g.disjunct));
        }
    }
    // scale so that b_hi − a_lo = 1
    let s = lp.add_var("s", true);
    let t = &sys.tmpl;
    let sf = LinForm::var(s);
    lp.add_eq(&(&LinForm::var(hi) - &LinForm::var(lo)), &LinForm::constant(Rational::one()));
    lp.add_le(&sf, &LinForm::var(t.eps));
    lp.add_le(&LinForm::var(t.k), &-&sf);
    lp.add_le(&LinForm::var(t.kprime), &-&sf);
    let epsf = LinForm::var(t.eps);
    lp.add_le(&sys.w0, &(&epsf * &(x - rational::int(2))));
    let obj = &(&epsf * &(x - rational::int(1))) - &sys.w0;
    lp.set_objective(Sense::Maximize, obj.clone());
    Ok(match lp.solve()? {
        LpResult::Optimal { value, x } => {
            let scale = if x[s].is_zero() { None } else { Some(s) };
            Some((sys.witness_from(&x, scale), value))
        }
        LpResult::Infeasible { .. } => None,
        LpResult::Unbounded { .. } => return Err(Error::Invalid(String::from("tail margin unbounded"))),
    })
}

#[cfg(test)]
mod tests;
