//! Stochastic game structures built from programs, and their one-step semantics.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::lang::{print_pred, AffineExpr, Branch, Distribution, Pred, Program, RExpr, Stmt, StmtKind};
use crate::poly::{emptiness_mixed, LinAssertion, LinConstraint};
use crate::rational::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocKind {
    Angelic,
    Demonic,
    Probabilistic,
    Deterministic,
}

impl LocKind {
    pub fn name(self) -> &'static str {
        match self {
            LocKind::Angelic => "angelic",
            LocKind::Demonic => "demonic",
            LocKind::Probabilistic => "probabilistic",
            LocKind::Deterministic => "deterministic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: usize,
    pub kind: LocKind,
    /// `line:col` of the statement that introduced the location, or `out`.
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Update {
    Identity,
    Assign { var: usize, rhs: RExpr },
}

impl Update {
    /// Applies the update with sampled random values `r`.
    pub fn apply(&self, x: &[Rational], r: &[Rational]) -> Vec<Rational> {
        let mut y = x.to_vec();
        if let Update::Assign { var, rhs } = self {
            let mut v = rhs.affine.eval(x);
            for (j, c) in rhs.random_vars() {
                v += c * &r[j];
            }
            y[*var] = v;
        }
        y
    }

    /// Image of `x` with every random variable replaced by its mean.
    pub fn mean_image(&self, nvars: usize, rvars: &[(String, Distribution)]) -> Vec<AffineExpr> {
        let mut out: Vec<AffineExpr> = (0..nvars).map(|i| AffineExpr::var(nvars, i)).collect();
        if let Update::Assign { var, rhs } = self {
            out[*var] = rhs.mean_affine(rvars);
        }
        out
    }

    pub fn random_vars(&self) -> Vec<usize> {
        match self {
            Update::Identity => Vec::new(),
            Update::Assign { rhs, .. } => rhs.random_vars().map(|(j, _)| j).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub src: usize,
    pub tgt: usize,
    pub update: Update,
    /// Meaningful at deterministic sources only.
    pub guard: Pred,
    /// Present at probabilistic sources only.
    pub prob: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub loc: usize,
    pub x: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct Sgs {
    pub var_names: Vec<String>,
    pub x0: Vec<Rational>,
    pub rvars: Vec<(String, Distribution)>,
    pub locations: Vec<Location>,
    pub transitions: Vec<Transition>,
    /// Outgoing transition ids per location, in construction order.
    pub outgoing: Vec<Vec<usize>>,
    pub l_in: usize,
    pub l_out: usize,
    /// Annotation in force at each location (inherited from the nearest annotated statement).
    pub annotations: Vec<Pred>,
    pub normalized: bool,
}

struct Builder {
    kinds: Vec<LocKind>,
    labels: Vec<String>,
    ann: Vec<Option<Pred>>,
    trans: Vec<Transition>,
}

fn label(s: &Stmt) -> String {
    format!("{}:{}", s.pos.line, s.pos.col)
}

impl Builder {
    fn loc(&mut self, label: String) -> usize {
        self.kinds.push(LocKind::Deterministic);
        self.labels.push(label);
        self.ann.push(None);
        self.kinds.len() - 1
    }

    fn edge(&mut self, src: usize, tgt: usize, update: Update, guard: Pred, prob: Option<Rational>) {
        self.trans.push(Transition { src, tgt, update, guard, prob });
    }

    fn compile(&mut self, s: &Stmt, lin: usize, lout: usize, inherited: Option<&Pred>) {
        match &s.annotation {
            Some(a) => self.ann[lin] = Some(a.clone()),
            None if self.ann[lin].is_none() => self.ann[lin] = inherited.cloned(),
            None => {}
        }
        let inh = s.annotation.as_ref().or(inherited);
        match &s.kind {
            StmtKind::Skip => self.edge(lin, lout, Update::Identity, Pred::True, None),
            StmtKind::Assign { var, rhs } => {
                self.edge(lin, lout, Update::Assign { var: *var, rhs: rhs.clone() }, Pred::True, None)
            }
            StmtKind::Seq(ss) => {
                let mut cur = lin;
                for (i, t) in ss.iter().enumerate() {
                    let next = if i + 1 == ss.len() { lout } else { self.loc(label(&ss[i + 1])) };
                    self.compile(t, cur, next, inh);
                    cur = next;
                }
            }
            StmtKind::If { branch, then_branch, else_branch } => {
                let t = self.loc(label(then_branch));
                let e = self.loc(label(else_branch));
                match branch {
                    Branch::Angel => {
                        self.kinds[lin] = LocKind::Angelic;
                        self.edge(lin, t, Update::Identity, Pred::True, None);
                        self.edge(lin, e, Update::Identity, Pred::True, None);
                    }
                    Branch::Demon => {
                        self.kinds[lin] = LocKind::Demonic;
                        self.edge(lin, t, Update::Identity, Pred::True, None);
                        self.edge(lin, e, Update::Identity, Pred::True, None);
                    }
                    Branch::Prob(p) => {
                        self.kinds[lin] = LocKind::Probabilistic;
                        self.edge(lin, t, Update::Identity, Pred::True, Some(p.clone()));
                        self.edge(lin, e, Update::Identity, Pred::True, Some(Rational::one() - p));
                    }
                    Branch::Guard(g) => {
                        self.edge(lin, t, Update::Identity, g.clone(), None);
                        self.edge(lin, e, Update::Identity, Pred::Not(Box::new(g.clone())).nnf(), None);
                    }
                }
                self.compile(then_branch, t, lout, inh);
                self.compile(else_branch, e, lout, inh);
            }
            StmtKind::While { guard, body } => {
                let b = self.loc(label(body));
                self.edge(lin, b, Update::Identity, guard.clone(), None);
                self.edge(lin, lout, Update::Identity, Pred::Not(Box::new(guard.clone())).nnf(), None);
                self.compile(body, b, lin, inh);
            }
        }
    }
}

pub fn build_sgs(p: &Program) -> Sgs {
    let mut b = Builder { kinds: Vec::new(), labels: Vec::new(), ann: Vec::new(), trans: Vec::new() };
    let lin = b.loc(label(&p.body));
    let lout = b.loc("out".to_string());
    b.compile(&p.body, lin, lout, None);
    b.ann[lout] = Some(p.final_annotation.clone().unwrap_or(Pred::True));
    b.edge(lout, lout, Update::Identity, Pred::True, None);

    // breadth-first numbering from the entry, with the exit last
    let n = b.kinds.len();
    let mut out_raw: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in b.trans.iter().enumerate() {
        out_raw[t.src].push(i);
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([lin]);
    seen[lin] = true;
    seen[lout] = true;
    while let Some(l) = queue.pop_front() {
        order.push(l);
        for &t in &out_raw[l] {
            let v = b.trans[t].tgt;
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.push(lout);
    let mut newid = vec![usize::MAX; n];
    for (i, &l) in order.iter().enumerate() {
        newid[l] = i;
    }
    let locations = order
        .iter()
        .enumerate()
        .map(|(i, &l)| Location { id: i, kind: b.kinds[l], label: b.labels[l].clone() })
        .collect();
    let annotations = order.iter().map(|&l| b.ann[l].clone().unwrap_or(Pred::True)).collect();
    let mut transitions = Vec::with_capacity(b.trans.len());
    let mut outgoing = vec![Vec::new(); order.len()];
    for &l in &order {
        for &t in &out_raw[l] {
            let mut tr = b.trans[t].clone();
            tr.src = newid[tr.src];
            tr.tgt = newid[tr.tgt];
            outgoing[tr.src].push(transitions.len());
            transitions.push(tr);
        }
    }
    Sgs {
        var_names: p.var_names(),
        x0: p.initial(),
        rvars: p.rvars.clone(),
        locations,
        transitions,
        outgoing,
        l_in: newid[lin],
        l_out: newid[lout],
        annotations,
        normalized: false,
    }
}

impl Sgs {
    pub fn nvars(&self) -> usize {
        self.var_names.len()
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn kind(&self, l: usize) -> LocKind {
        self.locations[l].kind
    }

    pub fn successors(&self, l: usize) -> impl Iterator<Item = &Transition> {
        self.outgoing[l].iter().map(move |&t| &self.transitions[t])
    }

    /// Every guard rewritten to disjunctive normal form.
    pub fn normalize(&self) -> Sgs {
        let mut s = self.clone();
        let n = self.nvars();
        for t in &mut s.transitions {
            t.guard = Pred::from_dnf(&t.guard.dnf(n));
        }
        s.normalized = true;
        s
    }

    pub fn initial_config(&self) -> Config {
        Config { loc: self.l_in, x: self.x0.clone() }
    }

    /// The unique enabled transition of a deterministic location.
    pub fn enabled(&self, loc: usize, x: &[Rational]) -> Result<usize> {
        self.outgoing[loc]
            .iter()
            .copied()
            .find(|&t| self.transitions[t].guard.eval(x))
            .ok_or(Error::NoEnabledTransition(loc))
    }

    /// One step: samples the random variables, resolves the location's choice and applies the update.
    pub fn step<R: RngCore + ?Sized>(
        &self,
        c: &Config,
        angel: &mut dyn FnMut(&Config, &[usize]) -> usize,
        demon: &mut dyn FnMut(&Config, &[usize]) -> usize,
        rng: &mut R,
    ) -> Result<Config> {
        let outs = &self.outgoing[c.loc];
        let t = match self.kind(c.loc) {
            LocKind::Deterministic => self.enabled(c.loc, &c.x)?,
            LocKind::Probabilistic => {
                let u = dyadic(rng);
                let mut acc = Rational::zero();
                let mut pick = *outs.last().unwrap();
                for &t in outs {
                    acc += self.transitions[t].prob.as_ref().unwrap();
                    if u < acc {
                        pick = t;
                        break;
                    }
                }
                pick
            }
            k => {
                let t = if k == LocKind::Angelic { angel(c, outs) } else { demon(c, outs) };
                if !outs.contains(&t) {
                    return Err(Error::BadSchedulerChoice { loc: c.loc, choice: t });
                }
                t
            }
        };
        let tr = &self.transitions[t];
        let mut r = vec![Rational::zero(); self.rvars.len()];
        for j in tr.update.random_vars() {
            r[j] = sample(&self.rvars[j].1, rng);
        }
        Ok(Config { loc: tr.tgt, x: tr.update.apply(&c.x, &r) })
    }

    /// Checks pairwise disjointness of guards at deterministic locations, exactly.
    pub fn check_guards(&self) -> Result<()> {
        let n = self.nvars();
        for (l, outs) in self.outgoing.iter().enumerate() {
            if self.kind(l) != LocKind::Deterministic {
                continue;
            }
            for (i, &a) in outs.iter().enumerate() {
                for &b in &outs[i + 1..] {
                    for da in self.transitions[a].guard.dnf(n) {
                        for db in self.transitions[b].guard.dnf(n) {
                            let (ns, st) = da.and(&db).rows();
                            if !emptiness_mixed(n, &ns, &st)? {
                                return Err(Error::Invalid(format!("overlapping guards at location {l}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph sgs {\n");
        for l in &self.locations {
            let shape = match l.kind {
                LocKind::Angelic => "diamond",
                LocKind::Demonic => "box",
                LocKind::Probabilistic => "circle",
                LocKind::Deterministic => "ellipse",
            };
            s.push_str(&format!("  l{} [shape={shape}, label=\"l{} {}\"];\n", l.id, l.id, l.label));
        }
        for t in &self.transitions {
            let mut parts = Vec::new();
            if let Some(p) = &t.prob {
                parts.push(rational::fmt_frac(p));
            } else if self.kind(t.src) == LocKind::Deterministic && t.guard != Pred::True {
                parts.push(print_pred(&t.guard, &self.var_names));
            }
            if let Some(u) = self.update_text(&t.update) {
                parts.push(u);
            }
            s.push_str(&format!("  l{} -> l{} [label=\"{}\"];\n", t.src, t.tgt, parts.join(" / ").replace('"', "'")));
        }
        s.push_str("}\n");
        s
    }

    pub fn update_text(&self, u: &Update) -> Option<String> {
        match u {
            Update::Identity => None,
            Update::Assign { var, rhs } => {
                let mut terms = Vec::new();
                for (i, c) in rhs.affine.coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        terms.push(format!("{}*{}", rational::fmt_short(c), self.var_names[i]));
                    }
                }
                for (j, c) in rhs.random_vars() {
                    terms.push(format!("{}*{}", rational::fmt_short(c), self.rvars[j].0));
                }
                if !rhs.affine.constant.is_zero() || terms.is_empty() {
                    terms.push(rational::fmt_short(&rhs.affine.constant));
                }
                Some(format!("{} := {}", self.var_names[*var], terms.join(" + ")))
            }
        }
    }
}

/// Uniform dyadic `k / 2^53` in `[0, 1)`.
pub fn dyadic<R: RngCore + ?Sized>(rng: &mut R) -> Rational {
    let k = rng.next_u64() >> 11;
    Rational::new(BigInt::from(k), BigInt::one() << 53usize)
}

pub fn sample<R: RngCore + ?Sized>(d: &Distribution, rng: &mut R) -> Rational {
    let u = dyadic(rng);
    match d {
        Distribution::Uniform(lo, hi) => lo + (hi - lo) * u,
        Distribution::Discrete(vs) => {
            let mut acc = Rational::zero();
            for (v, p) in vs {
                acc += p;
                if u < acc {
                    return v.clone();
                }
            }
            vs.iter().rev().find(|(_, p)| !p.is_zero()).unwrap().0.clone()
        }
    }
}

/// Per-location invariant: a nonempty list of satisfiable disjuncts.
#[derive(Clone, Debug, PartialEq)]
pub struct Invariant {
    pub disjuncts: Vec<Vec<LinAssertion>>,
}

impl Invariant {
    /// Elaborates the inherited annotations, dropping empty disjuncts.
    pub fn elaborate(sgs: &Sgs) -> Result<Invariant> {
        let n = sgs.nvars();
        let mut disjuncts = Vec::with_capacity(sgs.num_locations());
        for (l, ann) in sgs.annotations.iter().enumerate() {
            let mut keep = Vec::new();
            for d in ann.dnf(n) {
                if !d.is_empty()? {
                    keep.push(d);
                }
            }
            if keep.is_empty() {
                return Err(Error::EmptyInvariant { loc: l, label: sgs.locations[l].label.clone() });
            }
            disjuncts.push(keep);
        }
        Ok(Invariant { disjuncts })
    }

    pub fn trivial(sgs: &Sgs) -> Invariant {
        Invariant { disjuncts: vec![vec![LinAssertion::universe(sgs.nvars())]; sgs.num_locations()] }
    }

    pub fn holds(&self, loc: usize, x: &[Rational]) -> bool {
        self.disjuncts[loc].iter().any(|d| d.contains(x))
    }

    pub fn holds_f64(&self, loc: usize, x: &[f64]) -> bool {
        self.disjuncts[loc].iter().any(|d| d.contains_f64(x))
    }

    /// Transitions whose image is not shown to stay inside the target invariant. Each pre-state
    /// disjunct (with the guard) must map into a single target disjunct; discrete random values are
    /// enumerated and uniform ones range over their closed support.
    pub fn non_inductive(&self, sgs: &Sgs) -> Result<Vec<usize>> {
        let n = sgs.nvars();
        let m = sgs.rvars.len();
        let mut bad = Vec::new();
        'tr: for (id, t) in sgs.transitions.iter().enumerate() {
            let guards = if sgs.kind(t.src) == LocKind::Deterministic { t.guard.dnf(n) } else { vec![LinAssertion::universe(n)] };
            for (fixed, bounds) in random_cases(sgs, &t.update) {
                for d in &self.disjuncts[t.src] {
                    for g in &guards {
                        let mut pre: Vec<LinConstraint> = d
                            .and(g)
                            .constraints
                            .iter()
                            .map(|c| LinConstraint { expr: lift(&c.expr, m), strict: c.strict })
                            .collect();
                        pre.extend(bounds.iter().cloned());
                        let mut covered = false;
                        for target in &self.disjuncts[t.tgt] {
                            let mut inside = true;
                            for c in &target.constraints {
                                let post = LinConstraint { expr: post_image(&c.expr, &t.update, &fixed, m), strict: c.strict };
                                let mut cs = pre.clone();
                                cs.push(post.negate());
                                let (ns, st) = LinAssertion::new(n + m, cs).rows();
                                if !emptiness_mixed(n + m, &ns, &st)? {
                                    inside = false;
                                    break;
                                }
                            }
                            if inside {
                                covered = true;
                                break;
                            }
                        }
                        if !covered {
                            bad.push(id);
                            continue 'tr;
                        }
                    }
                }
            }
        }
        Ok(bad)
    }
}

/// `e` over `x` as an expression over `(x, r)`.
fn lift(e: &AffineExpr, m: usize) -> AffineExpr {
    let mut coeffs = e.coeffs.clone();
    coeffs.resize(coeffs.len() + m, Rational::zero());
    AffineExpr { coeffs, constant: e.constant.clone() }
}

/// `e` evaluated after the update, over `(x, r)`; `fixed` holds enumerated random values.
fn post_image(e: &AffineExpr, u: &Update, fixed: &[Option<Rational>], m: usize) -> AffineExpr {
    let n = e.coeffs.len();
    let mut out = lift(e, m);
    if let Update::Assign { var, rhs } = u {
        let k = e.coeffs[*var].clone();
        if !k.is_zero() {
            out.coeffs[*var] = Rational::zero();
            for i in 0..n {
                out.coeffs[i] += &k * &rhs.affine.coeffs[i];
            }
            out.constant += &k * &rhs.affine.constant;
            for (j, c) in rhs.random_vars() {
                match &fixed[j] {
                    Some(v) => out.constant += &k * c * v,
                    None => out.coeffs[n + j] += &k * c,
                }
            }
        }
    }
    out
}

/// Enumerated discrete values and interval rows for the random variables an update reads.
fn random_cases(sgs: &Sgs, u: &Update) -> Vec<(Vec<Option<Rational>>, Vec<LinConstraint>)> {
    let n = sgs.nvars();
    let m = sgs.rvars.len();
    let mut cases = vec![(vec![None; m], Vec::new())];
    for j in u.random_vars() {
        match &sgs.rvars[j].1 {
            Distribution::Discrete(vs) => {
                let mut next = Vec::new();
                for (fixed, rows) in &cases {
                    for (v, p) in vs {
                        if !p.is_zero() {
                            let mut f: Vec<Option<Rational>> = fixed.clone();
                            f[j] = Some(v.clone());
                            next.push((f, rows.clone()));
                        }
                    }
                }
                cases = next;
            }
            Distribution::Uniform(lo, hi) => {
                let r = AffineExpr::var(n + m, n + j);
                for (_, rows) in &mut cases {
                    rows.push(LinConstraint::le(AffineExpr::constant(n + m, lo.clone()).sub(&r)));
                    rows.push(LinConstraint::le(r.sub(&AffineExpr::constant(n + m, hi.clone()))));
                }
            }
        }
    }
    cases
}
