//! δ-accurate expected termination time for discrete programs: n-step unfolding, pruning of
//! incompatible angelic edges, costs, and backward induction.
//!
//! Nodes at equal depth with equal configuration have equal subtrees, so each level is stored once
//! per distinct configuration and the unfolding tree becomes a layered DAG.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::bounds::{ceil_u64, concentration_b, concentration_narrow, ConcentrationCertificate};
use crate::error::{Error, Result};
use crate::lang::Distribution;
use crate::rational::{self, int, Rational};
use crate::sgs::{Config, Invariant, LocKind, Sgs};
use crate::synth::{LrsmWitness, SearchOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Weighted children (probabilistic location or sampled update).
    Chance,
    Angelic,
    Demonic,
    /// The terminal location.
    Terminal,
    /// Unexpanded node at depth `n`.
    Frontier,
}

/// One depth of the unfolding, children stored as ranges into `edges`.
#[derive(Clone, Debug, Default)]
pub struct Level {
    pub kinds: Vec<NodeKind>,
    /// `edges[starts[i]..starts[i+1]]` are the children of node `i`.
    pub starts: Vec<u32>,
    /// `(child index in the next level, weight id)`.
    pub edges: Vec<(u32, u32)>,
    /// Node configurations, kept only on request.
    pub configs: Vec<Config>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn children(&self, i: usize) -> &[(u32, u32)] {
        &self.edges[self.starts[i] as usize..self.starts[i + 1] as usize]
    }
}

#[derive(Clone, Debug)]
pub struct Unfolding {
    pub levels: Vec<Level>,
    /// Distinct edge weights; choices use weight one.
    pub weights: Vec<Rational>,
}

impl Unfolding {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.levels.iter().map(Level::len).sum()
    }

    pub fn weight(&self, id: u32) -> &Rational {
        &self.weights[id as usize]
    }
}

/// Weighted successor configurations of a non-terminal configuration.
fn expand(sgs: &Sgs, c: &Config) -> Result<(NodeKind, Vec<(Config, Rational)>)> {
    let kind = match sgs.kind(c.loc) {
        LocKind::Angelic => NodeKind::Angelic,
        LocKind::Demonic => NodeKind::Demonic,
        _ => NodeKind::Chance,
    };
    let picks: Vec<(usize, Rational)> = match sgs.kind(c.loc) {
        LocKind::Deterministic => vec![(sgs.enabled(c.loc, &c.x)?, Rational::one())],
        LocKind::Probabilistic => sgs.outgoing[c.loc]
            .iter()
            .map(|&t| (t, sgs.transitions[t].prob.clone().unwrap()))
            .filter(|(_, p)| !p.is_zero())
            .collect(),
        _ => sgs.outgoing[c.loc].iter().map(|&t| (t, Rational::one())).collect(),
    };
    let mut out = Vec::new();
    for (t, p) in picks {
        let tr = &sgs.transitions[t];
        let mut draws = vec![(vec![Rational::zero(); sgs.rvars.len()], Rational::one())];
        for j in tr.update.random_vars() {
            let Distribution::Discrete(vs) = &sgs.rvars[j].1 else {
                return Err(Error::Unsupported("unfolding needs discrete distributions".into()));
            };
            let mut next = Vec::new();
            for (r, w) in &draws {
                for (v, q) in vs.iter().filter(|(_, q)| !q.is_zero()) {
                    let mut r2 = r.clone();
                    r2[j] = v.clone();
                    next.push((r2, w * q));
                }
            }
            draws = next;
        }
        if draws.len() > 1 && kind != NodeKind::Chance {
            // sampling under a choice is not produced by the construction
            return Err(Error::Unsupported("random update directly under a nondeterministic choice".into()));
        }
        for (r, w) in draws {
            out.push((Config { loc: tr.tgt, x: tr.update.apply(&c.x, &r) }, &p * w));
        }
    }
    Ok((kind, out))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UnfoldOptions<'a> {
    pub max_nodes: usize,
    /// Drop angelic children that do not minimise this witness.
    pub prune: Option<&'a LrsmWitness>,
    pub keep_configs: bool,
}

/// The `n`-step unfolding from the initial configuration.
pub fn unfold(sgs: &Sgs, n: usize, max_nodes: usize) -> Result<Unfolding> {
    unfold_with(sgs, n, UnfoldOptions { max_nodes, prune: None, keep_configs: true })
}

pub fn unfold_with(sgs: &Sgs, n: usize, opts: UnfoldOptions) -> Result<Unfolding> {
    let mut weights = vec![Rational::one()];
    let mut weight_ids: HashMap<Rational, u32> = HashMap::new();
    weight_ids.insert(Rational::one(), 0);
    let mut levels: Vec<Level> = Vec::with_capacity(n + 1);
    let mut frontier = vec![sgs.initial_config()];
    let mut total = 1usize;
    for depth in 0..=n {
        let mut level = Level { starts: vec![0], ..Level::default() };
        let mut next: Vec<Config> = Vec::new();
        let mut index: HashMap<Config, u32> = HashMap::new();
        for c in &frontier {
            let kind = if c.loc == sgs.l_out {
                NodeKind::Terminal
            } else if depth == n {
                NodeKind::Frontier
            } else {
                let (kind, mut succ) = expand(sgs, c)?;
                if let (NodeKind::Angelic, Some(w)) = (kind, opts.prune) {
                    let etas: Vec<Rational> = succ.iter().map(|(c, _)| w.eta(c.loc, &c.x)).collect();
                    let min = etas.iter().min().cloned().unwrap();
                    let mut k = 0;
                    succ.retain(|_| {
                        k += 1;
                        etas[k - 1] == min
                    });
                }
                let mut mine: Vec<(u32, Rational)> = Vec::new();
                for (c, w) in succ {
                    let id = match index.get(&c) {
                        Some(&id) => id,
                        None => {
                            total += 1;
                            if total > opts.max_nodes {
                                return Err(Error::NodeLimit { limit: opts.max_nodes, depth: depth + 1, required: n });
                            }
                            let id = next.len() as u32;
                            index.insert(c.clone(), id);
                            next.push(c);
                            id
                        }
                    };
                    // merge parallel edges into one weighted edge
                    match mine.iter_mut().find(|(i, _)| *i == id) {
                        Some((_, acc)) if kind == NodeKind::Chance => *acc += w,
                        Some(_) => {}
                        None => mine.push((id, w)),
                    }
                }
                for (id, w) in mine {
                    let wid = *weight_ids.entry(w.clone()).or_insert_with(|| {
                        weights.push(w);
                        (weights.len() - 1) as u32
                    });
                    level.edges.push((id, wid));
                }
                kind
            };
            level.kinds.push(kind);
            level.starts.push(level.edges.len() as u32);
        }
        if opts.keep_configs {
            level.configs = core::mem::take(&mut frontier);
        }
        levels.push(level);
        frontier = next;
    }
    Ok(Unfolding { levels, weights })
}

/// Keeps only the angelic children that minimise `η` (ties kept). Needs stored configurations.
pub fn prune_incompatible(u: &mut Unfolding, w: &LrsmWitness) {
    for d in 0..u.depth() {
        let (cur, rest) = u.levels.split_at_mut(d + 1);
        let (level, next) = (&mut cur[d], &rest[0]);
        if next.configs.is_empty() {
            continue;
        }
        let mut edges = Vec::with_capacity(level.edges.len());
        let mut starts = vec![0u32];
        for i in 0..level.len() {
            let kids = level.children(i);
            if level.kinds[i] == NodeKind::Angelic {
                let eta = |&(c, _): &(u32, u32)| w.eta(next.configs[c as usize].loc, &next.configs[c as usize].x);
                let min = kids.iter().map(eta).min().unwrap();
                edges.extend(kids.iter().filter(|k| eta(k) == min));
            } else {
                edges.extend_from_slice(kids);
            }
            starts.push(edges.len() as u32);
        }
        level.edges = edges;
        level.starts = starts;
    }
}

/// Value of the root when the root costs 0, every other node 1 and unexpanded nodes `frontier`.
///
/// All values at depth `d` share the denominator `D^{n−d}·den(frontier)`, `D` the common denominator of
/// the edge weights, so the induction runs on integers.
pub fn backward_induction(u: &Unfolding, frontier: &Rational) -> Rational {
    let n = u.depth();
    let d = u.weights.iter().fold(BigInt::one(), |acc, w| rational::lcm(&acc, w.denom()));
    let scaled: Vec<BigInt> = u.weights.iter().map(|w| (w * Rational::from_integer(d.clone())).to_integer()).collect();
    let fnum = frontier.numer().clone();
    let mut scale = frontier.denom().clone();
    let mut below: Vec<BigInt> = Vec::new();
    for depth in (0..=n).rev() {
        let level = &u.levels[depth];
        let cost = if depth == 0 { BigInt::zero() } else { scale.clone() };
        let mut vals = Vec::with_capacity(level.len());
        for i in 0..level.len() {
            let kids = level.children(i);
            let v = match level.kinds[i] {
                NodeKind::Terminal => cost.clone(),
                NodeKind::Frontier => {
                    if depth == 0 {
                        BigInt::zero()
                    } else {
                        fnum.clone()
                    }
                }
                NodeKind::Chance => {
                    let mut s = cost.clone();
                    for &(c, w) in kids {
                        s += &scaled[w as usize] * &below[c as usize];
                    }
                    s
                }
                NodeKind::Angelic => &cost + &d * kids.iter().map(|&(c, _)| &below[c as usize]).min().unwrap(),
                NodeKind::Demonic => &cost + &d * kids.iter().map(|&(c, _)| &below[c as usize]).max().unwrap(),
            };
            vals.push(v);
        }
        below = vals;
        if depth > 0 {
            scale *= &d;
        }
    }
    Rational::new(below.swap_remove(0), scale)
}

/// `(W₀ + n(b−a))/ε`, the cost charged to an unexpanded node.
pub fn frontier_cost(cert: &ConcentrationCertificate, n: usize) -> Rational {
    let w = &cert.witness;
    let (a, b) = w.diff_bounds.as_ref().unwrap();
    (&cert.w0 + int(n as i64) * (b - a)) / &w.eps
}

/// Smallest `n >= valid_from` with `c1·e^{−c2 n}·(n + C(n)) <= δ`.
pub fn required_depth(cert: &ConcentrationCertificate, delta: f64) -> usize {
    let err = |n: u64| {
        let c = rational::to_f64(&frontier_cost(cert, n as usize));
        cert.exponential(n) * (n as f64 + c)
    };
    let start = ceil_u64(&cert.valid_from).max(1);
    if err(start) <= delta {
        return start as usize;
    }
    let mut hi = start;
    while err(hi) > delta {
        hi = hi.saturating_mul(2);
        if hi > 1 << 40 {
            return usize::MAX;
        }
    }
    // err(lo) > δ >= err(hi)
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if err(mid) <= delta {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as usize
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    /// Induction value at depth `n_used`; absent when the node limit stopped the unfolding short of `n_required`.
    pub value: Option<Rational>,
    pub n_required: usize,
    pub n_used: usize,
    /// Truncated value (frontier cost 1) and pessimistic value (frontier cost `C`) at `n_used`.
    pub bracket: (Rational, Rational),
    pub certificate: ConcentrationCertificate,
}

/// Approximates the optimal expected termination time within `delta`.
///
/// Of the two Hoeffding certificates (smallest `B`, narrowest difference interval) the one needing the
/// shallower unfolding is used.
pub fn approximate_et(
    sgs: &Sgs,
    inv: &Invariant,
    delta: &Rational,
    max_nodes: usize,
    force_n: Option<usize>,
    opts: &SearchOptions,
) -> Result<ApproxResult> {
    if *delta <= Rational::zero() {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    if sgs.rvars.iter().any(|(_, d)| !d.is_discrete()) {
        return Err(Error::Unsupported("unfolding needs discrete distributions".into()));
    }
    let df = rational::to_f64(delta);
    let mut cert = concentration_b(sgs, inv, opts)?;
    let narrow = concentration_narrow(sgs, inv, opts)?;
    if required_depth(&narrow, df) < required_depth(&cert, df) {
        cert = narrow;
    }
    let required = required_depth(&cert, df);
    let n = force_n.unwrap_or(required);
    let evaluate = |n: usize| -> Result<(Rational, Rational)> {
        let u = unfold_with(sgs, n, UnfoldOptions { max_nodes, prune: Some(&cert.witness), keep_configs: false })?;
        let c = frontier_cost(&cert, n);
        Ok((backward_induction(&u, &Rational::one()), backward_induction(&u, &c)))
    };
    match evaluate(n) {
        Ok((lo, hi)) => Ok(ApproxResult { value: Some(hi.clone()), n_required: required, n_used: n, bracket: (lo, hi), certificate: cert }),
        Err(Error::NodeLimit { depth, .. }) => {
            let used = depth.saturating_sub(1);
            let (lo, hi) = evaluate(used)?;
            Ok(ApproxResult { value: None, n_required: required, n_used: used, bracket: (lo, hi), certificate: cert })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;
    use crate::rational::ratio;
    use crate::sgs::build_sgs;

    fn sgs(src: &str) -> Sgs {
        build_sgs(&parse_program(src).unwrap())
    }

    const IRR: &str = "var n := 1; while n >= 1 do if prob(1/2) then n := n + 1 else n := n - 1; n := n - 1 fi od";

    #[test]
    fn depth_zero_is_the_root() {
        let s = sgs(IRR);
        let u = unfold(&s, 0, 10).unwrap();
        assert_eq!(u.num_nodes(), 1);
        assert_eq!(backward_induction(&u, &int(100)), int(0));
    }

    #[test]
    fn halves_at_the_coin() {
        let s = sgs(IRR);
        let u = unfold(&s, 3, 100).unwrap();
        let mut seen = 0;
        for level in &u.levels {
            for i in 0..level.len() {
                if s.kind(level.configs[i].loc) == LocKind::Probabilistic && level.kinds[i] == NodeKind::Chance {
                    let ws: Vec<&Rational> = level.children(i).iter().map(|&(_, w)| u.weight(w)).collect();
                    assert_eq!(ws, vec![&ratio(1, 2), &ratio(1, 2)]);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn skip_stays_terminal() {
        let s = sgs("skip");
        let u = unfold(&s, 5, 100).unwrap();
        // the terminal node is a leaf, so nothing is expanded past it
        assert_eq!(u.num_nodes(), 2);
        assert_eq!(u.levels[1].kinds, vec![NodeKind::Terminal]);
        assert!(u.levels[2..].iter().all(Level::is_empty));
        assert_eq!(backward_induction(&u, &int(7)), int(1));
    }

    #[test]
    fn countdown_counts_steps() {
        // x:=3, then three rounds of head and body, then the final head test
        let s = sgs("var x := 0; x := 3; while x >= 1 do x := x - 1 od");
        for n in [8usize, 9, 20] {
            let u = unfold(&s, n, 1000).unwrap();
            assert_eq!(backward_induction(&u, &int(1000)), int(8));
        }
        let u = unfold(&s, 4, 1000).unwrap();
        assert_eq!(backward_induction(&u, &int(1)), int(4));
    }

    #[test]
    fn node_limit_is_reported() {
        let s = sgs(IRR);
        assert!(matches!(unfold(&s, 50, 20), Err(Error::NodeLimit { limit: 20, .. })));
    }

    #[test]
    fn values_grow_towards_the_limit() {
        let s = sgs(IRR);
        let mut last = Rational::zero();
        for n in [10usize, 20, 40, 80] {
            let v = backward_induction(&unfold(&s, n, 1 << 20).unwrap(), &Rational::one());
            assert!(v >= last);
            last = v;
        }
        // limit (9 + 7√5)/2
        assert!(rational::to_f64(&last) < 12.33);
    }

    #[test]
    fn angelic_pruning_keeps_the_minimiser() {
        let src = "var x := 2; @[x >= 0] while x >= 1 do @[x >= 1] if angel then @[x >= 1] x := x - 1 else @[x >= 1] x := x + 1 fi od @[x <= 0]";
        let s = sgs(src);
        let inv = Invariant::elaborate(&s).unwrap();
        let cert = concentration_b(&s, &inv, &SearchOptions::default()).unwrap();
        let mut u = unfold(&s, 12, 1000).unwrap();
        let before = backward_induction(&u, &int(1));
        prune_incompatible(&mut u, &cert.witness);
        let single = |u: &Unfolding| {
            u.levels.iter().all(|l| (0..l.len()).filter(|&i| l.kinds[i] == NodeKind::Angelic).all(|i| l.children(i).len() == 1))
        };
        assert!(single(&u));
        assert_eq!(backward_induction(&u, &int(1)), before);
        let opts = UnfoldOptions { max_nodes: 1000, prune: Some(&cert.witness), keep_configs: false };
        let inline = unfold_with(&s, 12, opts).unwrap();
        assert!(single(&inline));
        assert_eq!(backward_induction(&inline, &int(1)), before);
    }
}
