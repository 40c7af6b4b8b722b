//! Qualitative refutation on finite reachable state spaces: if the angel cannot force almost-sure
//! termination there, no ranking supermartingale exists for any invariant.

use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::error::Result;
use crate::lang::Distribution;
use crate::rational::Rational;
use crate::sgs::{Config, LocKind, Sgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameVerdict {
    /// The initial configuration lies outside the angel's almost-sure winning region.
    AngelLoses,
    AngelWins,
    /// Continuous distributions or too many configurations.
    Undecided,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Owner {
    Angel,
    Demon,
    Chance,
}

struct Game {
    owner: Vec<Owner>,
    succ: Vec<Vec<usize>>,
    target: Vec<bool>,
}

fn supports(d: &Distribution) -> Option<Vec<Rational>> {
    match d {
        Distribution::Discrete(vs) => Some(vs.iter().filter(|(_, p)| *p > Rational::from_integer(0.into())).map(|(v, _)| v.clone()).collect()),
        Distribution::Uniform(..) => None,
    }
}

/// Every random outcome of the transition's update.
fn outcomes(sgs: &Sgs, t: usize, x: &[Rational]) -> Option<Vec<Vec<Rational>>> {
    let tr = &sgs.transitions[t];
    let mut rs = vec![vec![Rational::from_integer(0.into()); sgs.rvars.len()]];
    for j in tr.update.random_vars() {
        let vals = supports(&sgs.rvars[j].1)?;
        let mut next = Vec::with_capacity(rs.len() * vals.len());
        for r in &rs {
            for v in &vals {
                let mut r2 = r.clone();
                r2[j] = v.clone();
                next.push(r2);
            }
        }
        rs = next;
    }
    Some(rs.iter().map(|r| tr.update.apply(x, r)).collect())
}

/// Nodes from which `who` forces reaching `goal` with positive probability inside `inside`.
fn attractor(g: &Game, inside: &[bool], goal: &[bool], who: Owner) -> Vec<bool> {
    let n = g.owner.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, ss) in g.succ.iter().enumerate() {
        if inside[u] {
            for &v in ss {
                if inside[v] {
                    pred[v].push(u);
                }
            }
        }
    }
    let mut remaining: Vec<usize> = (0..n).map(|u| g.succ[u].iter().filter(|&&v| inside[v]).count()).collect();
    let mut inattr = vec![false; n];
    let mut queue: Vec<usize> = (0..n).filter(|&u| inside[u] && goal[u]).collect();
    for &u in &queue {
        inattr[u] = true;
    }
    while let Some(v) = queue.pop() {
        for &u in &pred[v] {
            if inattr[u] {
                continue;
            }
            remaining[u] -= 1;
            let joins = match g.owner[u] {
                Owner::Chance => true,
                o if o == who => true,
                _ => remaining[u] == 0,
            };
            if joins {
                inattr[u] = true;
                queue.push(u);
            }
        }
    }
    inattr
}

/// Almost-sure winning region of the angel for reaching the terminal location.
fn almost_sure_region(g: &Game) -> Vec<bool> {
    let n = g.owner.len();
    let mut w = vec![true; n];
    loop {
        let reach = attractor(g, &w, &g.target, Owner::Angel);
        let lost: Vec<bool> = (0..n).map(|u| w[u] && !reach[u]).collect();
        if !lost.iter().any(|&b| b) {
            return w;
        }
        let trap = attractor(g, &w, &lost, Owner::Demon);
        for u in 0..n {
            if trap[u] {
                w[u] = false;
            }
        }
    }
}

fn expand(sgs: &Sgs, limit: usize) -> Result<Option<Game>> {
    let mut index: HashMap<Config, usize> = HashMap::new();
    let mut configs = vec![sgs.initial_config()];
    index.insert(configs[0].clone(), 0);
    let mut g = Game { owner: vec![Owner::Chance], succ: vec![Vec::new()], target: vec![false] };
    let mut node_of_config = vec![0usize];
    let mut i = 0;
    while i < configs.len() {
        let c = configs[i].clone();
        let me = node_of_config[i];
        i += 1;
        if c.loc == sgs.l_out {
            g.target[me] = true;
            continue;
        }
        g.owner[me] = match sgs.kind(c.loc) {
            LocKind::Angelic => Owner::Angel,
            LocKind::Demonic => Owner::Demon,
            _ => Owner::Chance,
        };
        let ts: Vec<usize> = match sgs.kind(c.loc) {
            LocKind::Deterministic => vec![sgs.enabled(c.loc, &c.x)?],
            LocKind::Probabilistic => sgs.outgoing[c.loc]
                .iter()
                .copied()
                .filter(|&t| sgs.transitions[t].prob.as_ref().is_some_and(|p| *p > Rational::from_integer(0.into())))
                .collect(),
            _ => sgs.outgoing[c.loc].clone(),
        };
        let choice = matches!(g.owner[me], Owner::Angel | Owner::Demon);
        for t in ts {
            let Some(xs) = outcomes(sgs, t, &c.x) else { return Ok(None) };
            let tgt = sgs.transitions[t].tgt;
            let mut ids = Vec::with_capacity(xs.len());
            for x in xs {
                let nc = Config { loc: tgt, x };
                let id = match index.get(&nc) {
                    Some(&k) => node_of_config[k],
                    None => {
                        if configs.len() >= limit {
                            return Ok(None);
                        }
                        let node = g.owner.len();
                        g.owner.push(Owner::Chance);
                        g.succ.push(Vec::new());
                        g.target.push(false);
                        index.insert(nc.clone(), configs.len());
                        configs.push(nc);
                        node_of_config.push(node);
                        node
                    }
                };
                ids.push(id);
            }
            if choice && ids.len() > 1 {
                let node = g.owner.len();
                g.owner.push(Owner::Chance);
                g.succ.push(ids);
                g.target.push(false);
                g.succ[me].push(node);
            } else {
                g.succ[me].extend(ids);
            }
        }
    }
    Ok(Some(g))
}

/// Explores the reachable configurations from `x₀` (up to `limit`) and solves the qualitative game.
pub fn refute_by_game(sgs: &Sgs, limit: usize) -> Result<GameVerdict> {
    let Some(g) = expand(sgs, limit)? else { return Ok(GameVerdict::Undecided) };
    let w = almost_sure_region(&g);
    Ok(if w[0] { GameVerdict::AngelWins } else { GameVerdict::AngelLoses })
}
