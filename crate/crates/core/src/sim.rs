//! Seeded Monte-Carlo execution under configuration-based strategies.
//!
//! Runs use a floating-point compilation of the SGS; each trial draws from its own ChaCha stream,
//! so statistics do not depend on how trials are partitioned.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lang::{AffineExpr, Distribution, Pred};
use crate::rational::{to_f64, Rational};
use crate::sgs::{LocKind, Sgs, Update};
use crate::synth::LrsmWitness;

#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    /// Moves to a successor minimising `η` at the expected image; ties go to the lowest target.
    EtaArgmin(LrsmWitness),
    EtaArgmax(LrsmWitness),
    UniformRandom,
    FirstEdge,
    /// Indices into the outgoing transitions, used cyclically per trial.
    Scripted(Vec<usize>),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::EtaArgmin(_) => "eta-argmin",
            Strategy::EtaArgmax(_) => "eta-argmax",
            Strategy::UniformRandom => "uniform",
            Strategy::FirstEdge => "first",
            Strategy::Scripted(_) => "scripted",
        }
    }
}

/// Statistics over a batch of trials. All counters are exact integers, so merging is associative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunStats {
    pub trials: u64,
    pub terminated: u64,
    pub sum_t: u128,
    pub sum_t2: u128,
    pub max_t: u64,
    pub seed: u64,
    pub step_cap: u64,
    /// Termination time of terminated trials, `T -> count`.
    pub histogram: BTreeMap<u64, u64>,
}

impl RunStats {
    pub fn empty(seed: u64, step_cap: u64) -> Self {
        RunStats { trials: 0, terminated: 0, sum_t: 0, sum_t2: 0, max_t: 0, seed, step_cap, histogram: BTreeMap::new() }
    }

    fn record(&mut self, t: Option<u64>) {
        self.trials += 1;
        if let Some(t) = t {
            self.terminated += 1;
            self.sum_t += t as u128;
            self.sum_t2 += (t as u128) * (t as u128);
            self.max_t = self.max_t.max(t);
            *self.histogram.entry(t).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &RunStats) {
        self.trials += other.trials;
        self.terminated += other.terminated;
        self.sum_t += other.sum_t;
        self.sum_t2 += other.sum_t2;
        self.max_t = self.max_t.max(other.max_t);
        for (&t, &c) in &other.histogram {
            *self.histogram.entry(t).or_default() += c;
        }
    }

    pub fn censored(&self) -> u64 {
        self.trials - self.terminated
    }

    pub fn censored_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.censored() as f64 / self.trials as f64
        }
    }

    /// Mean termination time over terminated trials.
    pub fn mean_t(&self) -> f64 {
        if self.terminated == 0 {
            return f64::NAN;
        }
        self.sum_t as f64 / self.terminated as f64
    }

    /// Sample variance of the termination time over terminated trials.
    pub fn var_t(&self) -> f64 {
        if self.terminated < 2 {
            return 0.0;
        }
        let n = self.terminated as f64;
        let mean = self.mean_t();
        ((self.sum_t2 as f64) - n * mean * mean) / (n - 1.0)
    }

    /// Number of trials with `T > n`; censored trials count for every `n` below the cap.
    pub fn tail_count(&self, n: u64) -> u64 {
        let above: u64 = self.histogram.range(n + 1..).map(|(_, c)| c).sum();
        above + self.censored()
    }

    pub fn tail_counts(&self, points: &[u64]) -> Vec<(u64, u64)> {
        points.iter().map(|&n| (n, self.tail_count(n))).collect()
    }
}

/// Empirical `P(T > n)` with its binomial standard error.
pub fn estimate_tail(stats: &RunStats, n: u64) -> Result<(f64, f64)> {
    if n > stats.step_cap {
        return Err(Error::Invalid(alloc::format!("tail point {n} beyond the step cap {}", stats.step_cap)));
    }
    if stats.trials == 0 {
        return Err(Error::Invalid("no trials".into()));
    }
    let m = stats.trials as f64;
    let p = stats.tail_count(n) as f64 / m;
    Ok((p, libm::sqrt(p * (1.0 - p) / m)))
}

#[derive(Clone, Debug)]
struct FAffine {
    coeffs: Vec<f64>,
    constant: f64,
}

impl FAffine {
    fn new(e: &AffineExpr) -> Self {
        FAffine { coeffs: e.coeffs.iter().map(to_f64).collect(), constant: to_f64(&e.constant) }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).fold(self.constant, |acc, (a, v)| acc + a * v)
    }
}

#[derive(Clone, Debug)]
enum FPred {
    True,
    False,
    Lit(FAffine, bool),
    And(Vec<FPred>),
    Or(Vec<FPred>),
    Not(Box<FPred>),
}

impl FPred {
    fn new(p: &Pred) -> Self {
        match p {
            Pred::True => FPred::True,
            Pred::False => FPred::False,
            Pred::Lit(c) => FPred::Lit(FAffine::new(&c.expr), c.strict),
            Pred::And(ps) => FPred::And(ps.iter().map(FPred::new).collect()),
            Pred::Or(ps) => FPred::Or(ps.iter().map(FPred::new).collect()),
            Pred::Not(p) => FPred::Not(Box::new(FPred::new(p))),
        }
    }

    fn eval(&self, x: &[f64]) -> bool {
        match self {
            FPred::True => true,
            FPred::False => false,
            FPred::Lit(e, strict) => {
                let v = e.eval(x);
                if *strict {
                    v < 0.0
                } else {
                    v <= 0.0
                }
            }
            FPred::And(ps) => ps.iter().all(|p| p.eval(x)),
            FPred::Or(ps) => ps.iter().any(|p| p.eval(x)),
            FPred::Not(p) => !p.eval(x),
        }
    }
}

#[derive(Clone, Debug)]
enum FDist {
    /// Values with cumulative probabilities.
    Discrete(Vec<(f64, f64)>),
    Uniform(f64, f64),
}

#[derive(Clone, Debug)]
struct FTrans {
    tgt: usize,
    /// Assigned variable, its affine part, random coefficients and the expected random contribution.
    assign: Option<(usize, FAffine, Vec<(usize, f64)>, f64)>,
    guard: FPred,
}

/// Floating-point compilation of an SGS.
#[derive(Clone, Debug)]
pub struct Machine {
    kinds: Vec<LocKind>,
    outgoing: Vec<Vec<usize>>,
    /// Cumulative branch probabilities at probabilistic locations, aligned with `outgoing`.
    cumulative: Vec<Vec<f64>>,
    trans: Vec<FTrans>,
    dists: Vec<FDist>,
    x0: Vec<f64>,
    l_in: usize,
    l_out: usize,
}

fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Machine {
    pub fn new(sgs: &Sgs) -> Self {
        let trans = sgs
            .transitions
            .iter()
            .map(|t| {
                let assign = match &t.update {
                    Update::Identity => None,
                    Update::Assign { var, rhs } => {
                        let random: Vec<(usize, f64)> = rhs.random_vars().map(|(j, c)| (j, to_f64(c))).collect();
                        let mean = rhs.random_vars().map(|(j, c)| to_f64(&(c * sgs.rvars[j].1.mean()))).sum();
                        Some((*var, FAffine::new(&rhs.affine), random, mean))
                    }
                };
                FTrans { tgt: t.tgt, assign, guard: FPred::new(&t.guard) }
            })
            .collect();
        let cumulative = sgs
            .outgoing
            .iter()
            .map(|outs| {
                let mut acc = Rational::from_integer(0.into());
                outs.iter()
                    .map(|&t| {
                        if let Some(p) = &sgs.transitions[t].prob {
                            acc += p;
                        }
                        to_f64(&acc)
                    })
                    .collect()
            })
            .collect();
        let dists = sgs
            .rvars
            .iter()
            .map(|(_, d)| match d {
                Distribution::Uniform(lo, hi) => FDist::Uniform(to_f64(lo), to_f64(hi)),
                Distribution::Discrete(vs) => {
                    let mut acc = Rational::from_integer(0.into());
                    FDist::Discrete(
                        vs.iter()
                            .filter(|(_, p)| *p > Rational::from_integer(0.into()))
                            .map(|(v, p)| {
                                acc += p;
                                (to_f64(v), to_f64(&acc))
                            })
                            .collect(),
                    )
                }
            })
            .collect();
        Machine {
            kinds: sgs.locations.iter().map(|l| l.kind).collect(),
            outgoing: sgs.outgoing.clone(),
            cumulative,
            trans,
            dists,
            x0: sgs.x0.iter().map(to_f64).collect(),
            l_in: sgs.l_in,
            l_out: sgs.l_out,
        }
    }

    fn sample(&self, j: usize, rng: &mut ChaCha8Rng) -> f64 {
        let u = uniform01(rng);
        match &self.dists[j] {
            FDist::Uniform(lo, hi) => lo + (hi - lo) * u,
            FDist::Discrete(vs) => vs.iter().find(|(_, c)| u < *c).unwrap_or(vs.last().unwrap()).0,
        }
    }

    /// The successor valuation with random variables at their means.
    fn expected_image(&self, t: usize, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(x);
        if let Some((var, aff, _, mean)) = &self.trans[t].assign {
            out[*var] = aff.eval(x) + mean;
        }
    }

    fn apply(&self, t: usize, x: &mut [f64], rng: &mut ChaCha8Rng) {
        if let Some((var, aff, random, _)) = &self.trans[t].assign {
            let mut v = aff.eval(x);
            for &(j, c) in random {
                v += c * self.sample(j, rng);
            }
            x[*var] = v;
        }
    }
}

/// A strategy compiled against a machine.
struct Player<'a> {
    strategy: &'a Strategy,
    eta: Option<(Vec<Vec<f64>>, Vec<f64>)>,
    turn: usize,
}

impl<'a> Player<'a> {
    fn new(strategy: &'a Strategy) -> Self {
        let eta = match strategy {
            Strategy::EtaArgmin(w) | Strategy::EtaArgmax(w) => {
                Some((w.a.iter().map(|r| r.iter().map(to_f64).collect()).collect(), w.b.iter().map(to_f64).collect()))
            }
            _ => None,
        };
        Player { strategy, eta, turn: 0 }
    }

    fn choose(&mut self, m: &Machine, loc: usize, x: &[f64], rng: &mut ChaCha8Rng, buf: &mut Vec<f64>) -> Result<usize> {
        let outs = &m.outgoing[loc];
        let pick = match self.strategy {
            Strategy::FirstEdge => 0,
            Strategy::UniformRandom => (rng.next_u64() % outs.len() as u64) as usize,
            Strategy::Scripted(s) => {
                if s.is_empty() {
                    return Err(Error::Invalid("empty script".into()));
                }
                let c = s[self.turn % s.len()];
                self.turn += 1;
                if c >= outs.len() {
                    return Err(Error::BadSchedulerChoice { loc, choice: c });
                }
                c
            }
            Strategy::EtaArgmin(_) | Strategy::EtaArgmax(_) => {
                let (a, b) = self.eta.as_ref().unwrap();
                let max = matches!(self.strategy, Strategy::EtaArgmax(_));
                let mut best: Option<(f64, usize, usize)> = None;
                for (i, &t) in outs.iter().enumerate() {
                    m.expected_image(t, x, buf);
                    let tgt = m.trans[t].tgt;
                    let v = a[tgt].iter().zip(buf.iter()).fold(b[tgt], |acc, (a, v)| acc + a * v);
                    let key = if max { -v } else { v };
                    let better = match best {
                        None => true,
                        Some((bv, btgt, _)) => key < bv || (key == bv && tgt < btgt),
                    };
                    if better {
                        best = Some((key, tgt, i));
                    }
                }
                best.unwrap().2
            }
        };
        Ok(outs[pick])
    }
}

/// Runs one trial; `None` when the cap was reached first.
fn trial(m: &Machine, angel: &mut Player, demon: &mut Player, cap: u64, rng: &mut ChaCha8Rng) -> Result<Option<u64>> {
    let mut x = m.x0.clone();
    let mut loc = m.l_in;
    let mut buf = Vec::with_capacity(x.len());
    angel.turn = 0;
    demon.turn = 0;
    for steps in 0..cap {
        if loc == m.l_out {
            return Ok(Some(steps));
        }
        let outs = &m.outgoing[loc];
        let t = match m.kinds[loc] {
            LocKind::Deterministic => {
                *outs.iter().find(|&&t| m.trans[t].guard.eval(&x)).ok_or(Error::NoEnabledTransition(loc))?
            }
            LocKind::Probabilistic => {
                let u = uniform01(rng);
                let i = m.cumulative[loc].iter().position(|&c| u < c).unwrap_or(outs.len() - 1);
                outs[i]
            }
            LocKind::Angelic => angel.choose(m, loc, &x, rng, &mut buf)?,
            LocKind::Demonic => demon.choose(m, loc, &x, rng, &mut buf)?,
        };
        m.apply(t, &mut x, rng);
        loc = m.trans[t].tgt;
    }
    Ok(if loc == m.l_out { Some(cap) } else { None })
}

/// Runs trials `first..first + count` of the stream family selected by `seed`.
pub fn run_range(
    m: &Machine,
    angel: &Strategy,
    demon: &Strategy,
    first: u64,
    count: u64,
    step_cap: u64,
    seed: u64,
) -> Result<RunStats> {
    if step_cap == 0 {
        return Err(Error::Invalid("step cap must be positive".into()));
    }
    let (mut a, mut d) = (Player::new(angel), Player::new(demon));
    let mut stats = RunStats::empty(seed, step_cap);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in first..first + count {
        rng.set_stream(i);
        rng.set_word_pos(0);
        stats.record(trial(m, &mut a, &mut d, step_cap, &mut rng)?);
    }
    Ok(stats)
}

pub fn run(sgs: &Sgs, angel: &Strategy, demon: &Strategy, trials: u64, step_cap: u64, seed: u64) -> Result<RunStats> {
    run_range(&Machine::new(sgs), angel, demon, 0, trials, step_cap, seed)
}

/// Default cap: `max(10⁶, 100·UB)`.
pub fn default_cap(ub: Option<&Rational>) -> u64 {
    let base = 1_000_000u64;
    match ub {
        Some(u) => base.max(libm::ceil(100.0 * to_f64(u)) as u64),
        None => base,
    }
}

/// The termination time of a deterministic program, or `None` past the cap.
pub fn deterministic_time(sgs: &Sgs, cap: u64) -> Result<Option<u64>> {
    if sgs.locations.iter().any(|l| l.kind != LocKind::Deterministic && l.id != sgs.l_out) {
        return Err(Error::Invalid("program is not deterministic".into()));
    }
    let stats = run(sgs, &Strategy::FirstEdge, &Strategy::FirstEdge, 1, cap, 0)?;
    Ok(stats.histogram.keys().next().copied())
}
