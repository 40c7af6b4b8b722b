//! Program generators for the hardness reductions: 3-SAT to angelic loops (with the matching witness for
//! satisfiable formulas) and linearly bounded Turing machines to deterministic counter programs.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lang::{parse_program, Program};
use crate::rational::{int, ratio, Rational};
use crate::sgs::{build_sgs, Config, LocKind, Sgs, Update};
use crate::synth::LrsmWitness;

/// A formula in conjunctive normal form with exactly three literals per clause. Literals are signed
/// variable indices starting at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cnf3 {
    pub num_vars: usize,
    pub clauses: Vec<[i32; 3]>,
}

impl Cnf3 {
    pub fn new(num_vars: usize, clauses: Vec<[i32; 3]>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Invalid("a formula needs at least one variable".into()));
        }
        for c in &clauses {
            for &l in c {
                if l == 0 || l.unsigned_abs() as usize > num_vars {
                    return Err(Error::Invalid(format!("literal {l} outside 1..={num_vars}")));
                }
            }
        }
        Ok(Cnf3 { num_vars, clauses })
    }

    /// Reads DIMACS CNF; shorter clauses are padded by repeating their last literal.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut num_vars = None;
        let mut clauses = Vec::new();
        let mut cur: Vec<i32> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 3 || f[0] != "cnf" {
                    return Err(Error::Syntax { line: ln as u32 + 1, col: 1, msg: "expected `p cnf <vars> <clauses>`".into() });
                }
                num_vars = f[1].parse::<usize>().ok();
                continue;
            }
            for tok in line.split_whitespace() {
                let l: i32 = tok
                    .parse()
                    .map_err(|_| Error::Syntax { line: ln as u32 + 1, col: 1, msg: format!("bad literal `{tok}`") })?;
                if l == 0 {
                    clauses.push(pad(&cur, ln as u32 + 1)?);
                    cur.clear();
                } else {
                    cur.push(l);
                }
            }
        }
        if !cur.is_empty() {
            clauses.push(pad(&cur, 0)?);
        }
        let n = num_vars.ok_or_else(|| Error::Invalid("missing DIMACS header".into()))?;
        Cnf3::new(n, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            s += &format!("{} {} {} 0\n", c[0], c[1], c[2]);
        }
        s
    }

    pub fn satisfied_by(&self, nu: &[bool]) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| nu[l.unsigned_abs() as usize - 1] == (l > 0)))
    }

    /// Exhaustive search, for small formulas.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.num_vars < 30);
        (0u64..1 << self.num_vars)
            .map(|bits| (0..self.num_vars).map(|i| bits >> i & 1 == 1).collect::<Vec<bool>>())
            .find(|nu| self.satisfied_by(nu))
    }
}

fn pad(lits: &[i32], line: u32) -> Result<[i32; 3]> {
    match lits {
        [] => Err(Error::Syntax { line, col: 1, msg: "empty clause".into() }),
        [a] => Ok([*a, *a, *a]),
        [a, b] => Ok([*a, *b, *b]),
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(Error::Syntax { line, col: 1, msg: "clause with more than three literals".into() }),
    }
}

fn g_text(l: i32) -> String {
    let v = l.unsigned_abs();
    if l > 0 {
        format!("x{v}")
    } else {
        format!("(1 - x{v})")
    }
}

/// The angelic loop whose LRSM existence is equivalent to satisfiability, with `0 <= xᵢ <= 1` at every
/// location.
pub fn gen_sat_program(cnf: &Cnf3) -> Result<(String, Program)> {
    let n = cnf.num_vars;
    let inv = (1..=n).map(|i| format!("x{i} >= 0 && x{i} <= 1")).collect::<Vec<_>>().join(" && ");
    let guard = cnf
        .clauses
        .iter()
        .map(|c| format!("{} + {} + {} <= 1/2", g_text(c[0]), g_text(c[1]), g_text(c[2])))
        .collect::<Vec<_>>()
        .join(" || ");
    let mut src = String::new();
    for i in 1..=n {
        src += &format!("var x{i} := 1;\n");
    }
    src += &format!("@[{inv}]\nwhile {guard} do\n");
    for i in 1..=n {
        let sep = if i < n { ";" } else { "" };
        src += &format!("  @[{inv}] if angel then @[{inv}] x{i} := 1 else @[{inv}] x{i} := 0 fi{sep}\n");
    }
    src += &format!("od\n@[{inv}]\n");
    let p = parse_program(&src)?;
    Ok((src, p))
}

struct SatLocations {
    head: usize,
    choice: Vec<usize>,
    /// `branch[i][v]` assigns `v` to `x_{i+1}`.
    branch: Vec<[usize; 2]>,
}

fn sat_locations(sgs: &Sgs, n: usize) -> Result<SatLocations> {
    let bad = || Error::Invalid("program does not have the shape of a generated 3-SAT loop".into());
    let head = sgs.l_in;
    let mut cur = sgs.successors(head).find(|t| t.tgt != sgs.l_out).ok_or_else(bad)?.tgt;
    let mut choice = Vec::new();
    let mut branch = Vec::new();
    for i in 0..n {
        if sgs.kind(cur) != LocKind::Angelic {
            return Err(bad());
        }
        choice.push(cur);
        let mut pair = [usize::MAX; 2];
        let mut next = None;
        for t in sgs.successors(cur) {
            let u = sgs.successors(t.tgt).next().ok_or_else(bad)?;
            let Update::Assign { var, rhs } = &u.update else { return Err(bad()) };
            if *var != i || !rhs.affine.is_constant() {
                return Err(bad());
            }
            let v = if rhs.affine.constant.is_zero() { 0 } else { 1 };
            pair[v] = t.tgt;
            next = Some(u.tgt);
        }
        if pair.contains(&usize::MAX) {
            return Err(bad());
        }
        branch.push(pair);
        cur = next.unwrap();
    }
    if cur != head {
        return Err(bad());
    }
    Ok(SatLocations { head, choice, branch })
}

/// The witness built from a satisfying assignment, scaled by two so that `η(ℓ_out) = −1`, with `ε = 1`.
pub fn gen_sat_witness(cnf: &Cnf3, nu: &[bool], sgs: &Sgs) -> Result<LrsmWitness> {
    let n = cnf.num_vars;
    if nu.len() != n || !cnf.satisfied_by(nu) {
        return Err(Error::Invalid("assignment does not satisfy the formula".into()));
    }
    let locs = sat_locations(sgs, n)?;
    let pen = int(4 * n as i64 + 3);
    // h_{i,j} as (coefficient of x_j, constant), 1-based i
    let h = |i: usize, j: usize| -> (Rational, Rational) {
        let w = if i > j + 1 { pen.clone() } else { int(1) };
        if nu[j] {
            (-&w, w)
        } else {
            (w, int(0))
        }
    };
    let row = |i: usize, extra: Rational| -> (Vec<Rational>, Rational) {
        let mut a = vec![int(0); n];
        let mut b = extra;
        for (j, aj) in a.iter_mut().enumerate() {
            let (c, d) = h(i, j);
            *aj = c;
            b += d;
        }
        (a, b)
    };
    let nl = sgs.num_locations();
    let mut a = vec![vec![int(0); n]; nl];
    let mut b = vec![int(0); nl];
    let mut set = |l: usize, (ra, rb): (Vec<Rational>, Rational)| {
        a[l] = ra.iter().map(|v| v * int(2)).collect();
        b[l] = rb * int(2);
    };
    for i in 1..=n + 1 {
        let l = if i == n + 1 { locs.head } else { locs.choice[i - 1] };
        set(l, row(i, int(2 * (n + 1 - i) as i64)));
    }
    for i in 1..=n {
        let v = nu[i - 1] as usize;
        set(locs.branch[i - 1][v], row(i, int(2 * (n - i) as i64 + 1)));
        set(locs.branch[i - 1][1 - v], (vec![int(0); n], &pen * int(n as i64) + int(2 * n as i64 + 1)));
    }
    set(sgs.l_out, (vec![int(0); n], ratio(-1, 2)));
    Ok(LrsmWitness { a, b, eps: int(1), k: int(-1), kprime: int(-1), diff_bounds: None, bernstein: None })
}

/// One transition of a Turing machine: in `state` reading `read`, go to `next`, write `write`, move by `shift`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmMove {
    pub state: usize,
    pub read: usize,
    pub next: usize,
    pub write: usize,
    pub shift: i8,
}

/// A deterministic machine using at most `space·|w|` cells. State 0 is initial, symbol 0 is blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TmSpec {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub moves: Vec<TmMove>,
    pub accepting: usize,
    pub input: Vec<usize>,
    pub space: usize,
    pub c: u64,
    /// Bound `J` on the length of accepting runs; defaults to the number of configurations.
    pub steps_bound: Option<BigInt>,
    /// Initial value of the master counter; defaults to `c·J`.
    pub master: Option<BigInt>,
}

impl TmSpec {
    pub fn cells(&self) -> usize {
        self.space * self.input.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (q, s) = (self.states.len(), self.alphabet.len());
        if self.input.is_empty() {
            return Err(Error::Invalid("input word must be nonempty".into()));
        }
        if self.space == 0 || self.c == 0 {
            return Err(Error::Invalid("space coefficient and constant must be positive".into()));
        }
        if self.accepting >= q || self.input.iter().any(|&a| a >= s) {
            return Err(Error::Invalid("state or symbol out of range".into()));
        }
        for m in &self.moves {
            if m.state >= q || m.next >= q || m.read >= s || m.write >= s || !(-1..=1).contains(&m.shift) {
                return Err(Error::Invalid("transition out of range".into()));
            }
        }
        for st in (0..q).filter(|&st| st != self.accepting) {
            for a in 0..s {
                match self.moves.iter().filter(|m| m.state == st && m.read == a).count() {
                    1 => {}
                    0 => return Err(Error::Invalid(format!("no transition for ({}, {})", self.states[st], self.alphabet[a]))),
                    _ => return Err(Error::Invalid(format!("machine is not deterministic at ({}, {})", self.states[st], self.alphabet[a]))),
                }
            }
        }
        Ok(())
    }

    /// `|Q|·cells·|Σ|^cells`, the number of configurations.
    pub fn default_steps_bound(&self) -> BigInt {
        let cells = self.cells();
        BigInt::from(self.states.len()) * BigInt::from(cells) * num_traits::pow(BigInt::from(self.alphabet.len()), cells)
    }

    /// Runs the machine for at most `limit` steps; `Some(steps)` when it accepts.
    pub fn run(&self, limit: u64) -> Option<u64> {
        let mut tape: Vec<usize> = (0..self.cells()).map(|i| self.input.get(i).copied().unwrap_or(0)).collect();
        let (mut st, mut pos) = (0usize, 0i64);
        for k in 0..=limit {
            if st == self.accepting {
                return Some(k);
            }
            let m = self.moves.iter().find(|m| m.state == st && m.read == tape[pos as usize])?;
            tape[pos as usize] = m.write;
            st = m.next;
            pos += m.shift as i64;
            if pos < 0 || pos as usize >= tape.len() {
                return None;
            }
        }
        None
    }
}

/// A generated machine program with `N = J·W`.
#[derive(Clone, Debug)]
pub struct TmProgram {
    pub source: String,
    pub program: Program,
    pub steps_bound: BigInt,
    pub steps_per_iteration: u64,
    pub n: BigInt,
}

/// The deterministic loop simulating the machine, one gadget per transition and head position.
pub fn gen_tm_program(tm: &TmSpec) -> Result<TmProgram> {
    tm.validate()?;
    let cells = tm.cells();
    let j = tm.steps_bound.clone().unwrap_or_else(|| tm.default_steps_bound());
    let master = tm.master.clone().unwrap_or_else(|| &j * BigInt::from(tm.c));
    let mut src = format!("var m := {master};\nvar r := 1;\nvar hd := 1;\nvar stp := 0;\n");
    for q in 0..tm.states.len() {
        src += &format!("var s{q} := {};\n", (q == 0) as u8);
    }
    for i in 1..=cells {
        let sym = tm.input.get(i - 1).copied().unwrap_or(0);
        for a in 0..tm.alphabet.len() {
            src += &format!("var c{i}_{a} := {};\n", (a == sym) as u8);
        }
    }
    src += "while m >= 1 && r >= 1 do\n  m := m - 1;\n  stp := 0";
    for d in &tm.moves {
        for i in 1..=cells {
            let shift = match d.shift {
                -1 => "hd := hd - 1",
                1 => "hd := hd + 1",
                _ => "hd := hd",
            };
            src += &format!(
                ";\n  if s{} == 1 && stp == 0 && hd == {i} && c{i}_{} == 1 then s{} := 0; s{} := 1; c{i}_{} := 0; c{i}_{} := 1; {shift}; stp := 1 else skip fi",
                d.state, d.read, d.state, d.next, d.read, d.write
            );
        }
        src += &format!(";\n  if s{} == 1 then r := 0 else skip fi", tm.accepting);
    }
    src += "\nod\n";
    let program = parse_program(&src)?;
    let sgs = build_sgs(&program);
    let w = iteration_length(tm, &sgs)?;
    Ok(TmProgram { source: src, program, n: &j * BigInt::from(w), steps_bound: j, steps_per_iteration: w })
}

/// Steps of one loop iteration in which a gadget fires, counted on the SGS.
fn iteration_length(tm: &TmSpec, sgs: &Sgs) -> Result<u64> {
    let names = &sgs.var_names;
    let idx = |name: &str| names.iter().position(|v| v == name).unwrap();
    let mut x = sgs.x0.clone();
    if let Some(d) = tm.moves.iter().find(|d| d.state != tm.accepting) {
        for q in 0..tm.states.len() {
            x[idx(&format!("s{q}"))] = int((q == d.state) as i64);
        }
        for a in 0..tm.alphabet.len() {
            x[idx(&format!("c1_{a}"))] = int((a == d.read) as i64);
        }
        x[idx("hd")] = int(1);
        x[idx("m")] = int(2);
        x[idx("r")] = int(1);
    }
    let mut c = Config { loc: sgs.l_in, x };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut never = |_: &Config, o: &[usize]| o[0];
    let mut never2 = |_: &Config, o: &[usize]| o[0];
    let mut steps = 0u64;
    loop {
        c = sgs.step(&c, &mut never, &mut never2, &mut rng)?;
        steps += 1;
        if c.loc == sgs.l_in || c.loc == sgs.l_out {
            return Ok(steps);
        }
    }
}
