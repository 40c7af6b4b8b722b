//! Subcommand implementations. Each returns a JSON value, a plain-text rendering and an exit code.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lrapp_core::approx::approximate_et;
use lrapp_core::bounds::{bernstein_certificate, concentration_b, thr_upper, ConcentrationCertificate};
use lrapp_core::lang::{parse_program, Program};
use lrapp_core::rational::{fmt_short, parse_rational, to_f64};
use lrapp_core::reductions::{gen_sat_program, gen_sat_witness, gen_tm_program, Cnf3};
use lrapp_core::sgs::{build_sgs, Invariant, Sgs};
use lrapp_core::sim::{self, default_cap, estimate_tail, Machine, RunStats, Strategy};
use lrapp_core::synth::{
    check_lrsm, is_incremental, optimize_ub, synthesize, LrsmWitness, Outcome, Refutation, SearchOptions,
};
use lrapp_core::{Error, Rational};
use serde_json::{json, Value};

use crate::json;

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;

#[derive(Clone, Debug)]
pub struct Global {
    pub seed: u64,
    pub threads: usize,
}

impl Default for Global {
    fn default() -> Self {
        Global { seed: 0, threads: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub json: Value,
    pub text: String,
    pub code: i32,
}

impl Report {
    fn new(command: &str, mut body: Value, text: String, code: i32) -> Self {
        let obj = body.as_object_mut().expect("report body is an object");
        obj.insert("schema".into(), json::SCHEMA.into());
        obj.insert("command".into(), command.into());
        Report { json: body, text, code }
    }
}

/// A parsed program with its SGS and elaborated invariant.
pub struct Loaded {
    pub id: String,
    pub program: Program,
    pub sgs: Sgs,
    pub inv: Invariant,
}

/// Applies `--init`: either positional values `5,10` or assignments `x=5,y=10`.
pub fn apply_init(sgs: &mut Sgs, spec: &str) -> Result<()> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let value = |s: &str| parse_rational(s).ok_or_else(|| anyhow!("bad initial value `{s}`"));
    if parts.iter().all(|p| p.contains('=')) {
        for p in parts {
            let (name, v) = p.split_once('=').unwrap();
            let i = sgs.var_names.iter().position(|n| n == name.trim()).ok_or_else(|| anyhow!("no variable `{}`", name.trim()))?;
            sgs.x0[i] = value(v)?;
        }
    } else {
        if parts.len() != sgs.nvars() {
            bail!("--init gives {} values, the program has {} variables", parts.len(), sgs.nvars());
        }
        for (i, p) in parts.iter().enumerate() {
            sgs.x0[i] = value(p)?;
        }
    }
    Ok(())
}

pub fn load(path: &Path, init: Option<&str>) -> Result<Loaded> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let program = parse_program(&src).map_err(|e| anyhow!("{}:{e}", path.display()))?;
    let mut sgs = build_sgs(&program);
    if let Some(init) = init {
        apply_init(&mut sgs, init)?;
    }
    let inv = Invariant::elaborate(&sgs).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    if !inv.holds(sgs.l_in, &sgs.x0) {
        bail!("{}: the initial valuation violates the invariant at the entry location", path.display());
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Loaded { id, program, sgs, inv })
}

fn refutation_name(r: &Refutation) -> &'static str {
    match r {
        Refutation::Lp => "constraints infeasible",
        Refutation::LinearPart => "linear part infeasible",
        Refutation::Game => "angel cannot force almost-sure termination",
    }
}

/// Synthesis followed by upper-bound optimization.
pub struct Synthesis {
    pub outcome: Outcome,
    pub best: Option<(LrsmWitness, Rational)>,
}

pub fn synthesize_best(l: &Loaded, opts: &SearchOptions) -> Result<Synthesis> {
    let (sys, outcome) = synthesize(&l.sgs, &l.inv, opts)?;
    let best = match &outcome {
        Outcome::Found { ts, .. } => optimize_ub(&sys, &l.sgs, &l.inv, ts)?,
        _ => None,
    };
    Ok(Synthesis { outcome, best })
}

/// Reports transitions that may leave the annotated invariants; bounds then hold only relative to the annotations.
fn inductiveness(l: &Loaded, body: &mut Value, text: &mut String) -> Result<()> {
    let gaps = l.inv.non_inductive(&l.sgs)?;
    body["invariants_inductive"] = gaps.is_empty().into();
    if !gaps.is_empty() {
        let edges: Vec<Value> = gaps
            .iter()
            .map(|&id| {
                let t = &l.sgs.transitions[id];
                json!({ "src": t.src, "tgt": t.tgt })
            })
            .collect();
        let names: Vec<String> = gaps.iter().map(|&id| format!("l{} -> l{}", l.sgs.transitions[id].src, l.sgs.transitions[id].tgt)).collect();
        *text += &format!("warning: annotations not shown inductive along {}\n", names.join(", "));
        body["non_inductive"] = edges.into();
    }
    Ok(())
}

fn verdict(out: &Outcome) -> (&'static str, i32) {
    match out {
        Outcome::Found { .. } => ("yes", EXIT_YES),
        Outcome::Infeasible(_) => ("no", EXIT_NO),
        Outcome::Unknown { .. } => ("unknown", EXIT_UNKNOWN),
    }
}

fn outcome_fields(out: &Outcome, body: &mut Value, text: &mut String) {
    let (v, _) = verdict(out);
    body["realizable"] = v.into();
    *text += &format!("realizable: {v}\n");
    match out {
        Outcome::Infeasible(r) => {
            body["refutation"] = refutation_name(r).into();
            *text += &format!("reason: {}\n", refutation_name(r));
        }
        Outcome::Unknown { tried } => {
            body["tried"] = (*tried).into();
            *text += &format!("angelic search exhausted after {tried} candidate weightings\n");
        }
        Outcome::Found { .. } => {}
    }
}

fn two(q: &Rational) -> String {
    format!("{:.2}", to_f64(q))
}

#[derive(Clone, Debug, Default)]
pub struct AnalyzeOptions {
    pub init: Option<String>,
    pub no_bound: bool,
    pub bernstein: bool,
    pub approx_delta: Option<Rational>,
    pub simulate: Option<u64>,
}

pub fn analyze(path: &Path, o: &AnalyzeOptions, g: &Global) -> Result<Report> {
    let l = load(path, o.init.as_deref())?;
    let opts = SearchOptions::default();
    let s = synthesize_best(&l, &opts)?;
    let mut body = json!({ "program": l.id, "initial": l.sgs.x0.iter().map(json::frac).collect::<Vec<_>>() });
    let mut text = format!("program: {}\n", l.id);
    outcome_fields(&s.outcome, &mut body, &mut text);
    inductiveness(&l, &mut body, &mut text)?;
    let code = verdict(&s.outcome).1;
    let Some((w, ub)) = &s.best else {
        return Ok(Report::new("analyze", body, text, code));
    };
    body["witness"] = json::witness(w);
    body["UB"] = json::number(ub);
    text += &format!("UB: {} ({})\n", two(ub), fmt_short(ub));
    if !o.no_bound {
        match concentration_b(&l.sgs, &l.inv, &opts) {
            Ok(cert) => {
                body["B"] = json::number(&cert.b);
                body["bounded"] = true.into();
                body["certificate"] = json::certificate(&cert);
                text += &format!("B: {} ({})\n", two(&cert.b), fmt_short(&cert.b));
            }
            Err(Error::NoBoundedWitness) => {
                body["B"] = Value::Null;
                body["bounded"] = false.into();
                text += "B: none (no bounded witness)\n";
            }
            Err(e) => return Err(e.into()),
        }
    }
    if o.bernstein {
        if is_incremental(&l.sgs) {
            match bernstein_certificate(&l.sgs, &l.inv, &opts) {
                Ok(c) => {
                    text += &format!("Bernstein: B {} c2 {}\n", two(&c.b), fmt_short(&c.c2));
                    body["bernstein"] = json::certificate(&c);
                }
                Err(Error::NoBoundedWitness) => body["bernstein"] = Value::Null,
                Err(e) => return Err(e.into()),
            }
        } else {
            body["bernstein"] = Value::Null;
            text += "Bernstein: not applicable (updates are not increments)\n";
        }
    }
    if let Some(delta) = &o.approx_delta {
        let r = approx_report(&l, delta, 10_000_000, None, &opts)?;
        text += &r.text;
        body["approx"] = r.json;
    }
    if let Some(trials) = o.simulate {
        let angel = Strategy::EtaArgmin(w.clone());
        let demon = Strategy::EtaArgmax(w.clone());
        let stats = simulate_parallel(&l.sgs, &angel, &demon, trials, default_cap(Some(ub)), g)?;
        text += &format!(
            "simulation: mean T {:.4} over {} runs ({} censored), at most UB: {}\n",
            stats.mean_t(),
            stats.trials,
            stats.censored(),
            stats.mean_t() <= to_f64(ub)
        );
        body["simulation"] = stats_json(&stats, &[]);
    }
    Ok(Report::new("analyze", body, text, code))
}

pub fn synth(path: &Path, init: Option<&str>) -> Result<Report> {
    let l = load(path, init)?;
    let s = synthesize_best(&l, &SearchOptions::default())?;
    let mut body = json!({ "program": l.id });
    let mut text = format!("program: {}\n", l.id);
    outcome_fields(&s.outcome, &mut body, &mut text);
    inductiveness(&l, &mut body, &mut text)?;
    if let Outcome::Found { ts, .. } = &s.outcome {
        body["angelic_weights"] = ts.iter().map(json::frac).collect::<Vec<_>>().into();
    }
    if let Some((w, ub)) = &s.best {
        body["witness"] = json::witness(w);
        body["UB"] = json::number(ub);
        text += &format!("UB: {} ({})\n", two(ub), fmt_short(ub));
        text += &witness_text(&l.sgs, w);
    }
    Ok(Report::new("synth", body, text, verdict(&s.outcome).1))
}

fn witness_text(sgs: &Sgs, w: &LrsmWitness) -> String {
    let mut s = format!("eps {}  K {}  K' {}\n", fmt_short(&w.eps), fmt_short(&w.k), fmt_short(&w.kprime));
    for l in 0..sgs.num_locations() {
        let mut terms: Vec<String> = w.a[l]
            .iter()
            .zip(&sgs.var_names)
            .filter(|(a, _)| **a != Rational::from_integer(0.into()))
            .map(|(a, n)| format!("{}*{n}", fmt_short(a)))
            .collect();
        terms.push(fmt_short(&w.b[l]));
        s += &format!("  eta(l{l}) = {}\n", terms.join(" + "));
    }
    s
}

pub fn check(path: &Path, witness: &Path, init: Option<&str>) -> Result<Report> {
    let l = load(path, init)?;
    // Accepts a bare witness or a whole `synth --json` report.
    let v = json::read(witness)?;
    let w = json::parse_witness(&l.sgs, v.get("witness").unwrap_or(&v))?;
    let rep = check_lrsm(&l.sgs, &l.inv, &w)?;
    let items: Vec<Value> = rep
        .items
        .iter()
        .map(|i| json!({ "loc": i.loc, "condition": i.condition, "ok": i.ok, "worst": i.worst.as_ref().map(json::frac) }))
        .collect();
    let mut text = String::new();
    for i in rep.failures() {
        let worst = i.worst.as_ref().map(fmt_short).unwrap_or_else(|| "unbounded".into());
        text += &format!("FAIL l{}: {} (worst {worst})\n", i.loc, i.condition);
    }
    text += &format!("{} of {} conditions hold\n", rep.items.iter().filter(|i| i.ok).count(), rep.items.len());
    let body = json!({ "program": l.id, "ok": rep.ok(), "items": items });
    Ok(Report::new("check", body, text, if rep.ok() { EXIT_YES } else { EXIT_NO }))
}

#[derive(Clone, Debug)]
pub struct BoundOptions {
    pub init: Option<String>,
    pub bernstein: bool,
    pub x: Vec<u64>,
    pub curve_to: Option<u64>,
    pub steps: u64,
    pub csv: Option<PathBuf>,
}

pub fn curve_csv(curve: &[(u64, f64)]) -> String {
    let mut s = String::from("n,bound\n");
    for (n, b) in curve {
        s += &format!("{n},{b:e}\n");
    }
    s
}

pub fn bound(path: &Path, o: &BoundOptions) -> Result<Report> {
    let l = load(path, o.init.as_deref())?;
    let opts = SearchOptions::default();
    let cert: ConcentrationCertificate = match if o.bernstein {
        if !is_incremental(&l.sgs) {
            bail!("Bernstein bounds need every update to be an increment");
        }
        bernstein_certificate(&l.sgs, &l.inv, &opts)
    } else {
        concentration_b(&l.sgs, &l.inv, &opts)
    } {
        Ok(c) => c,
        Err(Error::NoBoundedWitness) => {
            let body = json!({ "program": l.id, "bounded": false });
            return Ok(Report::new("bound", body, "no bounded witness\n".into(), EXIT_NO));
        }
        Err(e) => return Err(e.into()),
    };
    let b = lrapp_core::bounds::ceil_u64(&cert.b);
    let to = o.curve_to.unwrap_or(4 * b.max(1));
    let curve = cert.curve(to, o.steps);
    let csv = curve_csv(&curve);
    if let Some(p) = &o.csv {
        std::fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut thr = Vec::new();
    let mut text = format!(
        "{} certificate: B {} (valid from {}), c1 {:.6}, c2 {}\n",
        cert.kind.name(),
        two(&cert.b),
        fmt_short(&cert.valid_from),
        cert.c1,
        fmt_short(&cert.c2)
    );
    for &x in &o.x {
        let t = thr_upper(&l.sgs, &l.inv, x, &opts)?;
        text += &format!("P(T > {x}) <= {:e}\n", t.bound);
        thr.push(json!({ "x": x, "bound": t.bound, "margin": t.margin.as_ref().map(json::frac) }));
    }
    if o.csv.is_none() {
        text += &csv;
    }
    let body = json!({
        "program": l.id,
        "bounded": true,
        "certificate": json::certificate(&cert),
        "curve": curve.iter().map(|(n, v)| json!([n, v])).collect::<Vec<_>>(),
        "thresholds": thr,
    });
    Ok(Report::new("bound", body, text, EXIT_YES))
}

fn approx_report(l: &Loaded, delta: &Rational, max_nodes: usize, force_n: Option<usize>, opts: &SearchOptions) -> Result<Report> {
    let r = match approximate_et(&l.sgs, &l.inv, delta, max_nodes, force_n, opts) {
        Ok(r) => r,
        Err(Error::NoBoundedWitness) => {
            let body = json!({ "program": l.id, "value": null, "bounded": false });
            return Ok(Report::new("approx", body, "no bounded witness\n".into(), EXIT_NO));
        }
        Err(e) => return Err(e.into()),
    };
    let (lo, hi) = &r.bracket;
    let mut text = match &r.value {
        Some(v) => format!("expected termination time ~ {:.6} (n = {})\n", to_f64(v), r.n_used),
        None => format!(
            "node limit reached: n = {} of {} required, value in [{:.6}, {:.6}]\n",
            r.n_used,
            r.n_required,
            to_f64(lo),
            to_f64(hi)
        ),
    };
    text += &format!("bracket [{:.6}, {:.6}], B {}\n", to_f64(lo), to_f64(hi), two(&r.certificate.b));
    let body = json!({
        "program": l.id,
        "value": r.value.as_ref().map(json::frac),
        "value_approx": r.value.as_ref().map(to_f64),
        "n": r.n_used,
        "n_required": r.n_required,
        "B": json::frac(&r.certificate.b),
        "bracket": [json::frac(lo), json::frac(hi)],
        "bracket_approx": [to_f64(lo), to_f64(hi)],
        "certificate": json::certificate(&r.certificate),
    });
    let code = if r.value.is_some() { EXIT_YES } else { EXIT_UNKNOWN };
    Ok(Report::new("approx", body, text, code))
}

pub fn approx(path: &Path, init: Option<&str>, delta: &Rational, max_nodes: usize, force_n: Option<usize>) -> Result<Report> {
    let l = load(path, init)?;
    approx_report(&l, delta, max_nodes, force_n, &SearchOptions::default())
}

/// Trials per work unit; fixed so the split does not depend on the thread count.
const CHUNK: u64 = 4096;

pub fn simulate_parallel(sgs: &Sgs, angel: &Strategy, demon: &Strategy, trials: u64, cap: u64, g: &Global) -> Result<RunStats> {
    let m = Machine::new(sgs);
    let chunks: Vec<(u64, u64)> = (0..trials.div_ceil(CHUNK)).map(|i| (i * CHUNK, CHUNK.min(trials - i * CHUNK))).collect();
    let threads = g.threads.max(1).min(chunks.len().max(1));
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Vec<Result<Vec<(usize, RunStats)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(&(first, count)) = chunks.get(i) else { break };
                        mine.push((i, sim::run_range(&m, angel, demon, first, count, cap, g.seed)?));
                    }
                    Ok(mine)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
    });
    let mut parts = Vec::new();
    for r in results {
        parts.extend(r?);
    }
    parts.sort_by_key(|(i, _)| *i);
    let mut total = RunStats::empty(g.seed, cap);
    for (_, p) in &parts {
        total.merge(p);
    }
    Ok(total)
}

pub fn stats_json(s: &RunStats, points: &[u64]) -> Value {
    let tail: Vec<Value> = points
        .iter()
        .filter_map(|&n| estimate_tail(s, n).ok().map(|(p, se)| json!({ "n": n, "p": p, "stderr": se })))
        .collect();
    let stderr = if s.terminated > 0 { (s.var_t() / s.terminated as f64).sqrt() } else { f64::NAN };
    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    json!({
        "trials": s.trials,
        "terminated": s.terminated,
        "censored": s.censored(),
        "mean_T": finite(s.mean_t()),
        "var_T": finite(s.var_t()),
        "stderr": finite(stderr),
        "max_T": s.max_t,
        "seed": s.seed,
        "cap": s.step_cap,
        "tail": tail,
    })
}

/// Parses `eta-min`, `eta-max`, `uniform`, `first` or `script:0,1,...`.
pub fn parse_strategy(text: &str, witness: Option<&LrsmWitness>) -> Result<Strategy> {
    let need = || witness.cloned().ok_or_else(|| anyhow!("strategy `{text}` needs a witness, and none was found"));
    Ok(match text {
        "eta-min" => Strategy::EtaArgmin(need()?),
        "eta-max" => Strategy::EtaArgmax(need()?),
        "uniform" => Strategy::UniformRandom,
        "first" => Strategy::FirstEdge,
        _ => match text.strip_prefix("script:") {
            Some(list) => Strategy::Scripted(
                list.split(',').map(|c| c.trim().parse::<usize>().map_err(|_| anyhow!("bad script entry `{c}`"))).collect::<Result<_>>()?,
            ),
            None => bail!("unknown strategy `{text}` (eta-min, eta-max, uniform, first, script:i,j,...)"),
        },
    })
}

#[derive(Clone, Debug)]
pub struct SimulateOptions {
    pub init: Option<String>,
    pub trials: u64,
    pub cap: Option<u64>,
    pub angel: String,
    pub demon: String,
    pub witness: Option<PathBuf>,
    pub tail: Vec<u64>,
    pub csv: Option<PathBuf>,
}

pub fn simulate(path: &Path, o: &SimulateOptions, g: &Global) -> Result<Report> {
    let l = load(path, o.init.as_deref())?;
    let uses_eta = [&o.angel, &o.demon].iter().any(|s| s.starts_with("eta"));
    let (witness, ub) = match (&o.witness, uses_eta) {
        (Some(p), _) => (Some(json::parse_witness(&l.sgs, &json::read(p)?)?), None),
        (None, true) => match synthesize_best(&l, &SearchOptions::default())?.best {
            Some((w, ub)) => (Some(w), Some(ub)),
            None => (None, None),
        },
        (None, false) => (None, None),
    };
    let angel = parse_strategy(&o.angel, witness.as_ref())?;
    let demon = parse_strategy(&o.demon, witness.as_ref())?;
    let cap = o.cap.unwrap_or_else(|| default_cap(ub.as_ref()));
    let stats = simulate_parallel(&l.sgs, &angel, &demon, o.trials, cap, g)?;
    let mut points = o.tail.clone();
    if points.is_empty() {
        points = tail_grid(&stats);
    }
    if let Some(p) = &o.csv {
        let mut s = String::from("n,p,stderr\n");
        for n in tail_grid(&stats) {
            let (pp, se) = estimate_tail(&stats, n)?;
            s += &format!("{n},{pp:e},{se:e}\n");
        }
        std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut text = format!(
        "{} trials, {} terminated, {} censored at {cap}\nmean T {:.4} (stderr {:.4}), max T {}\n",
        stats.trials,
        stats.terminated,
        stats.censored(),
        stats.mean_t(),
        (stats.var_t() / stats.terminated.max(1) as f64).sqrt(),
        stats.max_t
    );
    for &n in &o.tail {
        if let Ok((p, se)) = estimate_tail(&stats, n) {
            text += &format!("P(T > {n}) ~ {p:.6} +- {se:.6}\n");
        }
    }
    let mut body = json!({ "program": l.id, "angel": angel.name(), "demon": demon.name() });
    body["stats"] = stats_json(&stats, &points);
    Ok(Report::new("simulate", body, text, EXIT_YES))
}

/// About twenty evenly spaced points up to the largest observed time.
fn tail_grid(s: &RunStats) -> Vec<u64> {
    let top = s.max_t.min(s.step_cap);
    let step = (top / 20).max(1);
    (0..=top).step_by(step as usize).collect()
}

pub fn gen_sat(cnf_path: &Path, assignment: Option<&str>, witness_out: Option<&Path>) -> Result<Report> {
    let text = std::fs::read_to_string(cnf_path).with_context(|| format!("reading {}", cnf_path.display()))?;
    let cnf = Cnf3::from_dimacs(&text).map_err(|e| anyhow!("{}: {e}", cnf_path.display()))?;
    let (src, program) = gen_sat_program(&cnf)?;
    let nu: Option<Vec<bool>> = match assignment {
        Some(a) => {
            let bits: Vec<bool> = a
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|b| match b {
                    "1" | "true" => Ok(true),
                    "0" | "false" => Ok(false),
                    _ => Err(anyhow!("bad assignment entry `{b}`")),
                })
                .collect::<Result<_>>()?;
            Some(bits)
        }
        None if cnf.num_vars <= 24 => cnf.brute_force(),
        None => None,
    };
    let mut body = json!({ "program": src, "variables": cnf.num_vars, "clauses": cnf.clauses.len() });
    if assignment.is_none() && cnf.num_vars <= 24 {
        body["satisfiable"] = nu.is_some().into();
    }
    if let Some(nu) = &nu {
        let sgs = build_sgs(&program);
        let w = gen_sat_witness(&cnf, nu, &sgs)?;
        body["assignment"] = nu.iter().map(|&b| b as u8).collect::<Vec<_>>().into();
        body["witness"] = json::witness(&w);
        if let Some(p) = witness_out {
            std::fs::write(p, serde_json::to_string_pretty(&json::witness(&w))?).with_context(|| format!("writing {}", p.display()))?;
        }
    }
    Ok(Report::new("gen-sat", body, src, EXIT_YES))
}

pub fn gen_tm(spec_path: &Path) -> Result<Report> {
    let file: crate::tm::TmFile = serde_json::from_value(json::read(spec_path)?).with_context(|| format!("in {}", spec_path.display()))?;
    let spec = file.to_spec()?;
    let g = gen_tm_program(&spec)?;
    let body = json!({
        "program": g.source,
        "N": g.n.to_string(),
        "J": g.steps_bound.to_string(),
        "W": g.steps_per_iteration,
    });
    Ok(Report::new("gen-tm", body, g.source, EXIT_YES))
}

pub fn dump_sgs(path: &Path, init: Option<&str>) -> Result<Report> {
    let l = load(path, init)?;
    let mut body = json::sgs(&l.sgs);
    body["program"] = l.id.clone().into();
    body["dot"] = l.sgs.to_dot().into();
    Ok(Report::new("dump-sgs", body, l.sgs.to_dot(), EXIT_YES))
}
