//! JSON encodings. Exact values are `"num/den"` strings; floats are only used for derived tail values.

use anyhow::{anyhow, bail, Context, Result};
use lrapp_core::bounds::ConcentrationCertificate;
use lrapp_core::lang::print_pred;
use lrapp_core::lang::{Distribution, Pred};
use lrapp_core::rational::{fmt_frac, parse_rational, to_f64};
use lrapp_core::sgs::{LocKind, Sgs};
use lrapp_core::synth::LrsmWitness;
use lrapp_core::Rational;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "lrapp/v1";

pub fn frac(q: &Rational) -> Value {
    Value::String(fmt_frac(q))
}

/// `{"value": "num/den", "approx": f64}`, for quantities people read.
pub fn number(q: &Rational) -> Value {
    json!({ "value": fmt_frac(q), "approx": to_f64(q) })
}

pub fn parse_frac(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s).ok_or_else(|| anyhow!("bad rational `{s}`")),
        Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().unwrap().into())),
        other => bail!("expected a \"num/den\" string, found {other}"),
    }
}

fn loc_key(l: usize) -> String {
    format!("l{l}")
}

pub fn witness(w: &LrsmWitness) -> Value {
    let mut a = Map::new();
    let mut b = Map::new();
    for (l, (row, c)) in w.a.iter().zip(&w.b).enumerate() {
        a.insert(loc_key(l), Value::Array(row.iter().map(frac).collect()));
        b.insert(loc_key(l), frac(c));
    }
    let mut v = json!({ "a": a, "b": b, "eps": frac(&w.eps), "K": frac(&w.k), "Kprime": frac(&w.kprime) });
    if let Some((lo, hi)) = &w.diff_bounds {
        v["diff_bounds"] = json!({ "a_lo": frac(lo), "b_hi": frac(hi) });
    }
    if let Some((c, m)) = &w.bernstein {
        v["bernstein"] = json!({ "c": frac(c), "M": frac(m) });
    }
    v
}

pub fn parse_witness(sgs: &Sgs, v: &Value) -> Result<LrsmWitness> {
    let field = |k: &str| v.get(k).ok_or_else(|| anyhow!("witness lacks `{k}`"));
    let (a_map, b_map) = (field("a")?, field("b")?);
    let n = sgs.nvars();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for l in 0..sgs.num_locations() {
        let key = loc_key(l);
        let row = a_map.get(&key).and_then(Value::as_array).ok_or_else(|| anyhow!("witness lacks a[{key}]"))?;
        if row.len() != n {
            bail!("a[{key}] has {} entries, the program has {n} variables", row.len());
        }
        a.push(row.iter().map(parse_frac).collect::<Result<Vec<_>>>()?);
        b.push(parse_frac(b_map.get(&key).ok_or_else(|| anyhow!("witness lacks b[{key}]"))?)?);
    }
    let pair = |k: &str, x: &str, y: &str| -> Result<Option<(Rational, Rational)>> {
        match v.get(k) {
            None | Some(Value::Null) => Ok(None),
            Some(p) => Ok(Some((
                parse_frac(p.get(x).ok_or_else(|| anyhow!("{k} lacks {x}"))?)?,
                parse_frac(p.get(y).ok_or_else(|| anyhow!("{k} lacks {y}"))?)?,
            ))),
        }
    };
    Ok(LrsmWitness {
        a,
        b,
        eps: parse_frac(field("eps")?)?,
        k: parse_frac(field("K")?)?,
        kprime: parse_frac(field("Kprime")?)?,
        diff_bounds: pair("diff_bounds", "a_lo", "b_hi")?,
        bernstein: pair("bernstein", "c", "M")?,
    })
}

pub fn certificate(c: &ConcentrationCertificate) -> Value {
    let w = &c.witness;
    let mut v = json!({
        "kind": c.kind.name(),
        "B": frac(&c.b),
        "W0": frac(&c.w0),
        "eps": frac(&w.eps),
        "valid_from": frac(&c.valid_from),
        "c1": c.c1,
        "c2": frac(&c.c2),
    });
    if let Some((lo, hi)) = &w.diff_bounds {
        v["a_lo"] = frac(lo);
        v["b_hi"] = frac(hi);
    }
    if let Some((cc, m)) = &w.bernstein {
        v["c"] = frac(cc);
        v["M"] = frac(m);
    }
    v
}

fn distribution(d: &Distribution) -> Value {
    match d {
        Distribution::Uniform(lo, hi) => json!({ "kind": "uniform", "lo": frac(lo), "hi": frac(hi) }),
        Distribution::Discrete(vs) => json!({
            "kind": "discrete",
            "support": vs.iter().map(|(v, p)| json!([frac(v), frac(p)])).collect::<Vec<_>>(),
        }),
    }
}

pub fn sgs(s: &Sgs) -> Value {
    let locations: Vec<Value> = s
        .locations
        .iter()
        .map(|l| json!({ "id": l.id, "kind": l.kind.name(), "label": l.label }))
        .collect();
    let transitions: Vec<Value> = s
        .transitions
        .iter()
        .map(|t| {
            let guard = (s.kind(t.src) == LocKind::Deterministic && t.guard != Pred::True)
                .then(|| print_pred(&t.guard, &s.var_names));
            json!({
                "src": t.src,
                "tgt": t.tgt,
                "update": s.update_text(&t.update),
                "guard": guard,
                "prob": t.prob.as_ref().map(frac),
            })
        })
        .collect();
    json!({
        "variables": s.var_names,
        "initial": s.x0.iter().map(frac).collect::<Vec<_>>(),
        "random": s.rvars.iter().map(|(n, d)| json!({ "name": n, "distribution": distribution(d) })).collect::<Vec<_>>(),
        "locations": locations,
        "transitions": transitions,
        "l_in": s.l_in,
        "l_out": s.l_out,
    })
}

/// Reads a JSON file, naming it in errors.
pub fn read(path: &std::path::Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
