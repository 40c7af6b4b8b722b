//! JSON description of a Turing machine for `gen tm`.

use anyhow::{anyhow, bail, Result};
use lrapp_core::reductions::{TmMove, TmSpec};
use num_bigint::BigInt;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmFile {
    /// The first state is initial.
    pub states: Vec<String>,
    /// The first symbol is the blank.
    pub alphabet: Vec<String>,
    pub transitions: Vec<MoveFile>,
    pub accepting: String,
    /// Symbols of the input word, or a string of one-character symbols.
    pub input: Input,
    pub space: usize,
    pub c: u64,
    #[serde(default)]
    pub steps_bound: Option<String>,
    #[serde(default)]
    pub master: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Input {
    Word(String),
    Symbols(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveFile {
    pub state: String,
    pub read: String,
    pub next: String,
    pub write: String,
    /// `L`, `R` or `S`.
    #[serde(rename = "move")]
    pub shift: String,
}

fn index(names: &[String], name: &str, what: &str) -> Result<usize> {
    names.iter().position(|n| n == name).ok_or_else(|| anyhow!("unknown {what} `{name}`"))
}

fn big(s: &Option<String>, what: &str) -> Result<Option<BigInt>> {
    s.as_ref().map(|t| t.trim().parse::<BigInt>().map_err(|_| anyhow!("{what} must be an integer, got `{t}`"))).transpose()
}

impl TmFile {
    pub fn to_spec(&self) -> Result<TmSpec> {
        let moves = self
            .transitions
            .iter()
            .map(|m| {
                let shift = match m.shift.as_str() {
                    "L" | "-1" => -1,
                    "R" | "1" | "+1" => 1,
                    "S" | "N" | "0" => 0,
                    other => bail!("move must be L, R or S, got `{other}`"),
                };
                Ok(TmMove {
                    state: index(&self.states, &m.state, "state")?,
                    read: index(&self.alphabet, &m.read, "symbol")?,
                    next: index(&self.states, &m.next, "state")?,
                    write: index(&self.alphabet, &m.write, "symbol")?,
                    shift,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let input = match &self.input {
            Input::Word(w) => w.chars().map(|c| index(&self.alphabet, &c.to_string(), "symbol")).collect::<Result<Vec<_>>>()?,
            Input::Symbols(s) => s.iter().map(|c| index(&self.alphabet, c, "symbol")).collect::<Result<Vec<_>>>()?,
        };
        let spec = TmSpec {
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            moves,
            accepting: index(&self.states, &self.accepting, "state")?,
            input,
            space: self.space,
            c: self.c,
            steps_bound: big(&self.steps_bound, "steps_bound")?,
            master: big(&self.master, "master")?,
        };
        spec.validate()?;
        Ok(spec)
    }
}
