use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lrapp::commands::{self, AnalyzeOptions, BoundOptions, Global, Report, SimulateOptions, EXIT_ERROR, EXIT_TIMEOUT};
use lrapp_core::rational::parse_rational;
use lrapp_core::Rational;

#[derive(Parser)]
#[command(name = "lrapp", version, about = "Termination analysis for affine probabilistic programs with angelic and demonic choice")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Base seed for simulation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for simulation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Wall-clock limit in seconds; exit code 4 when exceeded.
    #[arg(long, global = true)]
    timeout: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide LRSM realizability and report UB and B.
    Analyze {
        file: PathBuf,
        /// Initial values: `5,10` or `x=5,y=10`.
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        no_bound: bool,
        #[arg(long)]
        bernstein: bool,
        /// Also approximate the expected time within this additive error.
        #[arg(long, value_name = "DELTA")]
        approx: Option<String>,
        /// Also simulate this many runs under the witness strategies.
        #[arg(long, value_name = "TRIALS")]
        simulate: Option<u64>,
    },
    /// Synthesize a witness with the optimal upper bound and print it.
    Synth {
        file: PathBuf,
        #[arg(long)]
        init: Option<String>,
    },
    /// Check a witness file against a program.
    Check {
        file: PathBuf,
        #[arg(long)]
        witness: PathBuf,
        #[arg(long)]
        init: Option<String>,
    },
    /// Concentration certificate and tail curve.
    Bound {
        file: PathBuf,
        #[arg(long)]
        init: Option<String>,
        #[arg(long, value_enum, default_value_t = Kind::Hoeffding)]
        kind: Kind,
        /// Thresholds for P(T > x) bounds, comma separated.
        #[arg(long, value_delimiter = ',')]
        x: Vec<u64>,
        #[arg(long)]
        curve_to: Option<u64>,
        #[arg(long, default_value_t = 50)]
        steps: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Approximate the optimal expected termination time.
    Approx {
        file: PathBuf,
        #[arg(long)]
        init: Option<String>,
        #[arg(long, default_value = "0.05")]
        delta: String,
        #[arg(long, default_value_t = 10_000_000)]
        max_nodes: usize,
        /// Unfold exactly this deep instead of the certified depth.
        #[arg(long)]
        force_n: Option<usize>,
    },
    /// Monte-Carlo simulation under chosen strategies.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        init: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        cap: Option<u64>,
        /// eta-min, eta-max, uniform, first or script:i,j,...
        #[arg(long, default_value = "eta-min")]
        angel: String,
        #[arg(long, default_value = "eta-max")]
        demon: String,
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        tail: Vec<u64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Generate programs from reductions.
    Gen {
        #[command(subcommand)]
        what: Gen,
    },
    /// Print the stochastic game structure.
    DumpSgs {
        file: PathBuf,
        #[arg(long)]
        init: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
    },
}

#[derive(Subcommand)]
enum Gen {
    /// Program from a 3-CNF formula in DIMACS format.
    Sat {
        #[arg(long)]
        cnf: PathBuf,
        /// Satisfying assignment as 0/1 values, e.g. `1,0,1`.
        #[arg(long)]
        assignment: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Program from a space-bounded Turing machine description (JSON).
    Tm {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Hoeffding,
    Bernstein,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Dot,
    Json,
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).ok_or_else(|| anyhow!("bad number `{s}`"))
}

/// Runs the command; returns the report plus whether only the program text should be printed.
fn execute(cmd: Cmd, g: &Global) -> Result<(Report, Option<PathBuf>, bool)> {
    Ok(match cmd {
        Cmd::Analyze { file, init, no_bound, bernstein, approx, simulate } => {
            let approx_delta = approx.as_deref().map(rational).transpose()?;
            let o = AnalyzeOptions { init, no_bound, bernstein, approx_delta, simulate };
            (commands::analyze(&file, &o, g)?, None, false)
        }
        Cmd::Synth { file, init } => (commands::synth(&file, init.as_deref())?, None, false),
        Cmd::Check { file, witness, init } => (commands::check(&file, &witness, init.as_deref())?, None, false),
        Cmd::Bound { file, init, kind, x, curve_to, steps, csv } => {
            let o = BoundOptions { init, bernstein: matches!(kind, Kind::Bernstein), x, curve_to, steps, csv };
            (commands::bound(&file, &o)?, None, false)
        }
        Cmd::Approx { file, init, delta, max_nodes, force_n } => {
            (commands::approx(&file, init.as_deref(), &rational(&delta)?, max_nodes, force_n)?, None, false)
        }
        Cmd::Simulate { file, init, trials, cap, angel, demon, witness, tail, csv } => {
            let o = SimulateOptions { init, trials, cap, angel, demon, witness, tail, csv };
            (commands::simulate(&file, &o, g)?, None, false)
        }
        Cmd::Gen { what: Gen::Sat { cnf, assignment, out, witness_out } } => {
            (commands::gen_sat(&cnf, assignment.as_deref(), witness_out.as_deref())?, out, true)
        }
        Cmd::Gen { what: Gen::Tm { spec, out } } => (commands::gen_tm(&spec)?, out, true),
        Cmd::DumpSgs { file, init, format } => {
            let mut r = commands::dump_sgs(&file, init.as_deref())?;
            if format == Format::Json {
                r.text = serde_json::to_string_pretty(&r.json)?;
            }
            (r, None, false)
        }
    })
}

fn emit(report: &Report, out: Option<PathBuf>, program_only: bool, json: bool) -> Result<()> {
    if let Some(p) = out {
        std::fs::write(&p, &report.text).map_err(|e| anyhow!("writing {}: {e}", p.display()))?;
        if !json {
            return Ok(());
        }
    }
    let mut body = if json { serde_json::to_string_pretty(&report.json)? } else { report.text.clone() };
    if (json || !program_only) && !body.ends_with('\n') {
        body.push('\n');
    }
    // A closed pipe (e.g. `| head`) is not an error.
    match std::io::stdout().lock().write_all(body.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(anyhow!("writing output: {e}")),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    // Usage errors share the error code; clap's own code 2 would read as "unknown".
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let g = Global { seed: cli.seed, threads: cli.threads.max(1) };
    let json = cli.json;
    let (tx, rx) = mpsc::channel();
    let cmd = cli.cmd;
    std::thread::spawn(move || {
        let _ = tx.send(execute(cmd, &g));
    });
    let result = match cli.timeout {
        Some(secs) => match rx.recv_timeout(Duration::from_secs_f64(secs.max(0.0))) {
            Ok(r) => r,
            Err(_) => {
                eprintln!("lrapp: timed out after {secs} s");
                return ExitCode::from(EXIT_TIMEOUT as u8);
            }
        },
        None => rx.recv().unwrap_or_else(|_| Err(anyhow!("worker thread panicked"))),
    };
    match result.and_then(|(r, out, prog)| emit(&r, out, prog, json).map(|_| r.code)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("lrapp: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
