use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrapp")).args(args).output().expect("spawn lrapp")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lrapp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_reports_schema_and_bound() {
    let o = run(&["--json", "analyze", &corpus("int_rw1d.app"), "--init", "5", "--no-bound"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema"], "lrapp/v1");
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["realizable"], "yes");
    assert_eq!(v["UB"]["value"], "46/1");
    assert_eq!(v["invariants_inductive"], true);
}

#[test]
fn init_accepts_positional_and_named_values() {
    let a = json(&run(&["--json", "analyze", &corpus("int_rw1d.app"), "--init", "10", "--no-bound"]));
    let b = json(&run(&["--json", "analyze", &corpus("int_rw1d.app"), "--init", "x=10", "--no-bound"]));
    assert_eq!(a["UB"], b["UB"]);
    assert_eq!(a["initial"], serde_json::json!(["10/1"]));
}

#[test]
fn initial_value_outside_invariant_is_an_error() {
    let o = run(&["analyze", &corpus("int_rw1d.app"), "--init=-5"]);
    assert_eq!(code(&o), 3);
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_use_the_error_code() {
    assert_eq!(code(&run(&["analyze"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn missing_file_is_an_error() {
    let o = run(&["analyze", "no/such/file.app"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/file.app"));
}

#[test]
fn timeout_has_its_own_exit_code() {
    let o = run(&["--timeout", "0.01", "approx", &corpus("irrational_et.app"), "--delta", "0.000001"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn nonterminating_program_is_not_realizable() {
    let p = scratch("grow.app");
    std::fs::write(&p, "var x := 1;\n@[x >= 1]\nwhile x >= 1 do\n  @[x >= 1]\n  x := x + 1\nod\n@[x < 1]\n").unwrap();
    let o = run(&["--json", "analyze", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["realizable"], "no");
}

#[test]
fn synthesized_witness_checks_and_corruption_is_caught() {
    let o = run(&["--json", "synth", &corpus("int_rw1d.app")]);
    assert_eq!(code(&o), 0);
    let report = json(&o);
    let good = scratch("good.json");
    std::fs::write(&good, serde_json::to_string(&report).unwrap()).unwrap();
    let ok = run(&["check", &corpus("int_rw1d.app"), "--witness", good.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));

    let mut w = report["witness"].clone();
    w["b"]["l0"] = "0/1".into();
    let bad = scratch("bad.json");
    std::fs::write(&bad, serde_json::to_string(&w).unwrap()).unwrap();
    let o = run(&["check", &corpus("int_rw1d.app"), "--witness", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL l0"));
}

#[test]
fn gen_sat_round_trip() {
    let prog = scratch("sat4.app");
    let wit = scratch("sat4.witness.json");
    let o = run(&[
        "gen",
        "sat",
        "--cnf",
        &corpus("reductions/sat4.cnf"),
        "--out",
        prog.to_str().unwrap(),
        "--witness-out",
        wit.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["check", prog.to_str().unwrap(), "--witness", wit.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let o = run(&["--json", "gen", "sat", "--cnf", &corpus("reductions/unsat3.cnf")]);
    assert_eq!(json(&o)["satisfiable"], false);
}

#[test]
fn dump_sgs_json_lists_locations_and_transitions() {
    let o = run(&["dump-sgs", &corpus("int_rw1d.app"), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let locs = v["locations"].as_array().unwrap();
    assert_eq!(v["l_out"].as_u64().unwrap() as usize, locs.len() - 1);
    for t in v["transitions"].as_array().unwrap() {
        assert!(t["src"].as_u64().unwrap() < locs.len() as u64);
        assert!(t["tgt"].as_u64().unwrap() < locs.len() as u64);
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = ["--json", "--seed", "7", "simulate", &corpus("int_rw1d.app"), "--trials", "2000"];
    let a = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, run(&args).stdout);
    let v = json(&a);
    assert_eq!(v["schema"], "lrapp/v1");
}
