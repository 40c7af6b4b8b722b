use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(name: &str) -> String {
    root().join("corpus").join(name).to_string_lossy().into_owned()
}

fn report(args: &[&str]) -> Value {
    let o = Command::new(env!("CARGO_BIN_EXE_lrapp")).arg("--json").args(args).output().expect("spawn lrapp");
    assert!(o.status.code().unwrap() < 3, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json output")
}

fn validate(v: &Value) {
    let cmd = v["command"].as_str().expect("command field");
    let path = root().join("schema/v1").join(format!("{cmd}.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let errors: Vec<String> = validator.iter_errors(v).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{cmd}: {errors:#?}");
}

#[test]
fn reports_match_their_schemas() {
    let witness = std::env::temp_dir().join(format!("lrapp-schema-{}.json", std::process::id()));
    let synth = report(&["synth", &corpus("int_rw1d.app")]);
    std::fs::write(&witness, synth.to_string()).unwrap();
    let w = witness.to_str().unwrap();
    let runs: Vec<Vec<String>> = [
        vec!["analyze", &corpus("countdown.app"), "--approx", "0.05", "--simulate", "500"],
        vec!["analyze", &corpus("int_rw1d.app"), "--init", "x=7", "--simulate", "500"],
        vec!["analyze", &corpus("queue_centered.app"), "--init", "5"],
        vec!["analyze", &corpus("q4.app")],
        vec!["analyze", &corpus("skip.app")],
        vec!["analyze", &corpus("rw2d.app"), "--bernstein"],
        vec!["synth", &corpus("rw2d_variant.app")],
        vec!["check", &corpus("int_rw1d.app"), "--witness", w],
        vec!["bound", &corpus("real_rw1d.app"), "--kind", "bernstein", "--x", "100,400", "--curve-to", "200", "--steps", "4"],
        vec!["approx", &corpus("countdown.app")],
        vec!["approx", &corpus("irrational_et.app"), "--max-nodes", "10000"],
        vec!["simulate", &corpus("rw2d.app"), "--trials", "300", "--demon", "uniform", "--tail", "50,100"],
        vec!["gen", "sat", "--cnf", &corpus("reductions/sat4.cnf")],
        vec!["gen", "sat", "--cnf", &corpus("reductions/unsat3.cnf")],
        vec!["gen", "tm", "--spec", &corpus("reductions/scan.tm.json")],
        vec!["dump-sgs", &corpus("rw2d.app"), "--format", "json"],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(String::from).collect())
    .collect();
    validate(&synth);
    for args in &runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        validate(&report(&args));
    }
}
