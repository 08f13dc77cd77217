use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketchbench"))
        .args(args)
        .current_dir(dir)
        .env_remove("SKETCHBENCH_SEED")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn gen_lb_writes_spec_graph_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen-lb", "--n", "49", "--k", "3", "--seed", "1", "--out", "g.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "g.json");
    assert_eq!(r["passed"], true);
    assert_eq!(r["seed"], 1);
    assert!(dir.path().join("g.spec.json").exists());
    let graph = fs::read_to_string(dir.path().join("g.graph")).unwrap();
    assert!(graph.starts_with("n 49\n"));

    // the graph file round-trips through the oracle with the generated condition
    let cond = r["result"]["condition"].as_str().unwrap().to_string();
    let expect = if cond == "C1" { "connected" } else { "not-connected" };
    let out = run(
        dir.path(),
        &["kconn", "--graph", "g.graph", "--k", "3", "--expect", expect, "--out", "k.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let k = report(dir.path(), "k.json");
    assert!(k["inputs"]["g.graph"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.graph"), "n 3\n1 2 1\n2 3 1\n").unwrap();
    let out = run(dir.path(), &["kconn", "--graph", "p.graph", "--k", "2", "--expect", "connected"]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["min_cut"], 1);
    assert_eq!(r["outcomes"]["expectation"]["fail"], 1);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["nope"]).status.code(), Some(2));
    assert_eq!(
        run(dir.path(), &["gen-lb", "--n", "49", "--k", "3", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(run(dir.path(), &["verify-lb", "--sweep", "random"]).status.code(), Some(2));
}

#[test]
fn verify_lb_exhaustive_sweep_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["verify-lb", "--n", "36", "--k", "2", "--sweep", "exhaustive"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["outcomes"]["equivalence"]["pass"], 1000);
    assert_eq!(r["outcomes"]["equivalence"]["fail"], 0);
}

#[test]
fn overlap_attack_reports_no_counterexample_for_appb() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["overlap-attack", "--m", "9", "--s", "4", "--protocol", "appb"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["summary"], "no counterexample");
    assert!(r["result"]["counterexample"].is_null());

    let out = run(
        dir.path(),
        &["overlap-attack", "--m", "9", "--s", "4", "--protocol", "prefix:2", "--expect", "found"],
    );
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["outcomes"]["replay"]["pass"], 1);
}

#[test]
fn overlap_solve_reads_instance_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("i.json"),
        r#"{"m": 9, "s": 4, "X": "0110*****", "Y": "***1011**"}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["overlap-solve", "--instance", "i.json"]);
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["result"]["answer"], "yes");
    assert_eq!(r["result"]["sigma"], 4);

    fs::write(
        dir.path().join("bad.json"),
        r#"{"m": 9, "s": 4, "X": "0110*****", "Y": "**11011**"}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["overlap-solve", "--instance", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid instance"));
}

#[test]
fn reduce_then_verify_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["reduce", "--m", "6", "--s", "3", "--k", "2", "--context-out", "ctx.json", "--out", "r.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path(), "r.json");
    assert_eq!(r["outcomes"]["fidelity"]["pass"], 5760);
    assert_eq!(r["outcomes"]["compat"]["fail"], 0);
    assert_eq!(r["outcomes"]["communication"]["fail"], 0);

    let out = run(dir.path(), &["verify-fidelity", "--context", "ctx.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["identical"], 5760);
}

#[test]
fn seeded_runs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for (threads, stem) in [("1", "a"), ("4", "b")] {
        let out = run(
            p,
            &[
                "choose-partition", "--n", "36", "--k", "2", "--seed", "9", "--threads", threads,
                "--context-out", &format!("{stem}.partition.json"), "--out", &format!("{stem}.json"),
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        fs::read(p.join("a.partition.json")).unwrap(),
        fs::read(p.join("b.partition.json")).unwrap()
    );
    let (a, b) = (report(p, "a.json"), report(p, "b.json"));
    assert_eq!(a["outcomes"], b["outcomes"]);
    assert_eq!(a["result"], b["result"]);
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sketchbench"))
        .args(["sample-family", "--n", "256", "--d", "3", "--target", "10", "--family-out", "f.json"])
        .current_dir(dir.path())
        .env("SKETCHBENCH_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["seed"], 42);
    assert_eq!(r["outcomes"]["pairwise"]["pass"], 1);
}
