use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use treeindisc::indisc::{check_based_on, check_indiscernible, ParameterMap};
use treeindisc::prelude::*;
use treeindisc::qftype::node_code;
use treeindisc::tree_index::enumerate_nodes;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeindisc")).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn save(dir: &Path, name: &str, out: &Output) -> String {
    let p = dir.join(name);
    fs::write(&p, &out.stdout).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn classify_counts_match_library_codes() {
    let out = run(&["classify", "--domain", "3,2", "--lang", "s", "--arity", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    let classes = v["report"]["classes"].as_array().unwrap();
    let nodes = enumerate_nodes(&TreeDomain::open(3, 2).unwrap());
    let mut codes = std::collections::BTreeSet::new();
    for a in &nodes {
        for b in &nodes {
            codes.insert(node_code(&[a.clone(), b.clone()], IndexLanguage::S));
        }
    }
    assert_eq!(classes.len(), codes.len());
    let total: u64 = classes.iter().map(|c| c["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 49);
}

#[test]
fn feq_demo_certificates() {
    let out = run(&["feq-demo", "--q", "4", "--classes", "2", "--depth", "2", "--branching", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let c = &json_of(&out)["report"]["certificates"];
    assert_eq!(c["two_tp"]["verdict"], true);
    assert_eq!(c["stretched_str_based"]["verdict"], true);
    assert_eq!(c["stretched_strongly_consistent"]["verdict"], true);
    assert_eq!(c["stretched_two_tp"]["verdict"], false);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["classify", "--domain", "3,2", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let out = run(&["classify", "--domain", "0,2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json_of(&out)["error"].is_string());
}

#[test]
fn extraction_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let src = save(dir.path(), "src.json", &run(&["gen", "--seed", "3", "--domain", "3,6", "--arities", "2,2"]));
    let out = run(&["extract", "--mode", "s", "--source", &src, "--target", "3,2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let ext = save(dir.path(), "ext.json", &out);

    let chk = run(&["check-indisc", "--source", &ext, "--lang", "s", "--based-on", &src]);
    assert_eq!(chk.status.code(), Some(0));
    let strx = run(&["extract", "--mode", "str-from-s", "--source", &ext, "--target", "2,2"]);
    assert_eq!(strx.status.code(), Some(0));

    // the report re-verifies through the library
    let r = &json_of(&out)["report"];
    let m: RelStructure = serde_json::from_value(r["structure"].clone()).unwrap();
    let delta: Vec<DeltaFormula> = serde_json::from_value(r["delta"].clone()).unwrap();
    let b = ParameterMap::from_json(&m, &r["params"]).unwrap();
    let a = ParameterMap::from_json(&m, &json_of(&run(&["gen", "--seed", "3", "--domain", "3,6", "--arities", "2,2"]))["report"]["params"]).unwrap();
    assert!(check_indiscernible(&m, &b, IndexLanguage::S, &delta, 2).unwrap().verdict);
    assert!(check_based_on(&m, &b, &a, IndexLanguage::S, &delta, 2).unwrap().verdict);
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let g1 = run(&["gen", "--seed", "11"]);
    assert_eq!(g1.stdout, run(&["gen", "--seed", "11"]).stdout);
    assert_ne!(g1.stdout, run(&["gen", "--seed", "12"]).stdout);
    assert_eq!(json_of(&g1)["report"]["seed"], 11);
    let src = save(dir.path(), "g.json", &g1);
    let e = |_| run(&["extract", "--mode", "s", "--source", &src, "--target", "2,2"]).stdout;
    assert_eq!(e(0), e(1));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    let out = run(&["classify", "--domain", "2,2", "--arity", "1", "--output", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(v["report"]["class_count"], 2);
}

#[test]
fn tp_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let demo = json_of(&run(&["feq-demo"]));
    let r = &demo["report"];
    let spec = serde_json::json!({ "structure": r["structure"], "formula": r["formula"], "params": r["params"] });
    let p = dir.path().join("spec.json");
    fs::write(&p, spec.to_string()).unwrap();
    let p = p.to_str().unwrap();
    assert_eq!(run(&["tp-check", "--property", "tp", "--k", "2", "--spec", p]).status.code(), Some(0));
    assert_eq!(run(&["tp-check", "--property", "tp1", "--k", "2", "--spec", p]).status.code(), Some(1));
    assert_eq!(run(&["tp-check", "--property", "tp", "--k", "3", "--spec", p]).status.code(), Some(1));
    // paths of length one only
    assert_eq!(run(&["tp-check", "--property", "tp", "--depth", "1", "--spec", p]).status.code(), Some(0));
    assert_eq!(run(&["tp-check", "--property", "tp2", "--spec", p]).status.code(), Some(2));
}

#[test]
fn ramsey_certificates_and_shortfall() {
    let dir = tempfile::tempdir().unwrap();
    let pol = dir.path().join("pol.json");
    let table: Vec<u32> = (0..64).map(|i| (i / 8 + i % 8) % 2).collect();
    fs::write(&pol, serde_json::json!({ "chains": [4, 4], "arity": 2, "table": table }).to_string()).unwrap();
    let out = run(&["ramsey", "--mode", "polarized", "--coloring", pol.to_str().unwrap(), "--target", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["report"]["verified"], true);

    let tree = dir.path().join("tree.json");
    let d = TreeDomain::closed(1, 3).unwrap();
    fs::write(&tree, serde_json::json!({ "domain": d, "arity": 1, "table": [0, 1, 1, 0] }).to_string()).unwrap();
    let t = tree.to_str().unwrap();
    assert_eq!(run(&["ramsey", "--mode", "tree", "--coloring", t, "--target", "2"]).status.code(), Some(0));
    let short = run(&["ramsey", "--mode", "tree", "--coloring", t, "--target", "4"]);
    assert_eq!(short.status.code(), Some(3));
    assert_eq!(json_of(&short)["kind"], "insufficient_source");
    fs::write(&tree, serde_json::json!({ "domain": d, "arity": 1, "table": [0, 1] }).to_string()).unwrap();
    assert_eq!(run(&["ramsey", "--mode", "tree", "--coloring", t, "--target", "2"]).status.code(), Some(2));
}
