use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use gesmag_core::textfmt::parse_graph;
use gesmag_core::MixedGraph;
use serde_json::Value;

fn gesmag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gesmag")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gesmag(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_graph(path: &Path) -> MixedGraph {
    parse_graph(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EIGHT_VERTEX_PAG: &str = "vertices: 8
0 -- 1
0 -- 2
2 -- 3
1 -- 3
1 -> 4
4 <-> 5
5 -> 6
5 <-> 7
6 <-> 7
4 -> 6
";

#[test]
fn pag_without_circles_converts_to_the_same_mag() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pag.graph");
    fs::write(&input, EIGHT_VERTEX_PAG).unwrap();
    let out = dir.path().join("mag.graph");
    ok(&["convert", "--pag-to-mag", "--input", s(&input), "--out", s(&out)]);
    assert_eq!(read_graph(&out).mark_table(), parse_graph(EIGHT_VERTEX_PAG).unwrap().mark_table());
    assert!(dir.path().join("mag.graph.manifest.json").exists());
}

#[test]
fn converting_twice_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--n", "7", "--reps", "3", "--N", "50", "--seed", "4", "--out-dir", s(dir.path())]);
    for k in 0..3 {
        let mag = dir.path().join(format!("graph_{k}.graph"));
        let once = dir.path().join(format!("once_{k}.graph"));
        let back = dir.path().join(format!("back_{k}.graph"));
        let twice = dir.path().join(format!("twice_{k}.graph"));
        ok(&["convert", "--mag-to-pag", "--input", s(&mag), "--out", s(&once)]);
        ok(&["convert", "--pag-to-mag", "--input", s(&once), "--out", s(&back)]);
        ok(&["convert", "--mag-to-pag", "--input", s(&back), "--out", s(&twice)]);
        assert_eq!(read_graph(&once).mark_table(), read_graph(&twice).mark_table());
        let stdout = ok(&["convert", "--mag-to-pag", "--input", s(&mag)]);
        assert_eq!(parse_graph(&stdout).unwrap().mark_table(), read_graph(&once).mark_table());
    }
}

#[test]
fn saturated_graph_has_no_violation() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["simulate", "--n", "4", "--N", "300", "--seed", "1", "--out-dir", s(dir.path())]);
    let mut text = String::from("vertices: 4\n");
    for a in 0..4 {
        for b in a + 1..4 {
            text.push_str(&format!("{a} -> {b}\n"));
        }
    }
    let graph = dir.path().join("complete.graph");
    fs::write(&graph, text).unwrap();
    let body: Value = serde_json::from_str(&ok(&["score", "--graph", s(&graph), "--data", s(&dir.path().join("data_0.csv"))])).unwrap();
    assert_eq!(body["score"]["violation"].as_f64(), Some(0.0));
    assert_eq!(body["score"]["dimension"].as_u64(), Some(10));
}

#[test]
fn simulate_learn_eval_pipeline() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["simulate", "--n", "6", "--reps", "2", "--N", "2000", "--seed", "3", "--out-dir", s(d)]);
    ok(&["learn", "--batch-dir", s(d), "--max-head-size", "3"]);
    ok(&["eval", "--batch", s(d)]);
    let table = fs::read_to_string(d.join("metrics.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "header plus one row per replication:\n{table}");
    assert!(d.join("metrics_summary.csv").exists());

    let report = d.join("single.json");
    ok(&[
        "eval",
        "--est",
        s(&d.join("est_0.graph")),
        "--truth",
        s(&d.join("graph_0.graph")),
        "--data",
        s(&d.join("data_0.csv")),
        "--report",
        s(&report),
    ]);
    let body: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let accuracy = body["metrics"]["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&accuracy));
    assert!(body["metrics"]["log_bic_diff"].is_number());
    assert!(started.elapsed().as_secs() < 60);
}

#[test]
fn runs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        ok(&["simulate", "--n", "6", "--N", "1000", "--seed", "8", "--out-dir", s(d)]);
        ok(&["learn", "--data", s(&d.join("data_0.csv")), "--out", s(&d.join("est.graph")), "--jobs", "2"]);
    }
    for name in ["data_0.csv", "graph_0.graph", "est.graph"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn exit_codes_distinguish_usage_from_runtime_errors() {
    assert_eq!(gesmag(&["learn", "--bogus-flag"]).status.code(), Some(2));
    assert_eq!(gesmag(&["convert", "--input", "x.graph"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = gesmag(&["learn", "--data", s(&missing), "--out", s(&dir.path().join("o.graph"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let bad = dir.path().join("bad.graph");
    fs::write(&bad, "vertices: 3\n0 -> 1\n1 -> 0\n").unwrap();
    assert_eq!(gesmag(&["convert", "--mag-to-pag", "--input", s(&bad)]).status.code(), Some(1));
}
