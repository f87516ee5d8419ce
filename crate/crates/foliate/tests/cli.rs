use std::path::PathBuf;
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foliate")).args(args).output().unwrap()
}

fn path(rel: &str) -> String {
    data(rel).to_string_lossy().into_owned()
}

#[test]
fn invariant_reports_both_methods() {
    let out = run(&["invariant", &path("golden/cusp_drop.txt")]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["nu_scan"], 2);
    assert_eq!(v["nu_chain"], 2);
}

#[test]
fn parse_errors_exit_2_with_position() {
    let out = run(&["invariant", &path("data/bad_syntax.txt")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    let out = run(&["monomialize", &path("data/missing.txt")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn structured_statuses_set_the_exit_code() {
    assert_eq!(run(&["monomialize", &path("data/oracle_failure.txt")]).status.code(), Some(3));
    assert_eq!(run(&["monomialize", &path("data/truncation_ambiguous.txt")]).status.code(), Some(4));
}

#[test]
fn output_graph_and_check() {
    let dir = std::env::temp_dir().join(format!("foliate-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("tree.json");
    let out = run(&["monomialize", &path("golden/cusp_drop.txt"), "--samples", "3", "--seed", "9", "--output", json.to_str().unwrap(), "--emit-graph"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let dot = std::fs::read_to_string(dir.join("tree.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
    let tree: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(tree["problem"].as_str().unwrap().contains("samples 3\nseed 9"));
    let out = run(&["check", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));

    let mut bad = tree.clone();
    let nodes = bad["nodes"].as_array_mut().unwrap();
    let last = nodes.len() - 1;
    nodes[last]["lattice"] = serde_json::json!([]);
    let tampered = dir.join("bad.json");
    std::fs::write(&tampered, serde_json::to_string(&bad).unwrap()).unwrap();
    assert_eq!(run(&["check", tampered.to_str().unwrap()]).status.code(), Some(1));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn every_subcommand_runs_on_the_drop_example() {
    for cmd in ["decompose", "prepare", "drop"] {
        let out = run(&[cmd, &path("golden/cusp_drop.txt")]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let _: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    }
    let drop = run(&["drop", &path("golden/cusp_drop.txt")]);
    let tmp = std::env::temp_dir().join(format!("foliate-drop-{}.json", std::process::id()));
    std::fs::write(&tmp, &drop.stdout).unwrap();
    assert_eq!(run(&["check", tmp.to_str().unwrap()]).status.code(), Some(0));
    std::fs::remove_file(tmp).unwrap();
}
