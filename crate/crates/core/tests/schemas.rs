use std::path::{Path, PathBuf};
use std::process::Command;

use jsonschema::{Resource, Validator};
use serde_json::Value;

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn validator(name: &str) -> Validator {
    let common = load("common.schema.json");
    let id = common["$id"].as_str().unwrap().to_string();
    jsonschema::options()
        .with_resource(id, Resource::from_contents(common).unwrap())
        .build(&load(name))
        .unwrap()
}

fn assert_valid(v: &Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{errors:#?}\n{doc}");
}

fn exec(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_meandist")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn run(args: &[&str]) -> Value {
    serde_json::from_slice(&exec(args)).unwrap()
}

fn scratch(name: &str) -> String {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("schemas");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_str().unwrap().to_string()
}

fn graph_file(name: &str, args: &[&str]) -> String {
    let path = scratch(name);
    let mut all = vec!["generate"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--output", &path]);
    exec(&all);
    path
}

#[test]
fn generated_graphs_match_graph_schema() {
    let v = validator("graph.schema.json");
    for family in ["path", "star", "flower", "cycle", "firework", "random-tree", "random-graph"] {
        let g = run(&["generate", "--family", family, "--m", "3", "--edges", "5", "--betti", "2", "--random-lengths"]);
        assert_valid(&v, &g);
    }
    let bad: Value = serde_json::json!({"vertices": ["a"], "edges": [{"id": "e", "u": "a", "v": "a", "length": -1}]});
    assert!(!v.is_valid(&bad));
}

#[test]
fn analyze_reports_match_schema() {
    let v = validator("analyze_report.schema.json");
    let g = graph_file("a.json", &["--family", "random-graph", "--edges", "6", "--betti", "2", "--random-lengths", "--seed", "3"]);
    assert_valid(&v, &run(&["analyze", "--input", &g, "--mc-samples", "2000"]));
    assert_valid(&v, &run(&["analyze", "--input", &g, "--mc-samples", "0", "--timings"]));
    let lp = graph_file("loop.json", &["--family", "cycle"]);
    assert_valid(&v, &run(&["analyze", "--input", &lp, "--mc-samples", "100"]));
}

#[test]
fn verification_records_match_schema() {
    let v = validator("verification_record.schema.json");
    let g = graph_file("v.json", &["--family", "star", "--m", "5", "--random-lengths", "--seed", "9"]);
    assert_valid(&v, &run(&["verify", "--input", &g]));

    let ensemble = scratch("ensemble.json");
    std::fs::write(
        &ensemble,
        r#"{"entries": [{"family": "flower", "m": 2}, {"family": "random_graph", "edges": 4, "betti": 1, "lengths": {"random": {"total": 2.0}}, "count": 3}]}"#,
    )
    .unwrap();
    let sidecar = scratch("sweep.json");
    run(&["sweep", "--ensemble", &ensemble, "--json", &sidecar]);
    let full: Value = serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    let records = full["records"].as_array().unwrap();
    assert_eq!(records.len(), 4);
    for r in records {
        assert_valid(&v, r);
    }
}
