use std::path::PathBuf;
use std::process::{Command, Output};

use hingelab_core::json::{FromJson, ToJson};
use hingelab_core::{Hinge, KarpelevichPoint, PolySequence, Rational, TreePartition};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hinge-lab"));
    c.env_remove("HINGELAB_TOL");
    c
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("in.json");
    std::fs::write(&path, input).unwrap();
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.push("--in");
    full.push(&p);
    bin().args(&full).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const EXAMPLES: [(&str, &str, &str); 3] = [
    ("hinge", "limit", "two_block_path.json"),
    ("velocity", "karpelevich", "eight_index.json"),
    ("sky", "tits", "flags.json"),
];

#[test]
fn examples_are_byte_identical_across_runs() {
    for (verb, action, file) in EXAMPLES {
        let input = data(file);
        let a = run(&[verb, action, "--in", input.to_str().unwrap()]);
        let b = run(&[verb, action, "--in", input.to_str().unwrap()]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{verb} {action}");
    }
}

#[test]
fn hinge_example_round_trips() {
    let o = run(&["hinge", "limit", "--in", data("two_block_path.json").to_str().unwrap()]);
    let v = stdout_json(&o);
    let h = Hinge::<Rational>::from_json(&v).unwrap();
    assert_eq!(h.len(), 2);
    assert_eq!(h.to_json(), v);
}

#[test]
fn karpelevich_example_round_trips() {
    let input: Value = serde_json::from_str(&std::fs::read_to_string(data("eight_index.json")).unwrap()).unwrap();
    let seq = PolySequence::from_json(&input).unwrap();
    assert_eq!(seq.to_json(), input);
    let v = stdout_json(&run(&["velocity", "karpelevich", "--in", data("eight_index.json").to_str().unwrap()]));
    let point = KarpelevichPoint::from_json(&v["point"]).unwrap();
    assert_eq!(point.to_json(), v["point"]);
    let tree = TreePartition::from_json(&v["tree"]).unwrap();
    assert_eq!(tree, point.tree());
    assert_eq!(v["point"]["values"][1], Value::from("1/2"));
}

#[test]
fn tits_example_is_an_edge() {
    let o = run(&["sky", "tits", "--in", data("flags.json").to_str().unwrap()]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(text.contains("1.0471975512"), "{text}");
    let d = stdout_json(&o)["distance"].as_f64().unwrap();
    assert!((d - std::f64::consts::FRAC_PI_3).abs() < 1e-9);
}

#[test]
fn two_input_files_match_pq_object() {
    let dir = tempfile::tempdir().unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(data("flags.json")).unwrap()).unwrap();
    let p = dir.path().join("p.json");
    let q = dir.path().join("q.json");
    std::fs::write(&p, v["p"].to_string()).unwrap();
    std::fs::write(&q, v["q"].to_string()).unwrap();
    let a = run(&["sky", "tits", "--in", p.to_str().unwrap(), "--in", q.to_str().unwrap()]);
    let b = run(&["sky", "tits", "--in", data("flags.json").to_str().unwrap()]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h.json");
    let o = run(&[
        "hinge",
        "limit",
        "--in",
        data("two_block_path.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let direct = run(&["hinge", "limit", "--in", data("two_block_path.json").to_str().unwrap()]);
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nope", "limit"]).status.code(), Some(2));
    assert_eq!(run(&["hinge", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["hinge", "limit", "--in", "/nonexistent/x.json"]).status.code(), Some(2));
    assert_eq!(run_stdin(&["hinge", "limit"], "{").status.code(), Some(2));
    assert_eq!(run_stdin(&["hinge", "limit"], r#"{"g1": 3}"#).status.code(), Some(2));
    let bad = run_stdin(
        &["hinge", "validate"],
        r#"{"n":2,"components":[{"ambient":4,"basis":[["1","0","0","0"],["0","1","0","0"]]}]}"#,
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("hinge condition"));
    let singular = run_stdin(
        &["hinge", "limit"],
        r#"{"g1":{"rows":2,"cols":2,"data":[["1","1"],["1","1"]]},"lambda":["1","0"],"g2":{"rows":2,"cols":2,"data":[["1","0"],["0","1"]]}}"#,
    );
    assert_eq!(singular.status.code(), Some(1));
}

#[test]
fn exact_flag_rejects_float_input() {
    let input = r#"{"mu":[1.0, 0.5, 0.0]}"#;
    assert_eq!(run_stdin(&["geodesic", "stratum", "--exact"], input).status.code(), Some(2));
    let v = stdout_json(&run_stdin(&["geodesic", "stratum"], r#"{"mu":["1","1/2","0"]}"#));
    assert_eq!(v["dimension"], Value::from(8));
}

#[test]
fn tolerance_from_environment() {
    let o = bin()
        .env("HINGELAB_TOL", "not-a-number")
        .args(["hinge", "limit", "--in", data("two_block_path.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("HINGELAB_TOL", "1e-6")
        .args(["hinge", "limit", "--in", data("two_block_path.json").to_str().unwrap()])
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn graph_dot_export() {
    let input = r#"{"lines":[[["1","0","0"]],[["0","1","0"]]],"planes":[[["1","0","0"],["0","1","0"]]]}"#;
    let o = run_stdin(&["sky", "graph", "--format", "dot"], input);
    assert!(o.status.success());
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("graph"));
    assert!(dot.contains("L0 -- P0"));
    let v = stdout_json(&run_stdin(&["sky", "graph"], input));
    assert_eq!(v["edges"].as_array().unwrap().len(), 2);
    assert_eq!(run_stdin(&["hinge", "limit", "--format", "dot"], "{}").status.code(), Some(2));
}

#[test]
fn text_format_is_readable() {
    let o = run(&["sky", "tits", "--in", data("flags.json").to_str().unwrap(), "--format", "text"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "distance: 1.0471975512\n");
}

#[test]
fn geodesic_limit_and_urchin() {
    let path = r#"{
        "m": {"rows":2,"cols":2,"data":[["2","1"],["0","1/2"]]},
        "frame": {"rows":2,"cols":2,"data":[["1","0"],["0","1"]]},
        "lambda": ["1","0"],
        "times": [5, 10, 20]
    }"#;
    let v = stdout_json(&run_stdin(&["geodesic", "limit"], path));
    let g = &v["geodesic"];
    assert_eq!(g["lambda"], serde_json::json!(["1", "0"]));
    let u = stdout_json(&run_stdin(&["geodesic", "urchin"], &g.to_string()));
    assert_eq!(u["sea_urchin"], Value::Bool(true));
}
