use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pollsel"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/result-document.schema.json");
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("schema compiles")
}

/// Runs a command that prints a JSON document, checks it against the schema
/// and returns it.
fn document(args: &[&str]) -> (Option<i32>, Value) {
    let out = run(args);
    let doc: Value =
        serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    let validator = schema();
    let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema violations: {errors:?}");
    (out.status.code(), doc)
}

struct Instance {
    _dir: TempDir,
    edges: PathBuf,
    stubborn: PathBuf,
}

impl Instance {
    fn generate(args: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let edges = dir.path().join("graph.txt");
        let mut full = vec!["--out", edges.to_str().unwrap(), "generate"];
        full.extend_from_slice(args);
        let out = run(&full);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let stubborn = dir.path().join("graph.txt.stubborn");
        Self {
            _dir: dir,
            edges,
            stubborn,
        }
    }

    fn ws15() -> Self {
        Self::generate(&["--model", "ws", "--n", "15", "--stubborn-count", "3", "--seed", "7"])
    }

    fn contact_scale() -> Self {
        Self::generate(&[
            "--model",
            "weighted",
            "--n",
            "86",
            "--edges",
            "347",
            "--stubborn-count",
            "3",
            "--seed",
            "11",
        ])
    }

    fn args<'a>(&'a self, cmd: &'a str) -> Vec<&'a str> {
        vec![
            cmd,
            "--graph",
            self.edges.to_str().unwrap(),
            "--stubborn-file",
            self.stubborn.to_str().unwrap(),
        ]
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

#[test]
fn generate_is_byte_reproducible() {
    let a = Instance::ws15();
    let b = Instance::ws15();
    assert_eq!(std::fs::read(&a.edges).unwrap(), std::fs::read(&b.edges).unwrap());
    assert_eq!(std::fs::read(&a.stubborn).unwrap(), std::fs::read(&b.stubborn).unwrap());
    let text = std::fs::read_to_string(&a.edges).unwrap();
    assert!(text.starts_with("# nodes 15 edges 30"));
    assert_eq!(std::fs::read_to_string(&a.stubborn).unwrap().lines().count(), 3);
}

#[test]
fn generate_cycle_of_seven() {
    let c = Instance::generate(&["--model", "cycle", "--n", "7"]);
    let text = std::fs::read_to_string(&c.edges).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 7);
    assert_eq!(std::fs::read_to_string(&c.stubborn).unwrap().trim(), "0");
}

#[test]
fn generate_rejects_bad_parameters() {
    assert_eq!(
        run(&["generate", "--model", "ws", "--n", "15", "--k", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["generate", "--model", "weighted", "--n", "10"]).status.code(),
        Some(2)
    );
}

#[test]
fn select_greedy_on_ws15() {
    let inst = Instance::ws15();
    let mut args = inst.args("select");
    args.extend(["--k", "4"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0));
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["graph"]["n_regular"], 12);
    let sel = &doc["selection"];
    assert_eq!(sel["ids"].as_array().unwrap().len(), 4);
    assert_eq!(doc["meta"]["eval_count"], 12 * 4 - 6);
    assert!(strictly_decreasing(&floats(&sel["residual_fractions"])));
    assert_eq!(floats(&sel["estimator"]["coefficients"]).len(), 4);
    assert!(doc["meta"]["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n.as_str().unwrap().contains("best linear")));
}

#[test]
fn select_empty_set() {
    let inst = Instance::ws15();
    let mut args = inst.args("select");
    args.extend(["--k", "0"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0));
    assert!(doc["selection"]["ids"].as_array().unwrap().is_empty());
    assert_eq!(floats(&doc["selection"]["residual_fractions"]), vec![1.0]);
}

#[test]
fn select_is_reproducible_apart_from_timing() {
    let inst = Instance::ws15();
    let mut args = inst.args("select");
    args.extend(["--k", "5", "--method", "exact", "--sigma2", "uniform:2.5"]);
    let (_, mut a) = document(&args);
    let (_, mut b) = document(&args);
    a["meta"]["timing"] = Value::Null;
    b["meta"]["timing"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn select_on_contact_scale_graph() {
    let inst = Instance::contact_scale();
    let mut args = inst.args("select");
    args.extend(["--k", "10"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0));
    assert_eq!(doc["graph"]["n_regular"], 83);
    assert!(strictly_decreasing(&floats(&doc["selection"]["residual_fractions"])));
}

#[test]
fn exact_over_budget_exits_3_without_output() {
    let inst = Instance::contact_scale();
    let out_path = inst.edges.with_file_name("result.json");
    let mut args = vec!["--out", out_path.to_str().unwrap()];
    args.extend(inst.args("select"));
    args.extend(["--k", "10", "--method", "exact"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_path.exists());
    assert_eq!(String::from_utf8_lossy(&out.stderr).lines().count(), 1);
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    std::fs::write(&graph, "0 1 1\n1 2 1\n2 2 1\n").unwrap();
    let g = graph.to_str().unwrap();
    // self-loop
    assert_eq!(
        run(&["select", "--graph", g, "--stubborn", "0", "--k", "1"])
            .status
            .code(),
        Some(2)
    );
    // tolerated when zeroed
    let out = run(&[
        "select",
        "--graph",
        g,
        "--stubborn",
        "0",
        "--k",
        "1",
        "--self-loops",
        "zero",
    ]);
    assert_eq!(out.status.code(), Some(0));
    // stubborn id not in the graph
    assert_eq!(
        run(&["select", "--graph", g, "--stubborn", "9", "--k", "1"])
            .status
            .code(),
        Some(2)
    );
    // missing file
    let missing = dir.path().join("nope.txt");
    let code = run(&[
        "select",
        "--graph",
        missing.to_str().unwrap(),
        "--stubborn",
        "0",
        "--k",
        "1",
    ])
    .status
    .code();
    assert_eq!(code, Some(2));
    // k larger than the regular set
    std::fs::write(&graph, "0 1 1\n1 2 1\n").unwrap();
    assert_eq!(
        run(&["select", "--graph", g, "--stubborn", "0", "--k", "3"])
            .status
            .code(),
        Some(2)
    );
    // nonpositive variance
    let code = run(&[
        "select",
        "--graph",
        g,
        "--stubborn",
        "0",
        "--k",
        "1",
        "--sigma2",
        "uniform:0",
    ])
    .status
    .code();
    assert_eq!(code, Some(2));
    // unreachable component
    std::fs::write(&graph, "0 1 1\n2 3 1\n").unwrap();
    assert_eq!(
        run(&["select", "--graph", g, "--stubborn", "0", "--k", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sigma2_file_is_honoured() {
    let inst = Instance::generate(&["--model", "cycle", "--n", "4"]);
    let flat = inst.edges.with_file_name("flat.txt");
    let skew = inst.edges.with_file_name("skew.txt");
    std::fs::write(&flat, "1 2.5\n2 2.5\n3 2.5\n").unwrap();
    std::fs::write(&skew, "1 1.0\n2 4.0\n3 1.0\n").unwrap();
    let with = |spec: &str| {
        let mut args = inst.args("select");
        args.extend(["--k", "1", "--sigma2", spec]);
        let (code, mut doc) = document(&args);
        assert_eq!(code, Some(0));
        doc["meta"]["timing"] = Value::Null;
        doc
    };
    assert_eq!(with(flat.to_str().unwrap()), with("uniform:2.5"));
    let var = |d: &Value| d["selection"]["var_total"].as_f64().unwrap();
    assert!((var(&with(skew.to_str().unwrap())) - var(&with("uniform:1.0"))).abs() > 1e-6);
}

#[test]
fn score_two_measures() {
    let inst = Instance::ws15();
    let mut args = inst.args("score");
    args.extend(["--measures", "var_reduction,bonacich"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0));
    let scores = &doc["scores"];
    assert_eq!(scores["measures"].as_array().unwrap().len(), 2);
    for m in scores["measures"].as_array().unwrap() {
        let norm = floats(&m["normalized"]);
        assert_eq!(norm.len(), 12);
        assert_eq!(norm.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
    }
    assert_eq!(scores["argmax_ids"].as_array().unwrap().len(), 2);
    assert_eq!(scores["kendall"].as_array().unwrap().len(), 1);
}

#[test]
fn score_single_measure_and_note() {
    let inst = Instance::ws15();
    let mut args = inst.args("score");
    args.extend(["--measures", "eta"]);
    let (_, doc) = document(&args);
    assert!(doc["scores"]["kendall"].as_array().unwrap().is_empty());
    let notes: Vec<&str> = doc["meta"]["notes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| n.as_str().unwrap())
        .collect();
    assert!(notes.iter().any(|n| n.contains("sigma_k^2 * eta_k")));
}

#[test]
fn score_rejects_unknown_measure_and_divergent_attenuation() {
    let inst = Instance::ws15();
    let mut args = inst.args("score");
    args.extend(["--measures", "pagerank"]);
    assert_eq!(run(&args).status.code(), Some(2));
    let mut args = inst.args("score");
    args.extend([
        "--measures",
        "bonacich",
        "--matrix",
        "adjacency",
        "--attenuation",
        "1.0",
    ]);
    assert_ne!(run(&args).status.code(), Some(0));
}

#[test]
fn curve_greedy_and_exact() {
    let inst = Instance::ws15();
    let mut args = inst.args("curve");
    args.extend(["--max-k", "4", "--methods", "greedy,exact"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0));
    let rows = doc["curve"].as_array().unwrap();
    let pct = |method: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r["method"] == method)
            .map(|r| r["residual_pct"].as_f64().unwrap())
            .collect()
    };
    let (g, e) = (pct("greedy"), pct("exact"));
    assert_eq!(g.len(), 5);
    assert_eq!(e.len(), 5);
    assert!(nonincreasing(&g) && nonincreasing(&e));
    assert!(g.iter().zip(&e).all(|(g, e)| *g >= e - 1e-9));
    assert_eq!(g[0], 100.0);
}

#[test]
fn curve_csv_rows() {
    let inst = Instance::ws15();
    let mut args = vec!["--format", "csv"];
    args.extend(inst.args("curve"));
    args.extend(["--max-k", "0"]);
    let out = run(&args);
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "k,method,residual_pct\n0,greedy,100\n"
    );

    let m = Instance::contact_scale();
    let mut args = vec!["--format", "csv"];
    args.extend(m.args("curve"));
    args.extend(["--max-k", "20"]);
    let text = String::from_utf8(run(&args).stdout).unwrap();
    let pct: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(pct.len(), 21);
    assert!(nonincreasing(&pct));
}

#[test]
fn validate_submodularity_passes() {
    let (code, doc) = document(&["validate", "--suite", "submodularity", "--max-r", "7", "--trials", "50"]);
    assert_eq!(code, Some(0));
    assert_eq!(doc["validation"]["passed"], true);
    assert!(doc["validation"]["reports"]["min_slack_f"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn validate_incremental_and_guarantee() {
    let (code, _) = document(&["validate", "--suite", "incremental", "--trials", "10", "--max-r", "80"]);
    assert_eq!(code, Some(0));
    let (code, _) = document(&["validate", "--suite", "greedy-guarantee", "--trials", "10"]);
    assert_eq!(code, Some(0));
}

#[test]
fn validate_identities_and_closed_form() {
    let (code, doc) = document(&["validate", "--suite", "identities"]);
    assert_eq!(code, Some(0));
    assert!(doc["validation"]["reports"]["note"]
        .as_str()
        .unwrap()
        .contains("sigma_k^2"));
    let (code, _) = document(&["validate", "--suite", "closed-form", "--instances", "general"]);
    assert_eq!(code, Some(0));
}

#[test]
fn validate_moments_tiny_replica_count_still_reports() {
    let (code, doc) = document(&["validate", "--suite", "moments", "--replicas", "2"]);
    assert!(code == Some(0) || code == Some(1));
    assert_eq!(doc["validation"]["passed"], code == Some(0));
}

#[test]
fn validate_moments_on_user_graph() {
    let inst = Instance::generate(&["--model", "cycle", "--n", "6", "--stubborn-count", "2"]);
    let mut args = inst.args("validate");
    args.extend(["--suite", "moments", "--replicas", "4000", "--n-se", "5"]);
    let (code, doc) = document(&args);
    assert_eq!(code, Some(0), "{}", doc["validation"]["summary"]);
    assert_eq!(doc["graph"]["n_regular"], 4);
}

#[test]
fn failed_audit_exits_1_with_document() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("audit.json");
    let out = run(&[
        "--out",
        out_path.to_str().unwrap(),
        "validate",
        "--suite",
        "submodularity",
        "--instances",
        "general",
        "--trials",
        "40",
    ]);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(schema().is_valid(&doc));
    assert_eq!(out.status.code() == Some(0), doc["validation"]["passed"] == true);
}

#[test]
fn output_file_and_csv_select() {
    let inst = Instance::ws15();
    let out_path = inst.edges.with_file_name("sel.csv");
    let mut args = vec!["--format", "csv", "--out", out_path.to_str().unwrap()];
    args.extend(inst.args("select"));
    args.extend(["--k", "2"]);
    assert!(run(&args).status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("step,id,gain,f_value,g_value,residual_fraction\n0,,,0,"));
}

#[test]
fn rejects_bad_tolerances() {
    let inst = Instance::ws15();
    let mut args = vec!["--tol-sym", "-1"];
    args.extend(inst.args("select"));
    args.extend(["--k", "1"]);
    assert_eq!(run(&args).status.code(), Some(2));
}
