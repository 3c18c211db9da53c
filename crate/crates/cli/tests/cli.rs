use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn hyptree(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyptree"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = hyptree(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const THREE_POINT: &str = r#"{
  "points": ["x", "y", "z"],
  "weights": [0.3333333333333333, 0.3333333333333333, 0.3333333333333333],
  "sim": [[1, 0, 1], [0, 1, 1], [1, 1, 1]],
  "b": 1
}"#;

#[test]
fn three_point_hyperbolicity() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("s.json"), THREE_POINT).unwrap();
    assert_eq!(ok(dir.path(), &["hyp", "s.json"]), "0.074074\n");
    assert_eq!(ok(dir.path(), &["delta", "s.json"]), "1.000000\n");
    let csv = ok(dir.path(), &["--format", "csv", "hyp", "s.json"]);
    assert!(csv.starts_with("hyp\n0.0740740740740"));
}

#[test]
fn eval_reproduces_tree_report_cost() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "--seed",
            "3",
            "fixture",
            "--kind",
            "tree-scaled",
            "--size",
            "12",
            "--out",
            "f.json",
        ],
    );
    ok(
        d,
        &[
            "tree", "f.json", "--out", "t.json", "--report", "r.json", "--newick", "t.nwk",
        ],
    );
    let report = json(&d.join("r.json"));
    let result = &report["result"];
    let alpha = result["alpha_used"].as_f64().unwrap();
    let eval: serde_json::Value = serde_json::from_str(&ok(
        d,
        &[
            "--format",
            "json",
            "eval",
            "f.json",
            "t.json",
            "--alpha",
            &alpha.to_string(),
        ],
    ))
    .unwrap();
    let a = eval["result"]["cost"].as_f64().unwrap();
    let b = result["cost"].as_f64().unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(report["config"]["command"]["command"], "tree");
    assert!(std::fs::read_to_string(d.join("t.nwk"))
        .unwrap()
        .trim_end()
        .ends_with(';'));
}

#[test]
fn missing_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = hyptree(dir.path(), &["hyp", "absent.json"]);
    assert_eq!(out.status.code(), Some(9));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
}

#[test]
fn invalid_space_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let bad = THREE_POINT.replace("[0, 1, 1]", "[0.5, 1, 1]");
    std::fs::write(dir.path().join("s.json"), bad).unwrap();
    let out = hyptree(dir.path(), &["hyp", "s.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn written_space_round_trips() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "fixture",
            "--kind",
            "noisy-tree",
            "--size",
            "9",
            "--random-weights",
            "--out",
            "a.json",
        ],
    );
    let a = json(&d.join("a.json"));
    let printed: serde_json::Value =
        serde_json::from_str(&ok(d, &["split", "a.json", "--delta", "1", "--out", "b.json"])).unwrap();
    assert_eq!(printed["copies"].as_array().unwrap().len(), 9);
    assert_eq!(json(&d.join("b.json")), a);
    // hyperbolicity of the re-read space is unchanged
    assert_eq!(ok(d, &["hyp", "a.json"]), ok(d, &["hyp", "b.json"]));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &["fixture", "--kind", "planted-blocks", "--size", "15", "--out", "p.json"],
    );
    for args in [
        &["--seed", "5", "--format", "json", "hyp", "p.json", "--samples", "2000"][..],
        &["--seed", "5", "cliques", "p.json", "--threshold", "0.5"][..],
        &[
            "--seed",
            "5",
            "spinglass",
            "--n",
            "8",
            "--beta",
            "1",
            "--m",
            "2",
            "--epsilon",
            "1e-8",
            "--delta0",
            "0.1",
        ][..],
        &[
            "--seed",
            "5",
            "spinglass",
            "--n",
            "10",
            "--mcmc",
            "20000",
            "--burn-in",
            "1000",
            "--thin",
            "200",
            "--m",
            "2",
            "--epsilon",
            "1e-8",
            "--delta0",
            "0.1",
        ][..],
    ] {
        assert_eq!(ok(d, args), ok(d, args), "{args:?}");
    }
}

#[test]
fn spinglass_report_carries_config_and_levels() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = [
        "spinglass",
        "--n",
        "8",
        "--beta",
        "1",
        "--m",
        "2",
        "--epsilon",
        "1e-8",
        "--delta0",
        "0.1",
        "--report",
        "r.json",
    ];
    ok(d, &args);
    let r = json(&d.join("r.json"));
    assert_eq!(r["config"]["command"]["n"], 8);
    let res = &r["result"];
    assert_eq!(res["hyp"], res["ansatz_defect"]);
    assert_eq!(
        res["q"].as_array().unwrap().len(),
        res["clamped"].as_array().unwrap().len()
    );
    assert!(res["mean_abs_deviation"].as_f64().unwrap() >= 0.0);
}

#[test]
fn usage_errors_fail() {
    let dir = TempDir::new().unwrap();
    assert!(!hyptree(dir.path(), &["partition"]).status.success());
    assert!(!hyptree(dir.path(), &["nonsense"]).status.success());
}
