use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

fn dissoc(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dissoc")).args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let stdout = String::from_utf8(out.stdout).expect("utf8");
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (code, report, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn validate(dir: &Path, report: &Value) -> (i32, Value) {
    let path = write(dir, "report.json", report);
    let (code, v, _) = dissoc(&["validate", "--input", &path]);
    (code, v)
}

#[test]
fn check_class_passes_metric_example() {
    let (code, r, _) = dissoc(&[
        "check-class", "--class", "no-odd-perimeter", "--p", "3", "--max-dist", "5", "--max-size", "3", "--props",
        "hp,sap",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["passed"], true);
    assert_eq!(r["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn fap_failure_is_confirmed_by_validate() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, _) =
        dissoc(&["check-class", "--class", "integral-metric", "--max-dist", "3", "--max-size", "3", "--props", "fap"]);
    assert_eq!(code, 1);
    assert!(r["reports"][0]["counterexample"]["instance"].is_object());
    let (code, v) = validate(dir.path(), &r);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["claims_checked"], 1);
}

#[test]
fn tampered_counterexample_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (_, mut r, _) =
        dissoc(&["check-class", "--class", "integral-metric", "--max-dist", "3", "--max-size", "3", "--props", "fap"]);
    // Graphs do amalgamate freely, so the same instance is no witness there.
    r["class"] = json!({ "kind": "graphs" });
    let (code, v) = validate(dir.path(), &r);
    assert_ne!(code, 0, "{v}");
}

#[test]
fn missing_class_parameter_is_a_usage_error() {
    let (code, _, err) = dissoc(&["check-class", "--class", "no-odd-perimeter", "--max-dist", "5"]);
    assert_eq!(code, 2);
    assert!(err.contains("--p"));
    let (code, _, _) = dissoc(&["check-class", "--class", "graphs", "--props", "nope"]);
    assert_eq!(code, 2);
    let (code, _, _) = dissoc(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn amalgamate_metric_and_base_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let left = write(d, "l.json", &json!({"size": 3, "dist": [[0,1,2],[1,0,1],[2,1,0]]}));
    let right = write(d, "r.json", &json!({"size": 3, "dist": [[0,1,1],[1,0,2],[1,2,0]]}));
    let base = write(d, "b.json", &json!({"left": [0, 1], "right": [0, 1]}));
    let (code, r, _) = dissoc(&["amalgamate", "--kind", "metric", "--left", &left, "--right", &right, "--base", &base]);
    assert_eq!(code, 0);
    assert_eq!(r["amalgam"]["size"], 4);
    assert_eq!(validate(d, &r).0, 0);

    let other = write(d, "o.json", &json!({"size": 2, "dist": [[0,2],[2,0]]}));
    let (code, r, _) = dissoc(&["amalgamate", "--kind", "metric", "--left", &left, "--right", &other, "--base", &base]);
    assert_eq!(code, 2);
    assert_eq!(r["detail"]["witness_pair"], json!([0, 1]));

    let (code, _, err) = dissoc(&["amalgamate", "--kind", "metric", "--left", "/nonexistent", "--right", &right]);
    assert_eq!(code, 2);
    assert!(err.contains("cannot read"));
}

#[test]
fn amalgamate_diversity() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let div = json!({"size": 2, "delta": {"0,1": 1}});
    let left = write(d, "l.json", &div);
    let right = write(d, "r.json", &div);
    let base = write(d, "b.json", &json!({"left": [0], "right": [0]}));
    let (code, r, _) =
        dissoc(&["amalgamate", "--kind", "diversity", "--left", &left, "--right", &right, "--base", &base]);
    assert_eq!(code, 0);
    assert_eq!(r["amalgam"]["delta"]["1,2"], 2);
    assert_eq!(r["amalgam"]["delta"]["0,1,2"], 2);
}

#[test]
fn group_lattice_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, _) = dissoc(&["group-lattice", "--group", "sym", "--n", "4", "--a", "0,1", "--b", "2,3"]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"]["generated_order"], 4);
    assert_eq!(r["verdict"]["intersection_stabilizer_order"], 24);
    let (code, v) = validate(dir.path(), &r);
    assert_eq!(code, 0, "{v}");

    let (code, r, _) = dissoc(&["group-lattice", "--n", "6", "--all-up-to", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["failures"], 0);
}

#[test]
fn neumann_witness_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r, _) = dissoc(&["neumann", "--n", "6", "--fix", "0", "--move", "1,2", "--target", "3,4,5"]);
    assert_eq!(code, 0);
    let w: Vec<usize> = serde_json::from_value(r["witness"].clone()).unwrap();
    assert_eq!(w[0], 0);
    assert!([3, 4, 5].contains(&w[1]) && [3, 4, 5].contains(&w[2]));
    assert_eq!(validate(dir.path(), &r).0, 0);

    // Too few target points.
    let (code, r, _) = dissoc(&["neumann", "--n", "4", "--fix", "0", "--move", "1,2", "--target", "3"]);
    assert_eq!(code, 1);
    assert_eq!(validate(dir.path(), &r).0, 0);
}

#[test]
fn defect_and_induce() {
    let (code, r, _) = dissoc(&["dissociation-defect", "--n", "3..4", "--k", "1", "--a", "0", "--b", "1"]);
    assert_eq!(code, 0);
    assert!(r["table"]["3"]["frobenius_sq"].is_string());
    assert!(r["table"]["4"]["spectral"].is_number());

    let (code, r, _) = dissoc(&["induce", "--n", "4", "--a", "0,1"]);
    assert_eq!(code, 0);
    let values: Vec<&str> = r["character"].as_object().unwrap().values().map(|v| v.as_str().unwrap()).collect();
    let mut sorted = values.clone();
    sorted.sort_by_key(|s| std::cmp::Reverse(s.parse::<i64>().unwrap()));
    assert_eq!(sorted, vec!["12", "2", "0", "0", "0"]);
}

#[test]
fn exchange_iid_passes_and_coupling_fails() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["exchange-test", "--n", "3", "--samples", "20000", "--a", "0", "--b", "1", "--seed", "4"];
    let (code, r, _) = dissoc(&[&base[..], &["--generator", "iid-uniform"]].concat());
    assert_eq!(code, 0, "{r}");
    let (code, r, _) = dissoc(&[&base[..], &["--generator", "constant-coupling"]].concat());
    assert_eq!(code, 1);
    let (code, v) = validate(dir.path(), &r);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn build_limit_writes_a_valid_segment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("seg.json");
    let out = out.to_str().unwrap();
    let (code, _, _) = dissoc(&[
        "build-limit", "--class", "no-odd-perimeter", "--p", "3", "--max-dist", "3", "--steps", "3", "--seed", "9",
        "--probe", "1", "--out", out,
    ]);
    assert_eq!(code, 0);
    let seg: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(seg["audit"]["members_at_every_step"], true);
    assert!(seg["size"].as_u64().unwrap() > 1);
    let (code, v, _) = dissoc(&["validate", "--input", out]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn validate_metric_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", &json!({"size": 3, "dist": [[0,1,5],[1,0,1],[5,1,0]]}));
    let (code, v, _) = dissoc(&["validate", "--kind", "metric", "--input", &bad]);
    assert_eq!(code, 1);
    assert!(!v["violations"].as_array().unwrap().is_empty());
}

#[test]
fn type_tree_flags_colored_graphs() {
    let (code, r, _) =
        dissoc(&["type-tree", "--class", "colored-graphs", "--colors", "3", "--depth", "2", "--compare", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["level_sizes"], json!([1, 1, 4]));
    assert_eq!(r["oligomorphy"]["verdict"], "non-oligomorphic at level 2");
}
