//! The JSON schemas under `schemas/` agree with what the binary accepts:
//! documents with only the required fields load, dropping any required field
//! or adding an unknown one is rejected with exit code 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap()
}

fn required(obj: &Value) -> Vec<String> {
    serde_json::from_value(obj["required"].clone()).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_sparsecert")).args(args).output().unwrap();
    out.status.code().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, v.to_string()).unwrap();
    p
}

/// Every required-field removal and one unknown field fail; `doc` succeeds.
fn check_fields(doc: &Value, keys: &[String], ok_code: i32, mut run: impl FnMut(&Value) -> i32) {
    assert_eq!(run(doc), ok_code, "minimal document rejected: {doc}");
    for k in keys {
        let mut d = doc.clone();
        assert!(d.as_object_mut().unwrap().remove(k).is_some(), "{k} missing from the minimal document");
        assert_eq!(run(&d), 1, "accepted without required field {k}");
    }
    let mut d = doc.clone();
    d["unexpected_field"] = json!(1);
    assert_eq!(run(&d), 1, "accepted an unknown field");
}

#[test]
fn structure_schema_matches() {
    let dir = TempDir::new().unwrap();
    let s = schema("structure.schema.json");
    let minimal = [
        json!({ "kind": "plain", "n": 4 }),
        json!({ "kind": "group", "n": 4, "blocks": [[0, 1], [2, 3]], "block_norms": ["l2", "linf"] }),
        json!({ "kind": "lowrank", "p": 2, "q": 2 }),
    ];
    let branches = s["oneOf"].as_array().unwrap();
    assert_eq!(branches.len(), minimal.len());
    for (branch, doc) in branches.iter().zip(&minimal) {
        assert_eq!(branch["properties"]["kind"]["const"], doc["kind"]);
        assert_eq!(branch["additionalProperties"], json!(false));
        let keys = required(branch);
        assert_eq!(keys.len(), doc.as_object().unwrap().len());
        check_fields(doc, &keys, 0, |d| {
            let p = write_json(dir.path(), "structure.json", d);
            exit_code(&["axioms", "--structure", p.to_str().unwrap(), "--trials", "20"])
        });
    }
    for norm in s["$defs"]["vector_norm"]["enum"].as_array().unwrap() {
        let doc = json!({ "kind": "group", "n": 2, "blocks": [[0, 1]], "block_norms": [norm] });
        let p = write_json(dir.path(), "structure.json", &doc);
        assert_eq!(exit_code(&["axioms", "--structure", p.to_str().unwrap(), "--trials", "20"]), 0, "{norm}");
    }
}

#[test]
fn problem_schema_matches() {
    let dir = TempDir::new().unwrap();
    let s = schema("problem.schema.json");
    assert_eq!(s["additionalProperties"], json!(false));
    let doc = json!({ "structure": { "kind": "plain", "n": 2 }, "a": [[1.0, 0.5]], "y": [1.0] });
    check_fields(&doc, &required(&s), 0, |d| {
        let p = write_json(dir.path(), "problem.json", d);
        exit_code(&["recover", "--problem", p.to_str().unwrap()])
    });
    for phi in s["$defs"]["norm"]["enum"].as_array().unwrap() {
        let mut d = doc.clone();
        d["phi"] = phi.clone();
        d["epsilon"] = json!(0.1);
        let p = write_json(dir.path(), "problem.json", &d);
        assert_eq!(exit_code(&["recover", "--problem", p.to_str().unwrap()]), 0, "{phi}");
    }
}

#[test]
fn certificate_schema_matches() {
    let dir = TempDir::new().unwrap();
    let s = schema("certificate.schema.json");
    assert_eq!(s["additionalProperties"], json!(false));
    let doc = json!({
        "method": "column_lp", "gamma": 0.25, "beta": 2.0, "s": 1.0,
        "phi": "l1", "valid": true, "exact": true
    });
    check_fields(&doc, &required(&s), 0, |d| {
        let p = write_json(dir.path(), "cert.json", d);
        exit_code(&["bound", "--certificate", p.to_str().unwrap(), "--epsilon", "0.1"])
    });
    for method in s["properties"]["method"]["enum"].as_array().unwrap() {
        let mut d = doc.clone();
        d["method"] = method.clone();
        let p = write_json(dir.path(), "cert.json", &d);
        assert_eq!(exit_code(&["bound", "--certificate", p.to_str().unwrap()]), 0, "{method}");
    }
}

#[test]
fn experiment_schema_matches() {
    let dir = TempDir::new().unwrap();
    let s = schema("experiment.schema.json");
    assert_eq!(s["additionalProperties"], json!(false));
    let csv = dir.path().join("out.csv");
    let doc = json!({
        "structure": { "kind": "plain", "n": 6 },
        "sensing": { "kind": "gaussian", "m": 6, "seed": 1 },
        "signal": { "s": 1, "seed": 2 },
        "noise": { "epsilon": 0.1, "seed": 3 },
        "trials": 2,
        "output": { "csv": csv.to_str().unwrap() }
    });
    check_fields(&doc, &required(&s), 0, |d| {
        let p = write_json(dir.path(), "exp.json", d);
        exit_code(&["experiment", "--config", p.to_str().unwrap()])
    });
    for part in ["signal", "noise", "output"] {
        let sub = &s["properties"][part];
        assert_eq!(sub["additionalProperties"], json!(false), "{part}");
        for k in required(sub) {
            let mut d = doc.clone();
            d[part].as_object_mut().unwrap().remove(&k).unwrap();
            let p = write_json(dir.path(), "exp.json", &d);
            assert_eq!(exit_code(&["experiment", "--config", p.to_str().unwrap()]), 1, "{part}.{k}");
        }
    }
}
