#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sharp_ssl::projections::domain;
use sharp_ssl::{build_two_class_spec, sample, SeededRng, UNLABELED};

pub fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sharpssl"));
    cmd.env_remove("SHARPSSL_THREADS").env_remove("RUST_LOG");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sharpssl")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// Two-class data with signal on the first `s` of `p` columns, written with
/// `x0..`, a `label` column (0 = missing) and a `truth` column.
pub fn write_two_class(
    dir: &Path,
    name: &str,
    p: usize,
    s: usize,
    snr: f64,
    n: usize,
    gamma: f64,
    seed: u64,
) -> (PathBuf, Vec<usize>, Vec<usize>) {
    let spec = build_two_class_spec(p, s, snr).unwrap().with_gamma(gamma);
    let (ds, truth) = sample(
        &spec,
        n,
        &mut SeededRng::new(seed).stream(domain::SIMULATION, 0, 0),
    )
    .unwrap();
    let mut text = String::new();
    let header: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    text.push_str(&header.join(","));
    text.push_str(",label,truth\n");
    for i in 0..n {
        let row: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
        text.push_str(&row.join(","));
        text.push_str(&format!(",{},{}\n", ds.labels()[i], truth[i]));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    let labels = ds.labels().to_vec();
    assert!(labels
        .iter()
        .zip(&truth)
        .all(|(&l, &t)| l == UNLABELED || l == t));
    (path, labels, truth)
}

pub fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run_report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Checks `value` against the JSON Schema keywords used by the shipped
/// schema: type (incl. unions), const, enum, minimum, required, properties,
/// additionalProperties = false and items. Returns the first violation.
pub fn validate(schema: &Value, value: &Value, path: &str) -> Result<(), String> {
    let fail = |msg: String| Err(format!("{path}: {msg}"));
    if let Some(c) = schema.get("const") {
        if c != value {
            return fail(format!("expected const {c}, got {value}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(value) {
            return fail(format!("{value} not in enum {options:?}"));
        }
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().map(|v| v.as_str().unwrap()).collect(),
            _ => panic!("bad type keyword"),
        };
        let ok = types.iter().any(|&t| match t {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "number" => value.is_number(),
            "integer" => value.is_u64() || value.is_i64(),
            other => panic!("unsupported type {other}"),
        });
        if !ok {
            return fail(format!("{value} is not of type {types:?}"));
        }
    }
    if let (Some(min), Some(v)) = (
        schema.get("minimum").and_then(Value::as_f64),
        value.as_f64(),
    ) {
        if v < min {
            return fail(format!("{v} < minimum {min}"));
        }
    }
    if let Some(obj) = value.as_object() {
        for key in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            if !obj.contains_key(key.as_str().unwrap()) {
                return fail(format!("missing required {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, v) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(sub, v, &format!("{path}.{key}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return fail(format!("unexpected property {key}"))
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), value.as_array()) {
        for (i, v) in arr.iter().enumerate() {
            validate(items, v, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}
