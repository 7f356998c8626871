//! Shared helpers: running the binary and a validator for the JSON Schema
//! subset the shipped schemas use.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regex::Regex;
use serde_json::Value;

pub fn opswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opswap"))
        .args(args)
        .env_remove("OPSWAP_THREADS")
        .output()
        .expect("binary runs")
}

pub fn opswap_in(dir: &Path, args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_opswap"));
    cmd.args(args).current_dir(dir).env_remove("OPSWAP_THREADS");
    if let Some(n) = threads {
        cmd.env("OPSWAP_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
pub fn ok(o: Output) -> Output {
    assert!(o.status.success(), "failed: {}\n{}", stderr(&o), stdout(&o));
    o
}

pub fn schema(name: &str) -> Value {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "schemas", name].iter().collect();
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn type_matches(ty: &str, v: &Value) -> bool {
    match ty {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "array" => v.is_array(),
        "object" => v.is_object(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64() || v.as_f64().is_some_and(|f| f.fract() == 0.0),
        other => panic!("unsupported schema type {other}"),
    }
}

/// Validates `v` against `schema` (`root` resolves `#/definitions/...`).
/// Returns the first violation with its JSON pointer.
pub fn validate(root: &Value, schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    let fail = |msg: String| Err(format!("{at}: {msg}"));
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/definitions/").expect("local definition ref");
        return validate(root, &root["definitions"][name], v, at);
    }
    if let Some(ty) = schema.get("type") {
        let ok = match ty {
            Value::String(t) => type_matches(t, v),
            Value::Array(ts) => ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)),
            _ => panic!("bad type keyword"),
        };
        if !ok {
            return fail(format!("{v} is not of type {ty}"));
        }
    }
    if let Some(options) = schema.get("enum").and_then(Value::as_array) {
        if !options.contains(v) {
            return fail(format!("{v} not in {options:?}"));
        }
    }
    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let hits = options.iter().filter(|s| validate(root, s, v, at).is_ok()).count();
        if hits != 1 {
            return fail(format!("{v} matches {hits} oneOf branches"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            return fail(format!("{x} < {min}"));
        }
    }
    if let (Some(max), Some(x)) = (schema.get("maximum").and_then(Value::as_f64), v.as_f64()) {
        if x > max {
            return fail(format!("{x} > {max}"));
        }
    }
    if let (Some(p), Some(s)) = (schema.get("pattern").and_then(Value::as_str), v.as_str()) {
        if !Regex::new(p).unwrap().is_match(s) {
            return fail(format!("`{s}` does not match {p}"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(key.as_str().unwrap()) {
                return fail(format!("missing {key}"));
            }
        }
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(s) => validate(root, s, value, &format!("{at}/{key}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return fail(format!("unexpected property {key}"));
                }
                None => {}
            }
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < min {
                return fail(format!("{} items < {min}", items.len()));
            }
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                validate(root, s, item, &format!("{at}/{i}"))?;
            }
        }
    }
    Ok(())
}

#[track_caller]
pub fn assert_valid(schema_name: &str, json: &str) -> Value {
    let s = schema(schema_name);
    let v: Value = serde_json::from_str(json).expect("valid JSON");
    if let Err(e) = validate(&s, &s, &v, "") {
        panic!("{schema_name}: {e}\n{json}");
    }
    v
}
