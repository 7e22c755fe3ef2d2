//! Configuration assembly for the subcommands.
//!
//! Precedence, lowest to highest: the `--config` JSON file, each `--set
//! key=value` override in order, then the convenience flags. The merged
//! object is deserialized into the subcommand's config struct, which rejects
//! unknown keys.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use varmark_core::{Error, Result};

/// The base object: the parsed `--config` file, or `{}` without one.
pub fn load_base(path: Option<&Path>) -> Result<Value> {
    match path {
        None => Ok(Value::Object(Map::new())),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            if !value.is_object() {
                return Err(Error::Config(format!(
                    "{}: the top level must be a JSON object",
                    p.display()
                )));
            }
            Ok(value)
        }
    }
}

/// Applies one `key=value` override. The key is a dotted path of object
/// keys (intermediate objects are created); the value is parsed as JSON
/// when possible and kept as a plain string otherwise, so both
/// `--set training.epochs=40` and `--set mode=ensemble` read naturally.
pub fn apply_set(config: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("--set {spec:?}: expected key=value")))?;
    if path.is_empty() {
        return Err(Error::Config(format!("--set {spec:?}: empty key")));
    }
    let value = raw
        .trim()
        .parse::<Value>()
        .unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(config, path, value)
}

/// Sets `path` (dotted object keys) to `value`, creating objects on the way.
pub fn set_path(config: &mut Value, path: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("config key {path:?} has an empty segment")));
    }
    let obj = config
        .as_object_mut()
        .expect("base config is always an object");
    set_in(obj, &parts, path, value)
}

fn set_in(obj: &mut Map<String, Value>, parts: &[&str], full: &str, value: Value) -> Result<()> {
    let (head, rest) = parts.split_first().expect("parts is never empty");
    if rest.is_empty() {
        obj.insert(head.to_string(), value);
        return Ok(());
    }
    let child = obj
        .entry(head.to_string())
        .or_insert_with(|| Value::Object(Map::new()));
    match child.as_object_mut() {
        Some(map) => set_in(map, rest, full, value),
        None => Err(Error::Config(format!(
            "cannot set {full:?}: {head:?} holds a non-object value"
        ))),
    }
}

/// Final deserialization into the subcommand's config struct.
pub fn finish<T: DeserializeOwned>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}
