//! Loading, overlaying and validating experiment configurations.

use std::path::Path;

use conebound::Error;
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

/// Byte offset of a 1-based (line, column) position in `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (start + column.saturating_sub(1)).min(text.len())
}

/// Parses a JSON document, reporting syntax errors by byte offset.
pub fn parse_json(text: &str, source: &str) -> Result<Value, Error> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        Error::config(
            source,
            format!(
                "malformed JSON at byte offset {offset} (line {}, column {}): {e}",
                e.line(),
                e.column()
            ),
        )
    })
}

pub fn load(path: &Path) -> Result<Value, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(
            path.display().to_string(),
            format!("cannot read config: {e}"),
        )
    })?;
    let value = parse_json(&text, &path.display().to_string())?;
    if !value.is_object() {
        return Err(Error::config(
            path.display().to_string(),
            "config must be a JSON object",
        ));
    }
    Ok(value)
}

/// Deserializes a typed config, reporting the field path of any failure.
pub fn resolve<T: DeserializeOwned>(value: Value) -> Result<T, Error> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })
}

/// Mutable view used to overlay inline flags onto a loaded config.
pub struct Overlay {
    root: Map<String, Value>,
}

impl Overlay {
    pub fn new(base: Option<Value>) -> Self {
        let root = match base {
            Some(Value::Object(m)) => m,
            _ => Map::new(),
        };
        Self { root }
    }

    fn object_at(&mut self, path: &[&str]) -> &mut Map<String, Value> {
        let mut node = &mut self.root;
        for key in path {
            let entry = node
                .entry(key.to_string())
                .or_insert_with(|| Value::Object(Map::new()));
            if !entry.is_object() {
                *entry = Value::Object(Map::new());
            }
            node = entry.as_object_mut().expect("object");
        }
        node
    }

    /// Sets `path.key` when `value` is present.
    pub fn set<V: Into<Value>>(&mut self, path: &[&str], key: &str, value: Option<V>) {
        if let Some(v) = value {
            self.object_at(path).insert(key.to_string(), v.into());
        }
    }

    /// Replaces the object at `path` with `value`.
    pub fn replace(&mut self, path: &[&str], value: Value) {
        let (last, parent) = path.split_last().expect("non-empty path");
        self.object_at(parent).insert(last.to_string(), value);
    }

    pub fn get(&self, path: &[&str]) -> Option<&Value> {
        let (last, parent) = path.split_last()?;
        let mut node = &self.root;
        for key in parent {
            node = node.get(*key)?.as_object()?;
        }
        node.get(*last)
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.root)
    }
}
