//! Metadata headers and output destinations.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, seed and the effective configuration of a run.
#[derive(Debug, Clone)]
pub struct Meta {
    seed: u64,
    config: Vec<(String, String)>,
}

impl Meta {
    pub fn new(command: &str, seed: u64) -> Self {
        Self { seed, config: vec![("command".into(), command.into())] }
    }

    pub fn set(mut self, key: &str, value: impl Display) -> Self {
        self.config.push((key.into(), value.to_string()));
        self
    }

    pub fn list<T: Display>(self, key: &str, values: &[T]) -> Self {
        let joined: Vec<String> = values.iter().map(T::to_string).collect();
        self.set(key, joined.join(","))
    }

    /// Comment lines placed above a table, each starting with `prefix`.
    pub fn header(&self, prefix: &str) -> String {
        let config: Vec<String> = self.config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{prefix} finnet {VERSION}\n{prefix} seed={}\n{prefix} {}\n", self.seed, config.join(" "))
    }

    pub fn to_json(&self) -> Value {
        let config: Map<String, Value> =
            self.config.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        json!({ "tool": "finnet", "version": VERSION, "seed": self.seed, "config": config })
    }
}

/// Where a command's main output goes; stdout when no path is given.
#[derive(Debug, Clone)]
pub struct Sink(pub Option<PathBuf>);

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> Result<(), Failure> {
        match &self.0 {
            Some(path) => write_file(path, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| Failure::Data(format!("writing stdout: {e}")))
            }
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

/// Header comment lines followed by whatever `body` writes.
pub fn table<F>(meta: &Meta, prefix: &str, body: F) -> Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut Vec<u8>) -> finnet_core::Result<()>,
{
    let mut buf = meta.header(prefix).into_bytes();
    body(&mut buf)?;
    Ok(buf)
}

/// `{"meta": ..., key: payload}` as pretty JSON.
pub fn document<T: Serialize + ?Sized>(meta: &Meta, key: &str, payload: &T) -> Result<Vec<u8>, Failure> {
    let payload = serde_json::to_value(payload).map_err(|e| Failure::Data(format!("serializing output: {e}")))?;
    let mut doc = Map::new();
    doc.insert("meta".into(), meta.to_json());
    doc.insert(key.into(), payload);
    let mut buf = serde_json::to_vec_pretty(&Value::Object(doc)).map_err(|e| Failure::Data(e.to_string()))?;
    buf.push(b'\n');
    Ok(buf)
}
