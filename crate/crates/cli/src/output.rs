//! File writers. Every file starts with the tool version, the normalized
//! configuration and the seed, and contains no timestamps.

use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "virtspin";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn metadata(command: &str, cfg: &RunConfig) -> Value {
    json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "seed": cfg.seed(),
        "config": cfg.echo(),
    })
}

/// `#`-prefixed header lines for CSV files.
pub fn csv_preamble(command: &str, cfg: &RunConfig) -> String {
    let seed = cfg.seed().map_or("none".to_string(), |s| s.to_string());
    let config = serde_json::to_string(&cfg.echo()).expect("config serializes");
    format!("# tool: {TOOL} {VERSION}\n# command: {command}\n# seed: {seed}\n# config: {config}\n")
}

/// `{"metadata": ..., <payload fields>}`.
pub fn json_document(command: &str, cfg: &RunConfig, payload: impl Serialize) -> String {
    let mut doc = Map::new();
    doc.insert("metadata".into(), metadata(command, cfg));
    match serde_json::to_value(payload).expect("payload serializes") {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("data".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    text.push('\n');
    text
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
