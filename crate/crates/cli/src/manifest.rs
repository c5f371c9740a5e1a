use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to rerun a command: its argument vector, the working
/// directory it ran in, and the resolved parameters, inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub cwd: PathBuf,
    pub parameters: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub converged: Option<bool>,
    pub runtime_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self {
            tool: "plp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir().unwrap_or_default(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            converged: None,
            runtime_seconds: 0.0,
        }
    }

    pub fn param<V: Serialize>(&mut self, name: &str, value: V) {
        self.parameters
            .insert(name.into(), serde_json::to_value(value).expect("serializable parameter"));
    }

    pub fn input(&mut self, name: &str, path: &Path) {
        self.inputs.insert(name.into(), path.to_path_buf());
    }

    /// Records an output path relative to the output directory.
    pub fn output(&mut self, out_dir: &Path, path: &Path) {
        self.outputs
            .push(path.strip_prefix(out_dir).unwrap_or(path).to_path_buf());
    }
}
