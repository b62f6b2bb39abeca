//! Run manifests: what produced an output directory and how to redo it.
//!
//! `run_manifest.txt` holds `key = value` lines; `config.cfg` (when the
//! command ran a scenario) is the resolved config in the same document form
//! `--config` accepts.

use std::path::Path;

use multidyn_core::log::SCHEMA_VERSION;
use multidyn_core::scenario::{save_config, ScenarioConfig};
use multidyn_core::sizeest::FEATURE_VERSION;

use crate::csvlog::write_text;
use crate::error::Result;

pub const MANIFEST_FILE: &str = "run_manifest.txt";
pub const CONFIG_FILE: &str = "config.cfg";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: Option<ScenarioConfig>,
    /// Extra `key = value` lines, e.g. dataset size or model path.
    pub extra: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self { command: command.to_string(), args: args.to_vec(), ..Default::default() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut lines = vec![
            format!("command = {}", self.command),
            format!("multidyn = {}", env!("CARGO_PKG_VERSION")),
            format!("log_schema = {SCHEMA_VERSION}"),
            format!("feature_version = {FEATURE_VERSION}"),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed = {seed}"));
        }
        lines.push(format!("args = {}", self.args.join(" ")));
        if self.config.is_some() {
            lines.push(format!("config = {CONFIG_FILE}"));
        }
        for (k, v) in &self.extra {
            lines.push(format!("{k} = {v}"));
        }
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_text(&dir.join(MANIFEST_FILE), &self.render())?;
        if let Some(cfg) = &self.config {
            write_text(&dir.join(CONFIG_FILE), &save_config(cfg))?;
        }
        Ok(())
    }
}
