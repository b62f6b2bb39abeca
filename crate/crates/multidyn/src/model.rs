//! Ensemble model documents (JSON).

use std::path::Path;

use multidyn_core::sizeest::{EnsembleModel, FEATURE_NAMES, FEATURE_VERSION};
use serde::{Deserialize, Serialize};

use crate::csvlog::{read_text, write_text};
use crate::error::{CliError, Result};

pub const FORMAT: &str = "multidyn-ensemble";
pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub feature_version: u32,
    pub feature_names: Vec<String>,
    pub model: EnsembleModel,
}

impl ModelDocument {
    pub fn new(model: EnsembleModel) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: FORMAT_VERSION,
            feature_version: FEATURE_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            model,
        }
    }
}

pub fn to_json(model: &EnsembleModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDocument::new(model.clone())).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<EnsembleModel> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| CliError::config(format!("model document: {e}")))?;
    if doc.format != FORMAT || doc.version != FORMAT_VERSION {
        return Err(CliError::config(format!("unsupported model format {} v{}", doc.format, doc.version)));
    }
    if doc.feature_version != FEATURE_VERSION || doc.model.feature_version != FEATURE_VERSION {
        return Err(CliError::config(format!(
            "model uses feature set v{}, this build extracts v{FEATURE_VERSION}",
            doc.feature_version
        )));
    }
    Ok(doc.model)
}

pub fn save(path: &Path, model: &EnsembleModel) -> Result<()> {
    write_text(path, &to_json(model))
}

/// Accepts the model file or the directory holding `model.json`.
pub fn load(path: &Path) -> Result<EnsembleModel> {
    let file = if path.is_dir() { path.join(MODEL_FILE) } else { path.to_path_buf() };
    from_json(&read_text(&file)?)
}
