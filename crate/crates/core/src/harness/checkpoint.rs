use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::model::FingeringModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "pdf-fingering-checkpoint/v1";

/// A trained fold: the run configuration, the scores it was tested on, and
/// both hand models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: RunConfig,
    pub fold: usize,
    pub test_scores: Vec<String>,
    pub model: FingeringModel,
}

impl Checkpoint {
    pub fn new(config: RunConfig, fold: usize, test_scores: Vec<String>, model: FingeringModel) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config,
            fold,
            test_scores,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "checkpoint".into(),
            source,
        })?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format tag {:?}",
                ck.format
            )));
        }
        ck.config.validate()?;
        ck.model.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// `fold-03.json` style name.
pub fn checkpoint_file_name(fold: usize) -> String {
    format!("fold-{fold:02}.json")
}
