use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pig::{read_pig_file, Piece};

/// Annotated pieces, in file-name order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub pieces: Vec<Piece>,
}

impl Dataset {
    /// Reads every `*.txt` file directly inside `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| Error::io(dir, e))?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
                paths.push(path);
            }
        }
        paths.sort();
        let pieces = paths
            .iter()
            .map(|p| read_pig_file(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset { pieces })
    }

    pub fn score_ids(&self) -> BTreeSet<&str> {
        self.pieces.iter().map(|p| p.score_id.as_str()).collect()
    }

    /// Annotations grouped by score id.
    pub fn by_score(&self) -> BTreeMap<&str, Vec<&Piece>> {
        let mut out: BTreeMap<&str, Vec<&Piece>> = BTreeMap::new();
        for p in &self.pieces {
            out.entry(p.score_id.as_str()).or_default().push(p);
        }
        out
    }

    /// Every annotation of the listed scores.
    pub fn select<'a>(&'a self, scores: &[String]) -> Vec<&'a Piece> {
        let wanted: BTreeSet<&str> = scores.iter().map(String::as_str).collect();
        self.pieces
            .iter()
            .filter(|p| wanted.contains(p.score_id.as_str()))
            .collect()
    }
}
