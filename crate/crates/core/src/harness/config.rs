use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::GenerateConfig;
use crate::encoding::InputMode;
use crate::error::{Error, Result};
use crate::rnn::AdamHyper;

/// Everything a run depends on. Stored as flat TOML; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hidden_size: usize,
    pub depth: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub clip: f64,
    pub seed: u64,
    pub folds: usize,
    pub input_mode: InputMode,
    pub use_transition: bool,
    pub use_prior: bool,
    pub augment: bool,
    pub augment_count: usize,
    pub augment_min_len: usize,
    pub augment_max_len: usize,
    pub augment_threshold: f64,
    pub dataset: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamHyper::default();
        RunConfig {
            hidden_size: 64,
            depth: 1,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            epochs: 100,
            patience: 10,
            clip: 5.0,
            seed: 0,
            folds: 35,
            input_mode: InputMode::PitchDifference,
            use_transition: true,
            use_prior: true,
            augment: true,
            augment_count: 50,
            augment_min_len: 150,
            augment_max_len: 300,
            augment_threshold: 0.05,
            dataset: None,
            checkpoint_dir: None,
            report_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive");
        }
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) {
            return bad("eps must be positive");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive");
        }
        if self.folds == 0 {
            return bad("folds must be positive");
        }
        if self.augment_min_len == 0 || self.augment_min_len > self.augment_max_len {
            return bad("augment length range is empty");
        }
        if !(0.0..1.0).contains(&self.augment_threshold) {
            return bad("augment_threshold must lie in [0, 1)");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn generate_config(&self, seed: u64) -> GenerateConfig {
        GenerateConfig {
            count: self.augment_count,
            min_len: self.augment_min_len,
            max_len: self.augment_max_len,
            seed,
        }
    }
}

/// Mixes a base seed with indices into an independent stream seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base;
    for &p in parts {
        x = splitmix(x ^ splitmix(p.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    x
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
