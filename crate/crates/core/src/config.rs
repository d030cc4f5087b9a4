//! TOML run configuration shared by the command-line tools.
//!
//! ```toml
//! [run]
//! seed = 7
//! threads = 4
//!
//! [build]
//! n_samples = 50
//! top_k = 3
//!
//! [build.probe]
//! epochs = 30
//!
//! [learners.forest]
//! n_trees = 200
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::BuildConfig;
use crate::error::{Error, Result};
use crate::importance::ImportanceMetric;
use crate::learners::{LearnerConfig, SplitSpec};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Overrides every component seed when set.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub manifests: Vec<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportanceConfig {
    pub metric: ImportanceMetric,
    pub n_repeats: usize,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self {
            metric: ImportanceMetric::Auc,
            n_repeats: 10,
            n_permutations: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub build: BuildConfig,
    pub learners: LearnerConfig,
    pub split: SplitSpec,
    pub importance: ImportanceConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            for m in &mut cfg.run.manifests {
                if m.is_relative() {
                    *m = dir.join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        self.build.probe.validate()?;
        self.build.metrics.mmd.validate()?;
        self.learners.logistic.validate()?;
        self.split.validate()?;
        Ok(())
    }

    /// Apply a single seed to every seeded component.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.run.seed = Some(seed);
        self.build.seed = seed;
        self.build.probe.seed = seed;
        self.build.metrics.mmd.seed = seed;
        self.learners.logistic.seed = seed;
        self.learners.forest.seed = seed;
        self.split.seed = seed;
        self.importance.seed = seed;
        self
    }

    /// Seeds from `[run] seed` take precedence over per-section seeds.
    pub fn resolved(self) -> Self {
        match self.run.seed {
            Some(s) => self.with_seed(s),
            None => self,
        }
    }
}
