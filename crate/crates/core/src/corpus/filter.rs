use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::miner::FileDiff;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignFilterConfig {
    pub extensions: Vec<String>,
    pub exclude: Vec<String>,
    pub generated: Vec<String>,
}

impl Default for DesignFilterConfig {
    fn default() -> Self {
        Self {
            extensions: ["sv", "svh", "v", "vh"].map(String::from).to_vec(),
            exclude: ["**/dv/**", "**/fpv/**"].map(String::from).to_vec(),
            generated: vec!["*_reg_top.sv".to_string()],
        }
    }
}

/// Decides which changed paths are design files.
#[derive(Debug, Clone)]
pub struct DesignFilter {
    config: DesignFilterConfig,
    exclude: GlobSet,
    generated: GlobSet,
}

impl Default for DesignFilter {
    fn default() -> Self {
        Self::new(DesignFilterConfig::default()).expect("default globs are valid")
    }
}

fn glob_set(patterns: &[String]) -> Result<GlobSet, CorpusError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        b.add(Glob::new(p).map_err(|e| CorpusError::Config(format!("glob {p:?}: {e}")))?);
    }
    b.build().map_err(|e| CorpusError::Config(e.to_string()))
}

impl DesignFilter {
    pub fn new(config: DesignFilterConfig) -> Result<Self, CorpusError> {
        Ok(Self {
            exclude: glob_set(&config.exclude)?,
            generated: glob_set(&config.generated)?,
            config,
        })
    }

    pub fn config(&self) -> &DesignFilterConfig {
        &self.config
    }

    /// `None` when `path` is not a design file, otherwise whether it is generated.
    pub fn classify(&self, path: &str) -> Option<bool> {
        let name = path.rsplit('/').next().unwrap_or(path);
        let ext = name.rsplit_once('.').map(|(_, e)| e)?;
        if !self.config.extensions.iter().any(|x| x.eq_ignore_ascii_case(ext)) {
            return None;
        }
        if self.exclude.is_match(path) {
            return None;
        }
        Some(self.generated.is_match(path))
    }
}

/// Keeps design files and sets `generated_flag` on auto-generated ones.
pub fn filter_design_files(files: Vec<FileDiff>, filter: &DesignFilter) -> Vec<FileDiff> {
    files
        .into_iter()
        .filter_map(|mut f| {
            f.generated_flag = filter.classify(&f.path)?;
            Some(f)
        })
        .collect()
}
