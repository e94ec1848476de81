//! Runtime configuration shared by the CLI, the HTTP service and the Python
//! bindings. Loaded from TOML; paths and port can be overridden from the
//! environment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::event::to_canonical_line;

pub const ENV_CONFIG: &str = "LAKEMETA_CONFIG";
pub const ENV_STORE: &str = "LAKEMETA_STORE";
pub const ENV_RAW: &str = "LAKEMETA_RAW";
pub const ENV_PORT: &str = "LAKEMETA_PORT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetThresholds {
    pub similarity: f64,
    pub containment: f64,
    pub correlation: f64,
    pub logical_cluster: f64,
}

impl Default for DatasetThresholds {
    fn default() -> Self {
        DatasetThresholds { similarity: 0.3, containment: 0.5, correlation: 0.7, logical_cluster: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttributeThresholds {
    pub correlation: f64,
    pub containment: f64,
    pub value_similarity: f64,
    pub name_similarity: f64,
}

impl Default for AttributeThresholds {
    fn default() -> Self {
        AttributeThresholds { correlation: 0.7, containment: 0.5, value_similarity: 0.5, name_similarity: 0.8 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub dataset: DatasetThresholds,
    pub attribute: AttributeThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VeracityWeights {
    pub objectivity: f64,
    pub truthfulness: f64,
    pub credibility: f64,
}

impl Default for VeracityWeights {
    fn default() -> Self {
        VeracityWeights { objectivity: 1.0 / 3.0, truthfulness: 1.0 / 3.0, credibility: 1.0 / 3.0 }
    }
}

impl VeracityWeights {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.objectivity, self.truthfulness, self.credibility];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("veracity weights must be finite and non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("veracity weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub level: u32,
    pub label: String,
}

fn default_levels() -> Vec<LevelSpec> {
    [(0, "public"), (1, "internal"), (2, "confidential"), (3, "restricted")]
        .into_iter()
        .map(|(level, label)| LevelSpec { level, label: label.to_string() })
        .collect()
}

fn default_users() -> BTreeMap<String, u32> {
    BTreeMap::from([("admin".to_string(), 3), ("analyst".to_string(), 0)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store_path: PathBuf,
    pub raw_zone: PathBuf,
    pub port: u16,
    /// Seed for row hashing and MinHash signatures.
    pub seed: u64,
    pub minhash_k: usize,
    pub source_code_url: String,
    pub default_user: String,
    /// Static assets served under `/ui` when set.
    pub ui_dir: Option<PathBuf>,
    pub thresholds: Thresholds,
    /// User name -> clearance level.
    pub users: BTreeMap<String, u32>,
    /// Source name -> credibility score in [0, 1].
    pub credibility: BTreeMap<String, f64>,
    pub default_credibility: f64,
    pub veracity_weights: VeracityWeights,
    pub sensitivity_levels: Vec<LevelSpec>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store_path: PathBuf::from("lake/store"),
            raw_zone: PathBuf::from("lake/raw"),
            port: 8080,
            seed: 42,
            minhash_k: 128,
            source_code_url: env!("CARGO_PKG_REPOSITORY").to_string(),
            default_user: "admin".to_string(),
            ui_dir: None,
            thresholds: Thresholds::default(),
            users: default_users(),
            credibility: BTreeMap::new(),
            default_credibility: 0.5,
            veracity_weights: VeracityWeights::default(),
            sensitivity_levels: default_levels(),
        }
    }
}

impl Config {
    /// Config rooted at `dir`: store and raw zone live underneath it.
    pub fn rooted_at(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Config { store_path: dir.join("store"), raw_zone: dir.join("raw"), ..Config::default() }
    }

    /// Reads a TOML file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.store_path = base.join(&config.store_path);
            config.raw_zone = base.join(&config.raw_zone);
            config.ui_dir = config.ui_dir.map(|d| base.join(d));
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads `path` (or `$LAKEMETA_CONFIG`, or defaults) and applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(ENV_CONFIG).map(PathBuf::from);
        let mut config = match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::from_file(p)?,
            None => Config::default(),
        };
        config.apply_env(|key| std::env::var(key).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(store) = lookup(ENV_STORE) {
            self.store_path = store.into();
        }
        if let Some(raw) = lookup(ENV_RAW) {
            self.raw_zone = raw.into();
        }
        if let Some(port) = lookup(ENV_PORT) {
            self.port = port.parse().map_err(|_| Error::Config(format!("{ENV_PORT}={port} is not a port")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.veracity_weights.validate()?;
        if self.minhash_k == 0 {
            return Err(Error::Config("minhash_k must be positive".into()));
        }
        if !self.sensitivity_levels.iter().any(|l| l.level == 0) {
            return Err(Error::Config("sensitivity level 0 must exist".into()));
        }
        for (name, score) in &self.credibility {
            if !(0.0..=1.0).contains(score) {
                return Err(Error::Config(format!("credibility of `{name}` outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.default_credibility) {
            return Err(Error::Config("default_credibility outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn clearance_of(&self, user: &str) -> Option<u32> {
        self.users.get(user).copied()
    }

    pub fn credibility_of(&self, source_name: &str) -> f64 {
        self.credibility.get(source_name).copied().unwrap_or(self.default_credibility)
    }

    /// Hex SHA-256 of the canonical encoding; recorded on every ingest run.
    pub fn hash(&self) -> String {
        let line = to_canonical_line(self).unwrap_or_default();
        hex::encode(Sha256::digest(line.as_bytes()))
    }
}
