//! Run configuration shared by the command-line tools.
//!
//! ```toml
//! registry = "commands.toml"
//! strict = true
//! seed = 42
//!
//! [profile]
//! w1 = 0.4
//! w2 = 0.2
//! w3 = 0.4
//!
//! [token_weights]
//! command = 3.0
//! layer = 2.5
//! condition = 2.0
//! option = 1.0
//! structure = 1.5
//!
//! [retrieval]
//! alpha = 0.6
//! k = 3
//! ```
//!
//! Every key is optional. A relative registry path is resolved against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::CommandRegistry;
use crate::metrics::WeightProfile;
use crate::train::TokenClassWeights;

/// Names the config file used when none is given explicitly.
pub const CONFIG_ENV: &str = "RULEGEN_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub alpha: f64,
    pub k: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        RetrievalSettings { alpha: 0.6, k: 3 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub registry: Option<PathBuf>,
    pub strict: bool,
    pub seed: u64,
    pub profile: WeightProfile,
    pub token_weights: TokenClassWeights,
    pub retrieval: RetrievalSettings,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(reg), Some(dir)) = (&cfg.registry, path.parent()) {
            if reg.is_relative() {
                cfg.registry = Some(dir.join(reg));
            }
        }
        Ok(cfg)
    }

    /// Loads `explicit` if given, else the file named by `RULEGEN_CONFIG`,
    /// else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn check(&self) -> Result<()> {
        self.profile.check()?;
        self.token_weights.check()?;
        let r = &self.retrieval;
        if !(0.0..=1.0).contains(&r.alpha) {
            return Err(Error::Config(format!("retrieval alpha must lie in [0, 1], got {}", r.alpha)));
        }
        if r.k == 0 {
            return Err(Error::Config("retrieval k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_registry(&self) -> Result<CommandRegistry> {
        match &self.registry {
            Some(p) => CommandRegistry::load(p),
            None => Ok(CommandRegistry::default()),
        }
    }
}
