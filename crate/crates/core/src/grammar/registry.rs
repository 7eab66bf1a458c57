//! Command registry: per-command arity, condition, option and block rules.
//!
//! On disk a registry is a TOML document with one table per command:
//!
//! ```toml
//! [SPACE_CMD]
//! min_layers = 2
//! max_layers = 2
//! requires_condition = true
//! allowed_options = ["MODE", "PROJECTING"]
//! allows_block = true
//! ```
//!
//! Option keys use the AST vocabulary, so `READ ALL` is checked as `MODE`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandRegistryEntry {
    #[serde(skip)]
    pub name: String,
    pub min_layers: usize,
    pub max_layers: usize,
    #[serde(default)]
    pub requires_condition: bool,
    #[serde(default)]
    pub allowed_options: BTreeSet<String>,
    #[serde(default = "default_true")]
    pub allows_block: bool,
}

fn default_true() -> bool {
    true
}

impl CommandRegistryEntry {
    pub fn new(
        name: &str,
        min_layers: usize,
        max_layers: usize,
        requires_condition: bool,
        allowed_options: &[&str],
        allows_block: bool,
    ) -> Self {
        CommandRegistryEntry {
            name: name.to_string(),
            min_layers,
            max_layers,
            requires_condition,
            allowed_options: allowed_options.iter().map(|s| s.to_string()).collect(),
            allows_block,
        }
    }

    fn check(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Registry("command name must not be empty".into()));
        }
        if self.min_layers < 1 {
            return Err(Error::Registry(format!(
                "{}: min_layers must be at least 1",
                self.name
            )));
        }
        if self.max_layers < self.min_layers {
            return Err(Error::Registry(format!(
                "{}: max_layers {} is below min_layers {}",
                self.name, self.max_layers, self.min_layers
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandRegistry {
    entries: BTreeMap<String, CommandRegistryEntry>,
}

impl Default for CommandRegistry {
    fn default() -> Self {
        let entries = [
            CommandRegistryEntry::new(
                "SPACE_CMD",
                2,
                2,
                true,
                &["MODE", "PROJECTING", "OPPOSITE", "SAME_NET", "COUNT"],
                true,
            ),
            CommandRegistryEntry::new("WIDTH_CMD", 1, 1, true, &["MODE", "REGION"], true),
            CommandRegistryEntry::new(
                "ENC_CMD",
                2,
                2,
                true,
                &["MODE", "OUTSIDE", "PROJECTING"],
                true,
            ),
            CommandRegistryEntry::new("AREA_CMD", 1, 1, true, &["MODE"], true),
            CommandRegistryEntry::new(
                "DENSITY_CMD",
                1,
                1,
                true,
                &["MODE", "WINDOW", "STEP"],
                true,
            ),
        ];
        CommandRegistry {
            entries: entries.into_iter().map(|e| (e.name.clone(), e)).collect(),
        }
    }
}

impl CommandRegistry {
    pub fn empty() -> Self {
        CommandRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = CommandRegistryEntry>) -> Result<Self> {
        let mut reg = CommandRegistry::empty();
        for entry in entries {
            reg.insert(entry)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, entry: CommandRegistryEntry) -> Result<()> {
        entry.check()?;
        if self.entries.contains_key(&entry.name) {
            return Err(Error::Registry(format!("duplicate command {}", entry.name)));
        }
        self.entries.insert(entry.name.clone(), entry);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&CommandRegistryEntry> {
        self.entries.get(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CommandRegistryEntry> {
        self.entries.values()
    }

    /// True when `key` is an option key for any registered command. Such
    /// identifiers end the layer list of a rule check.
    pub fn is_option_key(&self, key: &str) -> bool {
        self.entries.values().any(|e| e.allowed_options.contains(key))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, CommandRegistryEntry> =
            toml::from_str(text).map_err(|e| Error::Registry(e.to_string()))?;
        CommandRegistry::from_entries(raw.into_iter().map(|(name, mut e)| {
            e.name = name;
            e
        }))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CommandRegistry::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let map: BTreeMap<&String, &CommandRegistryEntry> = self.entries.iter().collect();
        toml::to_string(&map).expect("registry entries serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_contents() {
        let reg = CommandRegistry::default();
        for (name, min, max) in [
            ("SPACE_CMD", 2, 2),
            ("WIDTH_CMD", 1, 1),
            ("ENC_CMD", 2, 2),
            ("AREA_CMD", 1, 1),
            ("DENSITY_CMD", 1, 1),
        ] {
            let e = reg.get(name).unwrap();
            assert_eq!((e.min_layers, e.max_layers), (min, max), "{name}");
            assert!(e.requires_condition);
        }
        assert!(reg.is_option_key("MODE"));
        assert!(!reg.is_option_key("METAL1"));
    }

    #[test]
    fn toml_round_trip() {
        let reg = CommandRegistry::default();
        let text = reg.to_toml_string();
        assert_eq!(CommandRegistry::from_toml_str(&text).unwrap(), reg);
    }

    #[test]
    fn rejects_bad_bounds() {
        let err = CommandRegistry::from_toml_str(
            "[X_CMD]\nmin_layers = 3\nmax_layers = 2\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("below min_layers"));
        assert!(CommandRegistry::from_toml_str("[X_CMD]\nmin_layers = 0\nmax_layers = 2\n").is_err());
    }

    #[test]
    fn defaults_for_optional_fields() {
        let reg = CommandRegistry::from_toml_str("[X_CMD]\nmin_layers = 1\nmax_layers = 4\n").unwrap();
        let e = reg.get("X_CMD").unwrap();
        assert!(!e.requires_condition);
        assert!(e.allows_block);
        assert!(e.allowed_options.is_empty());
    }
}
