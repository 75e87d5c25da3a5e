//! Flag, config-file and default resolution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};

/// Keys accepted in a config file; the same names as the long flags.
pub const KEYS: [&str; 15] = [
    "alpha", "kappa", "A", "zeta", "agents", "seed", "seeds", "t-eq", "t-meas", "out", "format",
    "workers", "horizon", "tail", "engines",
];

/// Flat `key = value` table loaded from TOML. Values are kept as text and
/// parsed exactly like the corresponding flag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let table: toml::Table = text.parse()?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            let key = key.replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                bail!("unknown config key '{key}'");
            }
            let text = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                toml::Value::Array(items) => items
                    .into_iter()
                    .map(|v| match v {
                        toml::Value::String(s) => s,
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => bail!("config key '{key}' has unsupported value {other}"),
            };
            values.insert(key, text);
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// Picks the flag value, then the config value, then `default`.
pub fn resolve<T>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> anyhow::Result<T>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    match resolve_opt(flag, config, key)? {
        Some(v) => Ok(v),
        None => Ok(default),
    }
}

pub fn resolve_opt<T>(flag: Option<T>, config: &ConfigFile, key: &str) -> anyhow::Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    match config.get(key) {
        Some(text) => text
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("config key '{key}': {e}")),
        None => Ok(None),
    }
}

pub fn resolve_path(flag: Option<PathBuf>, config: &ConfigFile, key: &str) -> Option<PathBuf> {
    flag.or_else(|| config.get(key).map(PathBuf::from))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_beat_defaults() {
        let cfg = ConfigFile::parse("agents = 300\nt_eq = 50\nseeds = [4, 5]\n").unwrap();
        assert_eq!(resolve(Some(10usize), &cfg, "agents", 1000).unwrap(), 10);
        assert_eq!(resolve(None::<usize>, &cfg, "agents", 1000).unwrap(), 300);
        assert_eq!(resolve(None::<usize>, &cfg, "t-eq", 1000).unwrap(), 50);
        assert_eq!(resolve(None::<usize>, &cfg, "t-meas", 2000).unwrap(), 2000);
        assert_eq!(cfg.get("seeds"), Some("4,5"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse("agent = 3").is_err());
    }

    #[test]
    fn bad_values_name_the_key() {
        let cfg = ConfigFile::parse("agents = \"many\"").unwrap();
        let err = resolve(None::<usize>, &cfg, "agents", 1).unwrap_err();
        assert!(err.to_string().contains("agents"));
    }
}
