//! Service configuration. Precedence: environment > file > built-in defaults.
//!
//! The file is TOML, or JSON with the same fields when its name ends in
//! `.json`:
//!
//! ```toml
//! bind = "127.0.0.1"
//! port = 8080
//! storage_dir = "apprentice-data"
//! admin_token = "change-me"
//! session_ttl_hours = 12
//!
//! [mastery]
//! threshold = 0.95
//! defaults = { p_init = 0.3, p_transit = 0.2, p_slip = 0.1, p_guess = 0.2 }
//! per_kc.add-exponents = { p_init = 0.4, p_transit = 0.2, p_slip = 0.1, p_guess = 0.2 }
//! ```
//!
//! Environment overrides, all optional: `APPRENTICE_BIND`, `APPRENTICE_PORT`,
//! `APPRENTICE_STORAGE_DIR`, `APPRENTICE_CATALOG_DIR`, `APPRENTICE_ADMIN_TOKEN`,
//! `APPRENTICE_SESSION_TTL_HOURS`, `APPRENTICE_MASTERY_THRESHOLD`,
//! `APPRENTICE_P_INIT`, `APPRENTICE_P_TRANSIT`, `APPRENTICE_P_SLIP`,
//! `APPRENTICE_P_GUESS`. The four BKT variables override the defaults only,
//! not per-component entries.

use std::collections::BTreeMap;
use std::path::PathBuf;

use apprentice_core::knowledge::{KnowledgeError, MasteryConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "APPRENTICE_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    /// Directory holding `transactions.jsonl` and `state.json`.
    pub storage_dir: PathBuf,
    /// Catalog directory; the embedded catalog when absent.
    pub catalog_dir: Option<PathBuf>,
    /// Bearer token for `/api/admin`; admin endpoints refuse every caller
    /// when unset.
    pub admin_token: Option<String>,
    pub session_ttl_hours: i64,
    pub mastery: MasteryConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            bind: "127.0.0.1".into(),
            port: 8080,
            storage_dir: PathBuf::from("apprentice-data"),
            catalog_dir: None,
            admin_token: None,
            session_ttl_hours: 12,
            mastery: MasteryConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file: {0}")]
    File(#[from] toml::de::Error),
    #[error("config file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("environment variable {name}: cannot parse `{value}`")]
    Env { name: String, value: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Mastery(#[from] KnowledgeError),
}

fn parse_env<T: std::str::FromStr>(name: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Env {
        name: name.to_string(),
        value: value.to_string(),
    })
}

impl Config {
    /// Layer `file` (TOML text, if any) and then `env` over the defaults.
    pub fn resolve(file: Option<&str>, env: &BTreeMap<String, String>) -> Result<Config, ConfigError> {
        let c = match file {
            Some(text) => toml::from_str(text)?,
            None => Config::default(),
        };
        c.with_env(env)
    }

    /// Layer JSON `text` and then `env` over the defaults.
    pub fn resolve_json(text: &str, env: &BTreeMap<String, String>) -> Result<Config, ConfigError> {
        serde_json::from_str::<Config>(text)?.with_env(env)
    }

    fn with_env(mut self, env: &BTreeMap<String, String>) -> Result<Config, ConfigError> {
        for (key, value) in env {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            match name {
                "BIND" => self.bind = value.clone(),
                "PORT" => self.port = parse_env(key, value)?,
                "STORAGE_DIR" => self.storage_dir = PathBuf::from(value),
                "CATALOG_DIR" => self.catalog_dir = Some(PathBuf::from(value)),
                "ADMIN_TOKEN" => self.admin_token = Some(value.clone()),
                "SESSION_TTL_HOURS" => self.session_ttl_hours = parse_env(key, value)?,
                "MASTERY_THRESHOLD" => self.mastery.threshold = parse_env(key, value)?,
                "P_INIT" => self.mastery.defaults.p_init = parse_env(key, value)?,
                "P_TRANSIT" => self.mastery.defaults.p_transit = parse_env(key, value)?,
                "P_SLIP" => self.mastery.defaults.p_slip = parse_env(key, value)?,
                "P_GUESS" => self.mastery.defaults.p_guess = parse_env(key, value)?,
                _ => log::warn!("ignoring unknown setting {key}"),
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Resolve from an optional file path and the process environment.
    pub fn load(path: Option<&std::path::Path>) -> Result<Config, crate::BoxError> {
        let env: BTreeMap<String, String> = std::env::vars().collect();
        let Some(path) = path else { return Ok(Config::resolve(None, &env)?) };
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(Config::resolve_json(&text, &env)?)
        } else {
            Ok(Config::resolve(Some(&text), &env)?)
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mastery.validate()?;
        if self.session_ttl_hours <= 0 {
            return Err(ConfigError::Invalid("session_ttl_hours must be positive".into()));
        }
        if self.admin_token.as_deref().is_some_and(str::is_empty) {
            return Err(ConfigError::Invalid("admin_token must not be empty".into()));
        }
        Ok(())
    }
}
