use std::net::SocketAddr;
use std::path::PathBuf;

use arcast::types::DEFAULT_GRACE_DAYS;
use thiserror::Error;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_MODEL_DIR: &str = "models";
pub const DEFAULT_BODY_LIMIT: usize = 8 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub model_dir: PathBuf,
    pub grace_days: u32,
    /// Bearer token required on every route except health. `None` disables auth.
    pub token: Option<String>,
    pub body_limit: usize,
    pub log_level: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{var}: {detail}")]
    Invalid { var: &'static str, detail: String },
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: DEFAULT_BIND.parse().expect("valid default"),
            model_dir: PathBuf::from(DEFAULT_MODEL_DIR),
            grace_days: DEFAULT_GRACE_DAYS,
            token: None,
            body_limit: DEFAULT_BODY_LIMIT,
            log_level: "info".into(),
        }
    }
}

impl ServiceConfig {
    /// Reads `CF_BIND`, `CF_MODEL_DIR`, `CF_TOKEN`, `CF_GRACE_DAYS`,
    /// `CF_BODY_LIMIT` and `CF_LOG`.
    pub fn from_env() -> Result<ServiceConfig, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<ServiceConfig, ConfigError> {
        let mut cfg = ServiceConfig::default();
        if let Some(v) = get("CF_BIND") {
            cfg.bind = v.parse().map_err(|e| ConfigError::Invalid {
                var: "CF_BIND",
                detail: format!("{v:?}: {e}"),
            })?;
        }
        if let Some(v) = get("CF_MODEL_DIR") {
            cfg.model_dir = PathBuf::from(v);
        }
        cfg.token = get("CF_TOKEN").filter(|t| !t.is_empty());
        if let Some(v) = get("CF_GRACE_DAYS") {
            cfg.grace_days = v.trim().parse().map_err(|_| ConfigError::Invalid {
                var: "CF_GRACE_DAYS",
                detail: format!("expected a non-negative integer, got {v:?}"),
            })?;
        }
        if let Some(v) = get("CF_BODY_LIMIT") {
            cfg.body_limit = v.trim().parse().map_err(|_| ConfigError::Invalid {
                var: "CF_BODY_LIMIT",
                detail: format!("expected a byte count, got {v:?}"),
            })?;
        }
        if let Some(v) = get("CF_LOG") {
            cfg.log_level = v;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn lookup(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let map: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| map.get(k).cloned()
    }

    #[test]
    fn defaults() {
        let cfg = ServiceConfig::from_lookup(lookup(&[])).unwrap();
        assert_eq!(cfg, ServiceConfig::default());
        assert_eq!(cfg.grace_days, 7);
    }

    #[test]
    fn overrides() {
        let cfg = ServiceConfig::from_lookup(lookup(&[
            ("CF_BIND", "0.0.0.0:9000"),
            ("CF_MODEL_DIR", "/tmp/m"),
            ("CF_TOKEN", "s3cret"),
            ("CF_GRACE_DAYS", "0"),
        ]))
        .unwrap();
        assert_eq!(cfg.bind.port(), 9000);
        assert_eq!(cfg.token.as_deref(), Some("s3cret"));
        assert_eq!(cfg.grace_days, 0);
        assert_eq!(cfg.model_dir, PathBuf::from("/tmp/m"));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ServiceConfig::from_lookup(lookup(&[("CF_BIND", "nope")])).is_err());
        assert!(ServiceConfig::from_lookup(lookup(&[("CF_GRACE_DAYS", "-1")])).is_err());
    }
}
