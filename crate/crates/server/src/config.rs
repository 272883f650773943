use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hapticmap_core::agent::{ConfigError, ProviderConfig};
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8787;
pub const DEFAULT_HOST: &str = "127.0.0.1";

#[derive(Debug, Error)]
pub enum ServerConfigError {
    #[error("reading config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid value for {key}: {value:?}")]
    Invalid { key: &'static str, value: String },
    #[error(transparent)]
    Provider(#[from] ConfigError),
}

/// Service settings. The optional TOML file uses the environment variable
/// names as keys; the environment wins over the file.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub cache_dir: Option<PathBuf>,
    pub overpass_url: Option<String>,
    pub nominatim_url: Option<String>,
    pub cors_origin: Option<String>,
    pub provider: ProviderConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            host: DEFAULT_HOST.to_string(),
            port: DEFAULT_PORT,
            cache_dir: None,
            overpass_url: None,
            nominatim_url: None,
            cors_origin: None,
            provider: ProviderConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "HOST",
    "PORT",
    "CACHE_DIR",
    "OVERPASS_URL",
    "NOMINATIM_URL",
    "CORS_ORIGIN",
    "AGENT_PROVIDER",
    "AGENT_ENDPOINT",
    "AGENT_MODEL",
    "AGENT_API_KEY",
    "AGENT_TIMEOUT_MS",
    "AGENT_RETRIES",
    "AGENT_MOCK_DELAY_MS",
];

impl ServerConfig {
    /// File (if any), then environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ServerConfigError> {
        let mut values = match path {
            Some(p) => read_file(p)?,
            None => BTreeMap::new(),
        };
        for key in KEYS {
            if let Ok(v) = std::env::var(key) {
                values.insert((*key).to_string(), v);
            }
        }
        Self::from_values(&values)
    }

    pub fn from_values(values: &BTreeMap<String, String>) -> Result<Self, ServerConfigError> {
        let mut cfg = Self::default();
        let get = |k: &str| values.get(k).map(|v| v.trim()).filter(|v| !v.is_empty());
        let num = |key: &'static str| -> Result<Option<u64>, ServerConfigError> {
            get(key)
                .map(|v| {
                    v.parse::<u64>().map_err(|_| ServerConfigError::Invalid {
                        key,
                        value: v.to_string(),
                    })
                })
                .transpose()
        };
        if let Some(p) = num("PORT")? {
            cfg.port = u16::try_from(p).map_err(|_| ServerConfigError::Invalid {
                key: "PORT",
                value: p.to_string(),
            })?;
        }
        if let Some(h) = get("HOST") {
            cfg.host = h.to_string();
        }
        cfg.cache_dir = get("CACHE_DIR").map(PathBuf::from);
        cfg.overpass_url = get("OVERPASS_URL").map(str::to_string);
        cfg.nominatim_url = get("NOMINATIM_URL").map(str::to_string);
        cfg.cors_origin = get("CORS_ORIGIN").map(str::to_string);
        if let Some(kind) = get("AGENT_PROVIDER") {
            cfg.provider.provider_kind = kind.parse()?;
        }
        if let Some(v) = get("AGENT_ENDPOINT") {
            cfg.provider.endpoint = v.to_string();
        }
        if let Some(v) = get("AGENT_MODEL") {
            cfg.provider.model_name = v.to_string();
        }
        if let Some(v) = get("AGENT_API_KEY") {
            cfg.provider.api_key = v.to_string();
        }
        if let Some(v) = num("AGENT_TIMEOUT_MS")? {
            cfg.provider.timeout_ms = v;
        }
        if let Some(v) = num("AGENT_RETRIES")? {
            cfg.provider.retries = v.min(10) as u32;
        }
        if let Some(v) = num("AGENT_MOCK_DELAY_MS")? {
            cfg.provider.mock_delay_ms = v;
        }
        cfg.provider.validate()?;
        Ok(cfg)
    }
}

fn read_file(path: &Path) -> Result<BTreeMap<String, String>, ServerConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ServerConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ServerConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = BTreeMap::new();
    for (k, v) in table {
        let value = match v {
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Boolean(b) => b.to_string(),
            other => {
                return Err(ServerConfigError::Parse {
                    path: path.to_path_buf(),
                    message: format!("{k}: unsupported value {other}"),
                })
            }
        };
        if !KEYS.contains(&k.as_str()) {
            return Err(ServerConfigError::Parse {
                path: path.to_path_buf(),
                message: format!("unknown key {k}"),
            });
        }
        out.insert(k, value);
    }
    Ok(out)
}
