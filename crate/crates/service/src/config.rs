use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_K_MAX: usize = 1000;
pub const DEFAULT_HYDRATION_POOL: usize = 8;

/// Environment variables read by [`ServiceConfig::apply_env`].
pub const ENV_INDEX_DIR: &str = "BIOLIT_INDEX_DIR";
pub const ENV_SHARD_MANIFEST: &str = "BIOLIT_SHARD_MANIFEST";
pub const ENV_BIND: &str = "BIOLIT_BIND";
pub const ENV_PORT: &str = "BIOLIT_PORT";

/// Parameters of the deterministic hash embedder used for server-side text
/// query embedding. Must match the embedder the vector indices were built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEmbedderConfig {
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub index_dir: PathBuf,
    /// Shard manifest used for record hydration. Without it, captions and
    /// images cannot be hydrated.
    pub shard_manifest: Option<PathBuf>,
    pub k_max: usize,
    pub fusion_c: f64,
    /// Maximum number of concurrent record reads.
    pub hydration_pool: usize,
    /// Matrix entries read per chunk when loading lexical indices.
    pub load_chunk_entries: usize,
    /// When set, text-only queries are also embedded and searched by vector.
    pub text_embedder: Option<TextEmbedderConfig>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: DEFAULT_BIND.to_string(),
            index_dir: PathBuf::from("index"),
            shard_manifest: None,
            k_max: DEFAULT_K_MAX,
            fusion_c: biolit_core::vector::DEFAULT_RRF_C,
            hydration_pool: DEFAULT_HYDRATION_POOL,
            load_chunk_entries: 1 << 16,
            text_embedder: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Override paths and the listen address from `lookup` (normally
    /// `std::env::var`). The port variable replaces only the port of `bind`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(v) = lookup(ENV_INDEX_DIR) {
            self.index_dir = PathBuf::from(v);
        }
        if let Some(v) = lookup(ENV_SHARD_MANIFEST) {
            self.shard_manifest = Some(PathBuf::from(v));
        }
        if let Some(v) = lookup(ENV_BIND) {
            self.bind = v;
        }
        if let Some(v) = lookup(ENV_PORT) {
            let port: u16 = v.parse().map_err(|_| ServiceError::Config(format!("{ENV_PORT}=`{v}` is not a port")))?;
            let host = self.bind.rsplit_once(':').map(|(h, _)| h).unwrap_or(&self.bind);
            self.bind = format!("{host}:{port}");
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.k_max == 0 {
            return Err(ServiceError::Config("k_max must be at least 1".into()));
        }
        if self.hydration_pool == 0 {
            return Err(ServiceError::Config("hydration_pool must be at least 1".into()));
        }
        if !(self.fusion_c.is_finite() && self.fusion_c >= 0.0) {
            return Err(ServiceError::Config("fusion_c must be a non-negative number".into()));
        }
        Ok(())
    }
}
