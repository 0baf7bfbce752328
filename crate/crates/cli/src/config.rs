//! Pipeline configuration file (TOML). Every table and key is optional;
//! command-line flags override file values.

use std::path::{Path, PathBuf};

use biolit_core::annotate::{DEFAULT_COMPONENTS, DEFAULT_K, DEFAULT_MAX_ITERS, DEFAULT_SAMPLE_SIZE};
use biolit_core::lexical::{Bm25Params, DEFAULT_B, DEFAULT_K1, DEFAULT_MIN_DF};
use biolit_core::rag::{
    ChainOptions, ClockKind, SummaryStrategy, DEFAULT_ANSWER_TOKENS, DEFAULT_QUERY_TOKENS, DEFAULT_SUMMARY_TOKENS,
};
use biolit_core::shard::DEFAULT_RECORDS_PER_SHARD;
use biolit_service::ServiceConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_EMBED_DIM: usize = 64;
pub const DEFAULT_CONTEXT_WINDOW: usize = 4096;
pub const DEFAULT_RAG_N: usize = 5;
pub const MAX_EMBED_DIM: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub shards: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub packages: Option<PathBuf>,
    pub file_list: Option<PathBuf>,
    pub entrez: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShardConfig {
    pub size: usize,
    pub image_root: Option<PathBuf>,
}

impl Default for ShardConfig {
    fn default() -> Self {
        ShardConfig { size: DEFAULT_RECORDS_PER_SHARD, image_root: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Config {
    pub k1: f64,
    pub b: f64,
    pub min_df: usize,
}

impl Default for Bm25Config {
    fn default() -> Self {
        Bm25Config { k1: DEFAULT_K1, b: DEFAULT_B, min_df: DEFAULT_MIN_DF }
    }
}

impl Bm25Config {
    pub fn params(&self) -> Bm25Params {
        Bm25Params { k1: self.k1, b: self.b, min_df: self.min_df }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateConfig {
    pub embed_dim: usize,
    pub pca_components: usize,
    pub k: usize,
    pub max_iters: usize,
    pub sample_size: usize,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            embed_dim: DEFAULT_EMBED_DIM,
            pca_components: DEFAULT_COMPONENTS,
            k: DEFAULT_K,
            max_iters: DEFAULT_MAX_ITERS,
            sample_size: DEFAULT_SAMPLE_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub endpoint: Option<String>,
    pub model: String,
    pub context_window: usize,
    /// Name of the environment variable holding the API key.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: None,
            model: "default".into(),
            context_window: DEFAULT_CONTEXT_WINDOW,
            api_key_env: None,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RagConfig {
    pub n: usize,
    pub summary_max_tokens: usize,
    pub query_max_tokens: usize,
    pub answer_max_tokens: usize,
    pub strategy: SummaryStrategy,
    pub clock: ClockKind,
}

impl Default for RagConfig {
    fn default() -> Self {
        RagConfig {
            n: DEFAULT_RAG_N,
            summary_max_tokens: DEFAULT_SUMMARY_TOKENS,
            query_max_tokens: DEFAULT_QUERY_TOKENS,
            answer_max_tokens: DEFAULT_ANSWER_TOKENS,
            strategy: SummaryStrategy::Refine,
            clock: ClockKind::Logical,
        }
    }
}

impl RagConfig {
    pub fn options(&self) -> ChainOptions {
        ChainOptions {
            summary_max_tokens: self.summary_max_tokens,
            query_max_tokens: self.query_max_tokens,
            answer_max_tokens: self.answer_max_tokens,
            strategy: self.strategy,
            clock: self.clock,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub paths: PathsConfig,
    pub shard: ShardConfig,
    pub bm25: Bm25Config,
    pub annotate: AnnotateConfig,
    pub service: ServiceConfig,
    pub llm: LlmConfig,
    pub rag: RagConfig,
}

fn range_err(what: &str, rule: &str) -> CliError {
    CliError::Config(format!("{what} must be {rule}"))
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.shard.size == 0 {
            return Err(range_err("shard.size", "at least 1"));
        }
        let b = &self.bm25;
        if !(b.k1.is_finite() && b.k1 >= 0.0) {
            return Err(range_err("bm25.k1", "a non-negative number"));
        }
        if !(0.0..=1.0).contains(&b.b) {
            return Err(range_err("bm25.b", "in [0, 1]"));
        }
        if b.min_df == 0 {
            return Err(range_err("bm25.min_df", "at least 1"));
        }
        let a = &self.annotate;
        if a.embed_dim == 0 || a.embed_dim > MAX_EMBED_DIM {
            return Err(range_err("annotate.embed_dim", "in 1..=4096"));
        }
        if a.pca_components == 0 || a.pca_components > a.embed_dim {
            return Err(range_err("annotate.pca_components", "in 1..=annotate.embed_dim"));
        }
        if a.k == 0 {
            return Err(range_err("annotate.k", "at least 1"));
        }
        if a.max_iters == 0 {
            return Err(range_err("annotate.max_iters", "at least 1"));
        }
        if a.sample_size == 0 {
            return Err(range_err("annotate.sample_size", "at least 1"));
        }
        if self.llm.context_window == 0 {
            return Err(range_err("llm.context_window", "at least 1"));
        }
        if self.llm.timeout_secs == 0 {
            return Err(range_err("llm.timeout_secs", "at least 1"));
        }
        let r = &self.rag;
        if r.n == 0 {
            return Err(range_err("rag.n", "at least 1"));
        }
        if r.summary_max_tokens == 0 || r.query_max_tokens == 0 || r.answer_max_tokens == 0 {
            return Err(range_err("rag token caps", "at least 1"));
        }
        self.service.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Annotation is only reproducible with an explicit seed.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required: pass --seed or set `seed` in the config file".into()))
    }
}
