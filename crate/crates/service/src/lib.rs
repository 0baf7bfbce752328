//! HTTP search over caption, image and article indices.
//!
//! Endpoints: `GET /health`, `POST /search`, `GET /record/{key}?scope=`,
//! `GET /metrics`. All responses are JSON and carry `schema_version`.

mod config;
mod http;
pub mod layout;
mod search;

pub use config::{
    ServiceConfig, TextEmbedderConfig, DEFAULT_BIND, DEFAULT_HYDRATION_POOL, DEFAULT_K_MAX, ENV_BIND, ENV_INDEX_DIR,
    ENV_PORT, ENV_SHARD_MANIFEST,
};
pub use http::{router, serve, serve_with, ServiceHandle};
pub use layout::{build_index_dir, load_index_dir, ArticleStore, BuildSummary, LoadedIndices, ScopeIndices};
pub use search::{parse_search_request, ApiError, Health, Hit, Scope, ScopeStats, SearchRequest, SearchResponse, SearchService};

use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("failed to load index: {0}")]
    IndexLoad(String),
    #[error("failed to build index: {0}")]
    IndexBuild(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
