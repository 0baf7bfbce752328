//! WebDataset-style tar shards of pair records.
//!
//! Each record is stored as two consecutive members, `<pair_id>.json`
//! (canonical JSON) and `<pair_id>.img` (raw image bytes, possibly empty).
//! A `manifest.json` next to the shards lists them in order.

mod filter;
mod instructions;
mod reader;
mod writer;

pub use filter::{Clause, FilterOp, FilterPredicate};
pub use instructions::{
    default_brief_pool, default_detailed_pool, make_instructions, word_count, InstructionRecord,
    BRIEF_WORD_LIMIT,
};
pub use reader::{stream_shards, MemberLocation, ShardLocator, ShardStream};
pub use writer::{write_shards, ShardWriter};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RECORDS_PER_SHARD: usize = 10_000;
pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ShardError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate pair id `{0}`")]
    DuplicatePairId(String),
    #[error("pair id `{0}` cannot be used as a tar member name")]
    InvalidPairId(String),
    #[error("corrupt shard {shard}: {message}")]
    CorruptShard { shard: String, message: String },
    #[error("filter schema error: {0}")]
    Schema(String),
    #[error("instruction pool `{0}` is empty")]
    EmptyPool(&'static str),
    #[error("records_per_shard must be at least 1")]
    ZeroShardSize,
    #[error("unsupported manifest schema version {0}")]
    VersionMismatch(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardManifest {
    /// Shard file names relative to the manifest directory, in write order.
    pub shard_paths: Vec<String>,
    pub shard_record_counts: Vec<usize>,
    pub records_per_shard: usize,
    pub total_records: usize,
    pub schema_version: u32,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ShardManifest {
    pub fn load(path: &Path) -> Result<Self, ShardError> {
        let mut m: ShardManifest = serde_json::from_slice(&fs::read(path)?)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(ShardError::VersionMismatch(m.schema_version));
        }
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn shard_path(&self, i: usize) -> PathBuf {
        self.base_dir.join(&self.shard_paths[i])
    }

    /// Every shard but the last is full and the counts add up.
    pub fn is_consistent(&self) -> bool {
        let n = self.shard_record_counts.len();
        n == self.shard_paths.len()
            && self.shard_record_counts.iter().sum::<usize>() == self.total_records
            && self.shard_record_counts.iter().enumerate().all(|(i, &c)| {
                if i + 1 < n {
                    c == self.records_per_shard
                } else {
                    c >= 1 && c <= self.records_per_shard
                }
            })
    }
}
