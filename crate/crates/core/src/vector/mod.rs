//! Exact cosine search over unit-normalized embeddings, and reciprocal-rank
//! fusion with the lexical index.

mod fusion;
mod store;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::EmbeddingMatrix;

pub use fusion::{hybrid_query, rrf_fuse, FusionConfig, HybridResult, DEFAULT_RRF_C};
pub use store::{FORMAT_VERSION, KEYS_FILE, VECTORS_FILE};

#[derive(Debug, Error)]
pub enum VectorError {
    #[error("zero vector for key {0:?}")]
    ZeroVector(String),
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("expected {expected} keys, got {found}")]
    KeyCountMismatch { expected: usize, found: usize },
    #[error("query has dimension {found}, index has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("query has neither text nor vector")]
    EmptyQuery,
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("index format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Modality {
    Image,
    Caption,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    pub dims: usize,
    /// Row-major, each row unit L2 norm.
    pub values: Vec<f32>,
    pub keys: Vec<String>,
    pub modality: Modality,
}

fn l2(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity computed in f64.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let n = l2(a.iter().map(|&x| x as f64)) * l2(b.iter().map(|&x| x as f64));
    if n == 0.0 {
        0.0
    } else {
        dot / n
    }
}

pub fn build_vector_index(
    embeddings: &EmbeddingMatrix,
    keys: &[String],
    modality: Modality,
) -> Result<VectorIndex, VectorError> {
    if keys.len() != embeddings.rows() {
        return Err(VectorError::KeyCountMismatch { expected: embeddings.rows(), found: keys.len() });
    }
    let mut seen = HashSet::new();
    let mut values = Vec::with_capacity(embeddings.values.len());
    for (i, key) in keys.iter().enumerate() {
        if !seen.insert(key.as_str()) {
            return Err(VectorError::DuplicateKey(key.clone()));
        }
        let row = embeddings.row(i);
        let norm = l2(row.iter().map(|&x| x as f64));
        if norm == 0.0 {
            return Err(VectorError::ZeroVector(key.clone()));
        }
        values.extend(row.iter().map(|&x| (x as f64 / norm) as f32));
    }
    Ok(VectorIndex { dims: embeddings.dims, values, keys: keys.to_vec(), modality })
}

impl VectorIndex {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn position(&self, key: &str) -> Option<usize> {
        self.keys.iter().position(|k| k == key)
    }

    /// Exact top-k by cosine similarity, ties by key ascending.
    pub fn knn(&self, query: &[f32], k: usize) -> Result<Vec<(String, f64)>, VectorError> {
        if query.len() != self.dims {
            return Err(VectorError::DimensionMismatch { expected: self.dims, found: query.len() });
        }
        let qn = l2(query.iter().map(|&x| x as f64));
        if qn == 0.0 {
            return Err(VectorError::ZeroVector("<query>".into()));
        }
        let q: Vec<f64> = query.iter().map(|&x| x as f64 / qn).collect();
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .map(|i| {
                let dot: f64 = self.row(i).iter().zip(&q).map(|(&a, b)| a as f64 * b).sum();
                (i, dot.clamp(-1.0, 1.0))
            })
            .collect();
        let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then_with(|| self.keys[a.0].cmp(&self.keys[b.0]));
        if k == 0 {
            return Ok(Vec::new());
        }
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored.into_iter().map(|(i, s)| (self.keys[i].clone(), s)).collect())
    }

    pub fn save(&self, dir: &std::path::Path) -> Result<(), VectorError> {
        store::save(self, dir)
    }

    pub fn load(dir: &std::path::Path) -> Result<Self, VectorError> {
        store::load(dir)
    }
}
