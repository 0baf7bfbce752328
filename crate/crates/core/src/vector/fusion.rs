use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{VectorError, VectorIndex};
use crate::lexical::LexicalIndex;

pub const DEFAULT_RRF_C: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub c: f64,
    pub lexical_weight: f64,
    pub vector_weight: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { c: DEFAULT_RRF_C, lexical_weight: 1.0, vector_weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridResult {
    pub key: String,
    /// 1-based.
    pub lexical_rank: Option<usize>,
    pub vector_rank: Option<usize>,
    pub lexical_score: Option<f64>,
    pub vector_score: Option<f64>,
    pub fused_score: f64,
}

/// Weighted reciprocal-rank fusion: Σ w / (c + rank) over the rankings a key
/// appears in. Sorted by fused score descending, then key.
pub fn rrf_fuse(
    lexical: &[(String, f64)],
    vector: &[(String, f64)],
    config: &FusionConfig,
    k: usize,
) -> Vec<HybridResult> {
    let mut by_key: BTreeMap<&str, HybridResult> = BTreeMap::new();
    let blank = |key: &str| HybridResult {
        key: key.to_string(),
        lexical_rank: None,
        vector_rank: None,
        lexical_score: None,
        vector_score: None,
        fused_score: 0.0,
    };
    for (rank, (key, score)) in lexical.iter().enumerate() {
        let r = by_key.entry(key).or_insert_with(|| blank(key));
        r.lexical_rank = Some(rank + 1);
        r.lexical_score = Some(*score);
        r.fused_score += config.lexical_weight / (config.c + (rank + 1) as f64);
    }
    for (rank, (key, score)) in vector.iter().enumerate() {
        let r = by_key.entry(key).or_insert_with(|| blank(key));
        r.vector_rank = Some(rank + 1);
        r.vector_score = Some(*score);
        r.fused_score += config.vector_weight / (config.c + (rank + 1) as f64);
    }
    let mut out: Vec<HybridResult> = by_key.into_values().collect();
    out.sort_by(|a, b| b.fused_score.total_cmp(&a.fused_score).then_with(|| a.key.cmp(&b.key)));
    out.truncate(k);
    out
}

/// Text goes to the lexical index, the vector to knn; each contributes its
/// top `k` before fusion.
pub fn hybrid_query(
    lex: &LexicalIndex,
    vec: &VectorIndex,
    text: Option<&str>,
    query_vector: Option<&[f32]>,
    k: usize,
    config: &FusionConfig,
) -> Result<Vec<HybridResult>, VectorError> {
    if text.is_none() && query_vector.is_none() {
        return Err(VectorError::EmptyQuery);
    }
    let lexical = text.map(|t| lex.query(t, k)).unwrap_or_default();
    let vector = match query_vector {
        Some(q) => vec.knn(q, k)?,
        None => Vec::new(),
    };
    Ok(rrf_fuse(&lexical, &vector, config, k))
}
