use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use biolit_core::annotate::{Embedder, HashEmbedder};
use biolit_core::latency::{latency_report, LatencyLog, LatencyReport};
use biolit_core::lexical::{tokenize, LexicalIndex};
use biolit_core::shard::{ShardLocator, ShardManifest};
use biolit_core::vector::{rrf_fuse, FusionConfig, HybridResult, VectorIndex};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Semaphore;

use crate::layout::{load_index_dir, LoadedIndices};
use crate::{ServiceConfig, ServiceError, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scope {
    Captions,
    Articles,
    Images,
}

impl Scope {
    pub const ALL: [Scope; 3] = [Scope::Captions, Scope::Articles, Scope::Images];

    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Captions => "CAPTIONS",
            Scope::Articles => "ARTICLES",
            Scope::Images => "IMAGES",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scope::ALL.into_iter().find(|sc| sc.as_str() == s).ok_or_else(|| format!("unknown scope `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub scope: Scope,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub vector: Option<Vec<f32>>,
    pub k: usize,
    #[serde(default)]
    pub hydrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub key: String,
    pub fused_score: f64,
    pub lexical_rank: Option<usize>,
    pub vector_rank: Option<usize>,
    pub lexical_score: Option<f64>,
    pub vector_score: Option<f64>,
    /// Full `PairRecord` (captions, images) or `ArticleRecord` (articles).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<Value>,
}

impl From<HybridResult> for Hit {
    fn from(r: HybridResult) -> Self {
        Hit {
            key: r.key,
            fused_score: r.fused_score,
            lexical_rank: r.lexical_rank,
            vector_rank: r.vector_rank,
            lexical_score: r.lexical_score,
            vector_score: r.vector_score,
            record: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub schema_version: u32,
    pub scope: Scope,
    pub hits: Vec<Hit>,
    pub latency_ms: f64,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeStats {
    pub n_docs: usize,
    pub n_terms: usize,
    pub n_vectors: usize,
}

/// Index statistics. The top-level counts describe the caption scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
    pub n_docs: usize,
    pub n_terms: usize,
    pub n_vectors: usize,
    pub scopes: std::collections::BTreeMap<Scope, ScopeStats>,
    pub hydration: bool,
}

/// Request failure mapped onto an HTTP status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApiError::BadRequest(m) | ApiError::NotFound(m) | ApiError::Internal(m) => f.write_str(m),
        }
    }
}

/// Parse a request body. Unknown scopes are reported as not found; any other
/// schema violation is a bad request.
pub fn parse_search_request(body: &[u8], k_max: usize) -> Result<SearchRequest, ApiError> {
    let value: Value = serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("invalid JSON: {e}")))?;
    match value.get("scope") {
        Some(Value::String(s)) => {
            s.parse::<Scope>().map_err(ApiError::NotFound)?;
        }
        Some(_) => return Err(ApiError::BadRequest("`scope` must be a string".into())),
        None => return Err(ApiError::BadRequest("missing `scope`".into())),
    }
    let req: SearchRequest = serde_json::from_value(value).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    if req.k == 0 || req.k > k_max {
        return Err(ApiError::BadRequest(format!("k must be in 1..={k_max}, got {}", req.k)));
    }
    let text_present = req.text.as_deref().is_some_and(|t| !t.trim().is_empty());
    if !text_present && req.vector.is_none() {
        return Err(ApiError::BadRequest("request needs `text`, `vector` or both".into()));
    }
    if let Some(v) = &req.vector {
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(ApiError::BadRequest("`vector` must be a non-empty list of finite numbers".into()));
        }
    }
    Ok(req)
}

/// Immutable indices plus the shared latency log and hydration pool.
pub struct SearchService {
    indices: LoadedIndices,
    shards: Option<ShardLocator>,
    fusion: FusionConfig,
    k_max: usize,
    embedder: Option<Arc<dyn Embedder>>,
    hydration: Arc<Semaphore>,
    latency: LatencyLog,
}

impl SearchService {
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let indices = load_index_dir(&config.index_dir, config.load_chunk_entries)?;
        let shards = match &config.shard_manifest {
            Some(path) => {
                let load = |e: String| ServiceError::IndexLoad(format!("{}: {e}", path.display()));
                let manifest = ShardManifest::load(path).map_err(|e| load(e.to_string()))?;
                Some(ShardLocator::build(&manifest).map_err(|e| load(e.to_string()))?)
            }
            None => None,
        };
        let embedder = config
            .text_embedder
            .map(|c| Arc::new(HashEmbedder::new(c.dim, c.seed)) as Arc<dyn Embedder>);
        Ok(SearchService {
            indices,
            shards,
            fusion: FusionConfig { c: config.fusion_c, ..FusionConfig::default() },
            k_max: config.k_max,
            embedder,
            hydration: Arc::new(Semaphore::new(config.hydration_pool)),
            latency: LatencyLog::new(),
        })
    }

    /// Replace the server-side text embedder.
    pub fn with_embedder(mut self, embedder: Option<Arc<dyn Embedder>>) -> Self {
        self.embedder = embedder;
        self
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn health(&self) -> Health {
        let vec_len = |v: &Option<VectorIndex>| v.as_ref().map_or(0, VectorIndex::len);
        let mut scopes = std::collections::BTreeMap::new();
        let cap = &self.indices.captions;
        let captions = ScopeStats { n_docs: cap.lexical.n_docs(), n_terms: cap.lexical.n_terms(), n_vectors: vec_len(&cap.vectors) };
        scopes.insert(
            Scope::Images,
            ScopeStats { n_docs: cap.lexical.n_docs(), n_terms: cap.lexical.n_terms(), n_vectors: vec_len(&self.indices.image_vectors) },
        );
        if let Some(a) = &self.indices.articles {
            scopes.insert(
                Scope::Articles,
                ScopeStats { n_docs: a.lexical.n_docs(), n_terms: a.lexical.n_terms(), n_vectors: vec_len(&a.vectors) },
            );
        }
        scopes.insert(Scope::Captions, captions.clone());
        Health {
            schema_version: SCHEMA_VERSION,
            status: "ok".into(),
            n_docs: captions.n_docs,
            n_terms: captions.n_terms,
            n_vectors: captions.n_vectors,
            scopes,
            hydration: self.shards.is_some(),
        }
    }

    fn scope_indices(&self, scope: Scope) -> Result<(&LexicalIndex, Option<&VectorIndex>), ApiError> {
        match scope {
            Scope::Captions => Ok((&self.indices.captions.lexical, self.indices.captions.vectors.as_ref())),
            Scope::Images => Ok((&self.indices.captions.lexical, self.indices.image_vectors.as_ref())),
            Scope::Articles => self
                .indices
                .articles
                .as_ref()
                .map(|a| (&a.lexical, a.vectors.as_ref()))
                .ok_or_else(|| ApiError::NotFound("scope ARTICLES is not loaded".into())),
        }
    }

    /// Rank without hydration: the scope's lexical ranking and vector ranking,
    /// each `k` deep, fused by reciprocal rank.
    pub fn rank(&self, req: &SearchRequest) -> Result<Vec<Hit>, ApiError> {
        let (lex, vec) = self.scope_indices(req.scope)?;
        let text = req.text.as_deref().filter(|t| !t.trim().is_empty());
        let embedded;
        let query_vector = match (&req.vector, text, &self.embedder) {
            (Some(v), _, _) => Some(v.as_slice()),
            (None, Some(t), Some(e)) if vec.is_some() => {
                embedded = e.embed_text(t);
                Some(embedded.as_slice())
            }
            _ => None,
        };
        let lexical = text.map(|t| lex.query(t, req.k)).unwrap_or_default();
        let vector = match query_vector {
            Some(q) => {
                let idx = vec.ok_or_else(|| ApiError::BadRequest(format!("scope {} has no vector index", req.scope)))?;
                idx.knn(q, req.k).map_err(|e| ApiError::BadRequest(e.to_string()))?
            }
            None => Vec::new(),
        };
        Ok(rrf_fuse(&lexical, &vector, &self.fusion, req.k).into_iter().map(Hit::from).collect())
    }

    /// Read one record. Captions and images come from the shards, articles
    /// from the article record file.
    pub fn fetch_record(&self, scope: Scope, key: &str) -> Result<Option<Value>, ApiError> {
        let internal = |e: String| ApiError::Internal(format!("reading record `{key}`: {e}"));
        let to_value = |v: Result<Value, serde_json::Error>| v.map_err(|e| internal(e.to_string()));
        match scope {
            Scope::Captions | Scope::Images => {
                let shards = self
                    .shards
                    .as_ref()
                    .ok_or_else(|| ApiError::NotFound("no shard manifest configured for hydration".into()))?;
                match shards.fetch(key).map_err(|e| internal(e.to_string()))? {
                    Some(r) => Ok(Some(to_value(serde_json::to_value(r))?)),
                    None => Ok(None),
                }
            }
            Scope::Articles => {
                let store = self
                    .indices
                    .article_store
                    .as_ref()
                    .ok_or_else(|| ApiError::NotFound("no article records loaded".into()))?;
                match store.fetch(key).map_err(|e| internal(e.to_string()))? {
                    Some(r) => Ok(Some(to_value(serde_json::to_value(r))?)),
                    None => Ok(None),
                }
            }
        }
    }

    /// [`fetch_record`](Self::fetch_record) on the blocking pool, bounded by
    /// the hydration semaphore.
    pub async fn fetch_record_async(self: &Arc<Self>, scope: Scope, key: String) -> Result<Option<Value>, ApiError> {
        let permit = self.hydration.clone().acquire_owned().await.map_err(|e| ApiError::Internal(e.to_string()))?;
        let svc = Arc::clone(self);
        tokio::task::spawn_blocking(move || {
            let _permit = permit;
            svc.fetch_record(scope, &key)
        })
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
    }

    /// Full request: rank, hydrate if asked, record latency.
    pub async fn search(self: &Arc<Self>, req: SearchRequest) -> Result<SearchResponse, ApiError> {
        let started = Instant::now();
        let token_count = req.text.as_deref().map_or(0, |t| tokenize(t).len());
        let svc = Arc::clone(self);
        let ranked = req.clone();
        let mut hits = tokio::task::spawn_blocking(move || svc.rank(&ranked))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))??;
        if req.hydrate {
            let scope = req.scope;
            let fetches: Vec<_> = hits
                .iter()
                .map(|h| {
                    let svc = Arc::clone(self);
                    let key = h.key.clone();
                    tokio::spawn(async move { svc.fetch_record_async(scope, key).await })
                })
                .collect();
            for (hit, task) in hits.iter_mut().zip(fetches) {
                let record = task.await.map_err(|e| ApiError::Internal(e.to_string()))??;
                hit.record =
                    Some(record.ok_or_else(|| ApiError::Internal(format!("hit `{}` has no stored record", hit.key)))?);
            }
        }
        let latency_ms = started.elapsed().as_secs_f64() * 1e3;
        self.latency.record(req.scope.as_str(), token_count, latency_ms);
        Ok(SearchResponse { schema_version: SCHEMA_VERSION, scope: req.scope, hits, latency_ms, token_count })
    }

    /// Per-scope latency aggregates. Scopes with too little data report the
    /// reason instead of a fit.
    pub fn metrics(&self) -> Value {
        let mut scopes = serde_json::Map::new();
        for (scope, samples) in self.latency.snapshot() {
            let entry = match latency_report(&samples) {
                Ok(report) => report_json(samples.len(), &report),
                Err(e) => serde_json::json!({ "n_queries": samples.len(), "error": e.to_string() }),
            };
            scopes.insert(scope, entry);
        }
        serde_json::json!({ "schema_version": SCHEMA_VERSION, "scopes": scopes })
    }
}

fn report_json(n: usize, report: &LatencyReport) -> Value {
    let mut v = serde_json::to_value(report).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut v {
        m.insert("n_queries".into(), n.into());
    }
    v
}
