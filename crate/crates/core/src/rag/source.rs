use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::{json, Value};

use super::RagError;
use crate::corpus::ArticleRecord;
use crate::lexical::{build_index, Bm25Params, LexicalIndex};
use crate::vector::{hybrid_query, FusionConfig, VectorIndex};

/// Where the chain finds full-text articles.
pub trait ArticleSource: Send + Sync {
    /// Up to `n` article keys, most relevant first.
    fn search(&self, query: &str, query_vector: Option<&[f32]>, n: usize) -> Result<Vec<String>, RagError>;
    fn article_text(&self, key: &str) -> Result<String, RagError>;
}

/// Articles and their full-text index held in memory.
pub struct InProcessArticles {
    pub index: LexicalIndex,
    pub vectors: Option<VectorIndex>,
    pub fusion: FusionConfig,
    texts: BTreeMap<String, String>,
}

impl InProcessArticles {
    pub fn new(index: LexicalIndex, texts: BTreeMap<String, String>) -> Self {
        InProcessArticles { index, vectors: None, fusion: FusionConfig::default(), texts }
    }

    /// Indexes each article's title, abstract and body as one document.
    pub fn from_records(records: &[ArticleRecord], params: Bm25Params) -> Result<Self, RagError> {
        let texts: BTreeMap<String, String> =
            records.iter().map(|r| (r.metadata.accession_id.clone(), r.indexable_text())).collect();
        let index = build_index(records.iter().map(|r| (r.metadata.accession_id.clone(), r.indexable_text())), params)
            .map_err(|e| RagError::Retrieval(e.to_string()))?;
        Ok(InProcessArticles::new(index, texts))
    }

    pub fn with_vectors(mut self, vectors: VectorIndex) -> Self {
        self.vectors = Some(vectors);
        self
    }
}

impl ArticleSource for InProcessArticles {
    fn search(&self, query: &str, query_vector: Option<&[f32]>, n: usize) -> Result<Vec<String>, RagError> {
        match (&self.vectors, query_vector) {
            (Some(v), Some(q)) => Ok(hybrid_query(&self.index, v, Some(query), Some(q), n, &self.fusion)
                .map_err(|e| RagError::Retrieval(e.to_string()))?
                .into_iter()
                .map(|h| h.key)
                .collect()),
            _ => Ok(self.index.query(query, n).into_iter().map(|h| h.0).collect()),
        }
    }

    fn article_text(&self, key: &str) -> Result<String, RagError> {
        self.texts.get(key).cloned().ok_or_else(|| RagError::Retrieval(format!("unknown article {key}")))
    }
}

/// Client for a running search service's ARTICLES scope.
pub struct ServiceArticles {
    base_url: String,
    agent: ureq::Agent,
}

impl ServiceArticles {
    pub fn new(base_url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build()
            .into();
        ServiceArticles { base_url: base_url.into().trim_end_matches('/').to_string(), agent }
    }

    fn fetch(&self, resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<Value, RagError> {
        let mut resp = resp.map_err(|e| RagError::Retrieval(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| RagError::Retrieval(e.to_string()))?;
        if status != 200 {
            return Err(RagError::Retrieval(format!("service returned {status}: {body}")));
        }
        serde_json::from_str(&body).map_err(|e| RagError::Retrieval(e.to_string()))
    }
}

impl ArticleSource for ServiceArticles {
    fn search(&self, query: &str, query_vector: Option<&[f32]>, n: usize) -> Result<Vec<String>, RagError> {
        let body = json!({"scope": "ARTICLES", "text": query, "vector": query_vector, "k": n, "hydrate": false});
        let v = self.fetch(self.agent.post(&format!("{}/search", self.base_url)).send_json(&body))?;
        let hits = v["hits"].as_array().ok_or_else(|| RagError::Retrieval("response without hits".into()))?;
        Ok(hits.iter().filter_map(|h| h["key"].as_str().map(str::to_string)).collect())
    }

    fn article_text(&self, key: &str) -> Result<String, RagError> {
        let url = format!("{}/record/{}?scope=ARTICLES", self.base_url, key);
        let v = self.fetch(self.agent.get(&url).call())?;
        let record: ArticleRecord = serde_json::from_value(v["record"].clone())
            .map_err(|e| RagError::Retrieval(format!("bad article record: {e}")))?;
        Ok(record.indexable_text())
    }
}
