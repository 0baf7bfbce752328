//! BM25 with precomputed per-(term, document) partial scores.
//!
//! At build time every surviving term column holds
//! `idf · tf·(k1+1) / (tf + k1·(1 − b + b·len/avglen))`, so a query is a sum
//! of column lookups. Terms seen in fewer than `min_df` documents are dropped.

mod store;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use store::{FORMAT_VERSION, MATRIX_FILE, META_FILE, VOCAB_FILE};

pub const DEFAULT_K1: f64 = 1.5;
pub const DEFAULT_B: f64 = 0.75;
pub const DEFAULT_MIN_DF: usize = 5;

#[derive(Debug, Error)]
pub enum LexicalError {
    #[error("duplicate document key {0:?}")]
    DuplicateKey(String),
    #[error("checksum mismatch in {file}: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { file: &'static str, stored: u32, computed: u32 },
    #[error("index format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub min_df: usize,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: DEFAULT_K1, b: DEFAULT_B, min_df: DEFAULT_MIN_DF }
    }
}

/// Lowercase, then split on anything that is not alphanumeric (Unicode-aware).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lucene-style smoothed IDF.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    let (n, df) = (n_docs as f64, df as f64);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Sorted; position is the term id.
    pub terms: Vec<String>,
    pub doc_freq: Vec<usize>,
    pub min_df: usize,
    #[serde(skip)]
    lookup: HashMap<String, u32>,
}

impl Vocabulary {
    fn new(terms: Vec<String>, doc_freq: Vec<usize>, min_df: usize) -> Self {
        let lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { terms, doc_freq, min_df, lookup }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.lookup.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.lookup.contains_key(term)
    }
}

/// Compressed sparse columns: one column per term.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseScoreMatrix {
    pub n_docs: usize,
    /// `n_terms + 1` monotone offsets into `doc_ids`/`scores`.
    pub offsets: Vec<u64>,
    pub doc_ids: Vec<u32>,
    pub scores: Vec<f64>,
}

impl SparseScoreMatrix {
    pub fn n_terms(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn nnz(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn column(&self, term: u32) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.offsets[term as usize] as usize, self.offsets[term as usize + 1] as usize);
        (&self.doc_ids[lo..hi], &self.scores[lo..hi])
    }

    pub fn score(&self, term: u32, doc: u32) -> f64 {
        let (ids, scores) = self.column(term);
        ids.binary_search(&doc).map_or(0.0, |i| scores[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexicalIndex {
    pub vocabulary: Vocabulary,
    pub matrix: SparseScoreMatrix,
    pub doc_keys: Vec<String>,
    pub params: Bm25Params,
    pub avg_doc_len: f64,
}

impl LexicalIndex {
    pub fn n_docs(&self) -> usize {
        self.doc_keys.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocabulary.len()
    }

    /// Sum of partial scores over in-vocabulary query tokens (repeats count),
    /// sorted by score descending then key ascending. Zero scores are dropped.
    pub fn query(&self, text: &str, top_k: usize) -> Vec<(String, f64)> {
        let ids: Vec<u32> = tokenize(text).iter().filter_map(|t| self.vocabulary.term_id(t)).collect();
        self.query_term_ids(&ids, top_k)
    }

    pub fn query_term_ids(&self, term_ids: &[u32], top_k: usize) -> Vec<(String, f64)> {
        if term_ids.is_empty() || top_k == 0 {
            return Vec::new();
        }
        let mut acc = vec![0.0f64; self.n_docs()];
        let mut touched = Vec::new();
        for &t in term_ids {
            let (docs, scores) = self.matrix.column(t);
            for (&d, &s) in docs.iter().zip(scores) {
                if acc[d as usize] == 0.0 {
                    touched.push(d);
                }
                acc[d as usize] += s;
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let mut hits: Vec<(u32, f64)> = touched.into_iter().map(|d| (d, acc[d as usize])).filter(|h| h.1 > 0.0).collect();
        let cmp = |a: &(u32, f64), b: &(u32, f64)| {
            b.1.total_cmp(&a.1).then_with(|| self.doc_keys[a.0 as usize].cmp(&self.doc_keys[b.0 as usize]))
        };
        if hits.len() > top_k {
            hits.select_nth_unstable_by(top_k - 1, cmp);
            hits.truncate(top_k);
        }
        hits.sort_by(cmp);
        hits.into_iter().map(|(d, s)| (self.doc_keys[d as usize].clone(), s)).collect()
    }

    pub fn save(&self, dir: &std::path::Path) -> Result<(), LexicalError> {
        store::save(self, dir)
    }

    /// Reads the score matrix back `chunk_size` entries at a time.
    pub fn load(dir: &std::path::Path, chunk_size: usize) -> Result<Self, LexicalError> {
        store::load(dir, chunk_size)
    }
}

/// Builds an index; document length counts every token, including pruned ones.
pub fn build_index<I, K, T>(docs: I, params: Bm25Params) -> Result<LexicalIndex, LexicalError>
where
    I: IntoIterator<Item = (K, T)>,
    K: Into<String>,
    T: AsRef<str>,
{
    let mut doc_keys = Vec::new();
    let mut seen = HashSet::new();
    let mut doc_tf: Vec<Vec<(String, u32)>> = Vec::new();
    let mut doc_len = Vec::new();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();

    for (key, text) in docs {
        let key = key.into();
        if !seen.insert(key.clone()) {
            return Err(LexicalError::DuplicateKey(key));
        }
        let tokens = tokenize(text.as_ref());
        doc_len.push(tokens.len());
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_default() += 1;
        }
        for t in tf.keys() {
            *df.entry(t.clone()).or_default() += 1;
        }
        doc_tf.push(tf.into_iter().collect());
        doc_keys.push(key);
    }

    let n = doc_keys.len();
    let avg_doc_len = if n == 0 { 0.0 } else { doc_len.iter().sum::<usize>() as f64 / n as f64 };
    let (terms, freqs): (Vec<String>, Vec<usize>) = df.into_iter().filter(|(_, d)| *d >= params.min_df.max(1)).unzip();
    let vocabulary = Vocabulary::new(terms, freqs, params.min_df);

    let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vocabulary.len()];
    let idfs: Vec<f64> = vocabulary.doc_freq.iter().map(|&d| idf(n, d)).collect();
    for (doc, tf) in doc_tf.iter().enumerate() {
        let norm = if avg_doc_len > 0.0 { doc_len[doc] as f64 / avg_doc_len } else { 0.0 };
        let denom_base = params.k1 * (1.0 - params.b + params.b * norm);
        for (term, count) in tf {
            if let Some(id) = vocabulary.term_id(term) {
                let tf = *count as f64;
                let s = idfs[id as usize] * tf * (params.k1 + 1.0) / (tf + denom_base);
                columns[id as usize].push((doc as u32, s));
            }
        }
    }

    let mut offsets = Vec::with_capacity(columns.len() + 1);
    let mut doc_ids = Vec::new();
    let mut scores = Vec::new();
    offsets.push(0);
    for col in columns {
        for (d, s) in col {
            doc_ids.push(d);
            scores.push(s);
        }
        offsets.push(doc_ids.len() as u64);
    }

    Ok(LexicalIndex {
        vocabulary,
        matrix: SparseScoreMatrix { n_docs: n, offsets, doc_ids, scores },
        doc_keys,
        params,
        avg_doc_len,
    })
}
