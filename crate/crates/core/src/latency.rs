//! Query latency logging, per-token-count aggregation and a linear trend fit,
//! plus a synthetic lexical benchmark.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexical::{build_index, tokenize, Bm25Params, LexicalIndex};

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("need at least 2 distinct token counts, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub token_count: usize,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub token_count: usize,
    pub n: usize,
    pub mean_ms: f64,
    /// Standard error of the mean; 0 for a single sample.
    pub stderr_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub rows: Vec<LatencyRow>,
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of mean latency with token count. NaN when the
    /// means have zero variance; see `r_defined`.
    pub r: f64,
    pub r_defined: bool,
    pub overall_mean_ms: f64,
    pub overall_stderr_ms: f64,
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Groups samples by token count and fits `mean_ms = slope·tokens + intercept`
/// by least squares over the group means.
pub fn latency_report(samples: &[LatencySample]) -> Result<LatencyReport, LatencyError> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.token_count).or_default().push(s.latency_ms);
    }
    if groups.len() < 2 {
        return Err(LatencyError::InsufficientData(groups.len()));
    }
    let rows: Vec<LatencyRow> = groups
        .iter()
        .map(|(&token_count, xs)| {
            let (mean_ms, stderr_ms) = mean_stderr(xs);
            LatencyRow { token_count, n: xs.len(), mean_ms, stderr_ms }
        })
        .collect();

    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.token_count as f64).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.mean_ms).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for r in &rows {
        let (dx, dy) = (r.token_count as f64 - mx, r.mean_ms - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let slope = sxy / sxx;
    let r_defined = syy > 0.0;
    let r = if r_defined { sxy / (sxx * syy).sqrt() } else { f64::NAN };
    let all: Vec<f64> = samples.iter().map(|s| s.latency_ms).collect();
    let (overall_mean_ms, overall_stderr_ms) = mean_stderr(&all);
    Ok(LatencyReport { rows, slope, intercept: my - slope * mx, r, r_defined, overall_mean_ms, overall_stderr_ms })
}

/// Thread-safe per-scope sample log.
#[derive(Debug, Default)]
pub struct LatencyLog {
    inner: Mutex<BTreeMap<String, Vec<LatencySample>>>,
}

impl LatencyLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, scope: &str, token_count: usize, latency_ms: f64) {
        let mut map = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(scope.to_string()).or_default().push(LatencySample { token_count, latency_ms });
    }

    pub fn snapshot(&self) -> BTreeMap<String, Vec<LatencySample>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n_docs: usize,
    pub vocab: usize,
    pub doc_len: (usize, usize),
    pub max_query_tokens: usize,
    pub queries_per_length: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n_docs: 10_000,
            vocab: 5_000,
            doc_len: (40, 160),
            max_query_tokens: 64,
            queries_per_length: 40,
            seed: 7,
        }
    }
}

fn zipf_word(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    let u: f64 = rng.random();
    let rank = ((vocab as f64).powf(u) as usize).clamp(1, vocab);
    format!("t{rank}")
}

pub fn synthetic_corpus(config: &BenchConfig) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.n_docs)
        .map(|i| {
            let len = rng.random_range(config.doc_len.0..=config.doc_len.1);
            let words: Vec<String> = (0..len).map(|_| zipf_word(&mut rng, config.vocab)).collect();
            (format!("doc{i:06}"), words.join(" "))
        })
        .collect()
}

/// Times `queries_per_length` queries at each length 1..=max against the index.
/// Query words are drawn from the indexed vocabulary.
pub fn bench_queries(index: &LexicalIndex, config: &BenchConfig, top_k: usize) -> Vec<LatencySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
    let terms = &index.vocabulary.terms;
    let mut samples = Vec::new();
    if terms.is_empty() {
        return samples;
    }
    // Warm-up.
    for _ in 0..20 {
        let q = terms[rng.random_range(0..terms.len())].clone();
        std::hint::black_box(index.query(&q, top_k));
    }
    for _ in 0..config.queries_per_length {
        for len in 1..=config.max_query_tokens {
            let query: Vec<&str> = (0..len).map(|_| terms[rng.random_range(0..terms.len())].as_str()).collect();
            let query = query.join(" ");
            let start = Instant::now();
            let hits = index.query(&query, top_k);
            let ms = start.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(hits);
            samples.push(LatencySample { token_count: tokenize(&query).len(), latency_ms: ms });
        }
    }
    samples
}

pub fn run_benchmark(config: &BenchConfig) -> Result<LatencyReport, LatencyError> {
    let index = build_index(synthetic_corpus(config), Bm25Params::default()).expect("synthetic keys are unique");
    latency_report(&bench_queries(&index, config, 10))
}
