//! On-disk index directory:
//!
//! ```text
//! <index_dir>/captions/lexical/    BM25 over captions, keyed by pair id (required)
//! <index_dir>/captions/vectors/    caption embeddings (optional)
//! <index_dir>/images/vectors/      image embeddings (optional)
//! <index_dir>/articles/lexical/    BM25 over article full text, keyed by accession id (optional)
//! <index_dir>/articles/vectors/    article embeddings (optional)
//! <index_dir>/articles/records.jsonl  one canonical ArticleRecord per line (optional)
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use biolit_core::annotate::{embed, Embedder, EmbeddingMatrix};
use biolit_core::corpus::{ArticleRecord, PairRecord};
use biolit_core::json::to_canonical_string;
use biolit_core::lexical::{build_index, Bm25Params, LexicalIndex};
use biolit_core::vector::{build_vector_index, Modality, VectorIndex};
use serde::Serialize;

use crate::ServiceError;

pub const CAPTIONS_LEXICAL: &str = "captions/lexical";
pub const CAPTIONS_VECTORS: &str = "captions/vectors";
pub const IMAGES_VECTORS: &str = "images/vectors";
pub const ARTICLES_LEXICAL: &str = "articles/lexical";
pub const ARTICLES_VECTORS: &str = "articles/vectors";
pub const ARTICLES_RECORDS: &str = "articles/records.jsonl";

fn build_err(what: &str, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::IndexBuild(format!("{what}: {e}"))
}

/// What [`build_index_dir`] wrote.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub caption_docs: usize,
    pub caption_terms: usize,
    pub caption_vectors: usize,
    pub image_vectors: usize,
    pub article_docs: usize,
    pub article_terms: usize,
    pub article_vectors: usize,
}

/// Build every index the service can load. Vector indices are written only
/// when an embedder is given; article indices only when `articles` is non-empty.
pub fn build_index_dir(
    out: &Path,
    pairs: &[PairRecord],
    articles: &[ArticleRecord],
    params: Bm25Params,
    embedder: Option<&dyn Embedder>,
) -> Result<BuildSummary, ServiceError> {
    let mut summary = BuildSummary::default();
    let captions = build_index(pairs.iter().map(|p| (p.pair_id.clone(), p.caption.as_str())), params)
        .map_err(|e| build_err("caption index", e))?;
    captions.save(&out.join(CAPTIONS_LEXICAL)).map_err(|e| build_err("caption index", e))?;
    summary.caption_docs = captions.n_docs();
    summary.caption_terms = captions.n_terms();

    if let Some(embedder) = embedder {
        let ids: Vec<String> = pairs.iter().map(|p| p.pair_id.clone()).collect();
        let mut values = Vec::with_capacity(pairs.len() * embedder.dim());
        for p in pairs {
            values.extend(embedder.embed_text(&p.caption));
        }
        let caption_m = EmbeddingMatrix::new(ids.clone(), embedder.dim(), values).map_err(|e| build_err("caption vectors", e))?;
        let image_m = embed(pairs, embedder).map_err(|e| build_err("image vectors", e))?;
        for (m, modality, dir) in [(&caption_m, Modality::Caption, CAPTIONS_VECTORS), (&image_m, Modality::Image, IMAGES_VECTORS)] {
            let idx = build_vector_index(m, &ids, modality).map_err(|e| build_err(dir, e))?;
            idx.save(&out.join(dir)).map_err(|e| build_err(dir, e))?;
        }
        summary.caption_vectors = caption_m.rows();
        summary.image_vectors = image_m.rows();
    }

    if !articles.is_empty() {
        let texts: Vec<(String, String)> =
            articles.iter().map(|a| (a.metadata.accession_id.clone(), a.indexable_text())).collect();
        let lex = build_index(texts.iter().map(|(k, t)| (k.clone(), t.as_str())), params)
            .map_err(|e| build_err("article index", e))?;
        lex.save(&out.join(ARTICLES_LEXICAL)).map_err(|e| build_err("article index", e))?;
        summary.article_docs = lex.n_docs();
        summary.article_terms = lex.n_terms();

        if let Some(embedder) = embedder {
            let ids: Vec<String> = texts.iter().map(|(k, _)| k.clone()).collect();
            let values: Vec<f32> = texts.iter().flat_map(|(_, t)| embedder.embed_text(t)).collect();
            let m = EmbeddingMatrix::new(ids.clone(), embedder.dim(), values).map_err(|e| build_err("article vectors", e))?;
            let idx = build_vector_index(&m, &ids, Modality::Caption).map_err(|e| build_err("article vectors", e))?;
            idx.save(&out.join(ARTICLES_VECTORS)).map_err(|e| build_err("article vectors", e))?;
            summary.article_vectors = m.rows();
        }

        let path = out.join(ARTICLES_RECORDS);
        fs::create_dir_all(path.parent().expect("records path has a parent"))?;
        let mut w = BufWriter::new(File::create(&path)?);
        for a in articles {
            writeln!(w, "{}", to_canonical_string(a).map_err(|e| build_err("article records", e))?)?;
        }
        w.flush()?;
    }
    Ok(summary)
}

/// Byte ranges of article records inside `records.jsonl`.
#[derive(Debug, Clone)]
pub struct ArticleStore {
    path: PathBuf,
    offsets: HashMap<String, (u64, usize)>,
}

impl ArticleStore {
    pub fn open(path: &Path) -> Result<Self, ServiceError> {
        let load = |e: String| ServiceError::IndexLoad(format!("{}: {e}", path.display()));
        let mut reader = BufReader::new(File::open(path).map_err(|e| load(e.to_string()))?);
        let mut offsets = HashMap::new();
        let mut offset = 0u64;
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(|e| load(e.to_string()))?;
            if n == 0 {
                break;
            }
            if !line.trim().is_empty() {
                let rec: ArticleRecord = serde_json::from_str(&line).map_err(|e| load(e.to_string()))?;
                offsets.insert(rec.metadata.accession_id, (offset, line.trim_end().len()));
            }
            offset += n as u64;
        }
        Ok(ArticleStore { path: path.to_path_buf(), offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn fetch(&self, key: &str) -> std::io::Result<Option<ArticleRecord>> {
        let Some(&(offset, len)) = self.offsets.get(key) else { return Ok(None) };
        let mut f = File::open(&self.path)?;
        f.seek(SeekFrom::Start(offset))?;
        let mut buf = vec![0u8; len];
        f.read_exact(&mut buf)?;
        serde_json::from_slice(&buf).map(Some).map_err(std::io::Error::other)
    }
}

/// Indices for one search scope.
#[derive(Debug, Clone)]
pub struct ScopeIndices {
    pub lexical: LexicalIndex,
    pub vectors: Option<VectorIndex>,
}

/// Everything loaded from an index directory.
#[derive(Debug, Clone)]
pub struct LoadedIndices {
    pub captions: ScopeIndices,
    pub image_vectors: Option<VectorIndex>,
    pub articles: Option<ScopeIndices>,
    pub article_store: Option<ArticleStore>,
}

fn load_lexical(dir: &Path, chunk: usize) -> Result<LexicalIndex, ServiceError> {
    LexicalIndex::load(dir, chunk).map_err(|e| ServiceError::IndexLoad(format!("{}: {e}", dir.display())))
}

fn load_vectors_opt(dir: &Path) -> Result<Option<VectorIndex>, ServiceError> {
    if !dir.is_dir() {
        return Ok(None);
    }
    VectorIndex::load(dir).map(Some).map_err(|e| ServiceError::IndexLoad(format!("{}: {e}", dir.display())))
}

pub fn load_index_dir(root: &Path, chunk: usize) -> Result<LoadedIndices, ServiceError> {
    if !root.is_dir() {
        return Err(ServiceError::IndexLoad(format!("index directory {} does not exist", root.display())));
    }
    let captions = ScopeIndices {
        lexical: load_lexical(&root.join(CAPTIONS_LEXICAL), chunk)?,
        vectors: load_vectors_opt(&root.join(CAPTIONS_VECTORS))?,
    };
    let image_vectors = load_vectors_opt(&root.join(IMAGES_VECTORS))?;
    let articles_dir = root.join(ARTICLES_LEXICAL);
    let articles = if articles_dir.is_dir() {
        Some(ScopeIndices {
            lexical: load_lexical(&articles_dir, chunk)?,
            vectors: load_vectors_opt(&root.join(ARTICLES_VECTORS))?,
        })
    } else {
        None
    };
    let records = root.join(ARTICLES_RECORDS);
    let article_store = if records.is_file() { Some(ArticleStore::open(&records)?) } else { None };
    Ok(LoadedIndices { captions, image_vectors, articles, article_store })
}
