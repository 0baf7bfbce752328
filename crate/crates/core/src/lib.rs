//! Systems layer for indexing and searching scientific-literature archives.
//!
//! The pipeline runs ingest → shard → annotate → index → search/RAG → eval:
//!
//! - [`corpus`]: article, pair, annotation and taxonomy records
//! - [`jats`]: nXML and file-list parsing with three-source metadata merge
//! - [`shard`]: tar shard writer/streaming reader, filters, instruction prompts
//! - [`annotate`]: embedding, PCA, K-means, annotation sheets, label propagation
//! - [`lexical`]: BM25 with a precomputed sparse score matrix
//! - [`vector`]: exact cosine search and rank fusion
//! - [`rag`]: four-step retrieval-augmented answering chain
//! - [`eval`]: contrastive loss, retrieval and accuracy metrics
//! - [`latency`]: query latency aggregation and linear-trend fit

pub mod annotate;
pub mod corpus;
pub mod eval;
pub mod jats;
pub mod json;
pub mod latency;
pub mod lexical;
pub mod rag;
pub mod shard;
pub mod vector;
