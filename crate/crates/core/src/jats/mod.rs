//! JATS/nXML ingestion: file-list parsing, streaming article parsing,
//! inline figure reference extraction and three-source metadata merging.

mod file_list;
mod ingest;
mod inline_refs;
mod merge;
mod nxml;

pub use file_list::{parse_file_list, FileList, FileListRow, RejectedRow};
pub use ingest::{ingest_corpus, ingest_package, EntrezSource, IngestReport, IngestedArticle, PackageLayout, PackageWarning};
pub use inline_refs::{extract_inline_refs, split_sentences, InlineRefOutcome};
pub use merge::{merge_metadata, PartialMetadata};
pub use nxml::{parse_nxml, FigXref, ParseWarning, ParsedNxml};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JatsError {
    #[error("file list contains no data rows")]
    EmptyInput,
    #[error("file list is missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("malformed XML at byte {position}: {message}")]
    MalformedXml { position: u64, message: String },
    #[error("article has no <body> element")]
    MissingBody,
    #[error("accession ids disagree across metadata sources: {0} vs {1}")]
    AccessionMismatch(String, String),
    #[error("no metadata source provides an accession id")]
    MissingAccession,
    #[error("no .nxml file in package {0}")]
    MissingNxml(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
