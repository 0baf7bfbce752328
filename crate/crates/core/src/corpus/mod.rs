//! Domain records shared by every stage of the pipeline.
//!
//! An [`ArticleRecord`] is what ingestion produces for one article package.
//! Reshaping turns it into one [`PairRecord`] per figure, which is the unit
//! stored in shards, indexed, and annotated.

mod taxonomy;
mod validate;

pub use taxonomy::{Taxonomy, TaxonomyError, TaxonomyLevel, TaxonomyNode};
pub use validate::{validate_corpus, ValidationReport, Violation};

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Article license. Unknown license strings are kept verbatim in `Other`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum License {
    CcBy,
    CcByNc,
    Cc0,
    Other(String),
}

impl License {
    /// Parse a license label such as `CC BY`, `cc-by-nc` or `CC0`.
    pub fn parse(raw: &str) -> License {
        let norm: String = raw
            .trim()
            .chars()
            .map(|c| if c.is_whitespace() || c == '_' { '-' } else { c.to_ascii_uppercase() })
            .collect();
        match norm.as_str() {
            "CC-BY" => License::CcBy,
            "CC-BY-NC" => License::CcByNc,
            "CC0" | "CC-0" => License::Cc0,
            _ => License::Other(raw.trim().to_string()),
        }
    }

    /// Map a Creative Commons URL (as found in `<license xlink:href>`) to a license.
    pub fn from_url(url: &str) -> Option<License> {
        let url = url.to_ascii_lowercase();
        if !url.contains("creativecommons.org") {
            return None;
        }
        if url.contains("publicdomain/zero") {
            Some(License::Cc0)
        } else if url.contains("/licenses/by-nc/") {
            Some(License::CcByNc)
        } else if url.contains("/licenses/by/") {
            Some(License::CcBy)
        } else {
            None
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            License::CcBy => "CC-BY",
            License::CcByNc => "CC-BY-NC",
            License::Cc0 => "CC0",
            License::Other(s) => s,
        }
    }
}

impl fmt::Display for License {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for License {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for License {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(License::parse(&raw))
    }
}

/// Which of the three metadata sources a field value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Source {
    EntrezLike,
    FileList,
    Nxml,
}

/// Merged article-level metadata. `provenance` maps each populated field name
/// (extras as `extras.<key>`) to the source it was taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleMetadata {
    pub accession_id: String,
    #[serde(default)]
    pub pmid: Option<String>,
    #[serde(default)]
    pub publication_date: Option<NaiveDate>,
    #[serde(default)]
    pub citation: Option<String>,
    #[serde(default)]
    pub journal: Option<String>,
    #[serde(default)]
    pub license: Option<License>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default, rename = "abstract")]
    pub abstract_text: Option<String>,
    #[serde(default)]
    pub mesh_terms: Vec<String>,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub citing_refs: Vec<String>,
    #[serde(default)]
    pub extras: BTreeMap<String, String>,
    #[serde(default)]
    pub provenance: BTreeMap<String, Source>,
}

impl ArticleMetadata {
    /// Metadata with only an accession id and no populated fields.
    pub fn new(accession_id: impl Into<String>) -> Self {
        ArticleMetadata {
            accession_id: accession_id.into(),
            pmid: None,
            publication_date: None,
            citation: None,
            journal: None,
            license: None,
            title: None,
            abstract_text: None,
            mesh_terms: Vec::new(),
            keywords: Vec::new(),
            citing_refs: Vec::new(),
            extras: BTreeMap::new(),
            provenance: BTreeMap::new(),
        }
    }

    /// Names of the fields that currently hold a value, in provenance-key form.
    pub fn populated_fields(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.accession_id.is_empty() {
            out.push("accession_id".to_string());
        }
        let opt = [
            ("pmid", self.pmid.is_some()),
            ("publication_date", self.publication_date.is_some()),
            ("citation", self.citation.is_some()),
            ("journal", self.journal.is_some()),
            ("license", self.license.is_some()),
            ("title", self.title.is_some()),
            ("abstract", self.abstract_text.is_some()),
            ("mesh_terms", !self.mesh_terms.is_empty()),
            ("keywords", !self.keywords.is_empty()),
            ("citing_refs", !self.citing_refs.is_empty()),
        ];
        out.extend(opt.iter().filter(|(_, set)| *set).map(|(name, _)| name.to_string()));
        out.extend(self.extras.keys().map(|k| format!("extras.{k}")));
        out.sort();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InlineRef {
    pub paragraph_index: usize,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureEntry {
    pub figure_id: String,
    pub image_path: String,
    pub caption: String,
    #[serde(default)]
    pub inline_refs: Vec<InlineRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub section_title: String,
    pub paragraphs: Vec<String>,
}

/// One parsed article. Paragraph indices used by inline references count
/// paragraphs across all sections in document order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub metadata: ArticleMetadata,
    pub full_text: Vec<Section>,
    pub figures: Vec<FigureEntry>,
}

impl ArticleRecord {
    pub fn paragraph_count(&self) -> usize {
        self.full_text.iter().map(|s| s.paragraphs.len()).sum()
    }

    /// All paragraphs in document order.
    pub fn paragraphs(&self) -> impl Iterator<Item = &str> {
        self.full_text.iter().flat_map(|s| s.paragraphs.iter().map(String::as_str))
    }

    /// Text used for full-text indexing and summarization: title, abstract and
    /// body paragraphs separated by blank lines.
    pub fn indexable_text(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        if let Some(t) = &self.metadata.title {
            parts.push(t);
        }
        if let Some(a) = &self.metadata.abstract_text {
            parts.push(a);
        }
        parts.extend(self.paragraphs());
        parts.join("\n\n")
    }

    /// Expand to one pair per figure. Each pair inherits the article license.
    pub fn to_pairs(&self) -> Vec<PairRecord> {
        self.figures
            .iter()
            .map(|fig| PairRecord {
                pair_id: pair_id(&self.metadata.accession_id, &fig.figure_id),
                image_path: fig.image_path.clone(),
                caption: fig.caption.clone(),
                article_metadata: self.metadata.clone(),
                annotation: None,
                license: self.metadata.license.clone(),
            })
            .collect()
    }
}

/// Deterministic pair id: `<accession_id>_<figure_id>`.
pub fn pair_id(accession_id: &str, figure_id: &str) -> String {
    format!("{accession_id}_{figure_id}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PanelType {
    SinglePanel,
    MultiPanel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationLabels {
    pub global_concepts: Vec<String>,
    pub local_concepts: Vec<String>,
    pub panel_type: PanelType,
}

impl AnnotationLabels {
    /// Check every concept against the taxonomy and reject empty label lists.
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), TaxonomyError> {
        if self.global_concepts.is_empty() || self.local_concepts.is_empty() {
            return Err(TaxonomyError::EmptyLabels);
        }
        for id in self.global_concepts.iter().chain(&self.local_concepts) {
            if taxonomy.get(id).is_none() {
                return Err(TaxonomyError::UnknownNode(id.clone()));
            }
        }
        Ok(())
    }
}

/// One image-caption pair, the unit record of a shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub image_path: String,
    pub caption: String,
    pub article_metadata: ArticleMetadata,
    #[serde(default)]
    pub annotation: Option<AnnotationLabels>,
    #[serde(default)]
    pub license: Option<License>,
}

/// Expand a sequence of articles into pairs, preserving article and figure order.
pub fn reshape_to_pairs<'a, I>(articles: I) -> impl Iterator<Item = PairRecord> + 'a
where
    I: IntoIterator<Item = &'a ArticleRecord>,
    I::IntoIter: 'a,
{
    articles.into_iter().flat_map(|a| a.to_pairs())
}
