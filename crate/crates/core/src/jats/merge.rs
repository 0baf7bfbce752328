use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{FileListRow, JatsError};
use crate::corpus::{ArticleMetadata, License, Source};

/// Metadata as contributed by a single source; `None`/empty means the source
/// does not provide the field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartialMetadata {
    #[serde(default)]
    pub accession_id: Option<String>,
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
}

impl From<&FileListRow> for PartialMetadata {
    fn from(row: &FileListRow) -> Self {
        let mut extras = BTreeMap::new();
        extras.insert("archive_path".to_string(), row.archive_path.clone());
        extras.insert("last_updated".to_string(), row.last_updated.to_string());
        PartialMetadata {
            accession_id: Some(row.accession_id.clone()),
            license: Some(License::parse(&row.license)),
            extras,
            ..Default::default()
        }
    }
}

/// Merge up to three sources with per-field precedence
/// ENTREZ_LIKE > NXML > FILE_LIST, tagging each populated field with the
/// source its value came from.
pub fn merge_metadata(
    nxml: Option<&PartialMetadata>,
    file_list: Option<&PartialMetadata>,
    entrez_like: Option<&PartialMetadata>,
) -> Result<ArticleMetadata, JatsError> {
    // Highest precedence first.
    let sources: Vec<(Source, &PartialMetadata)> = [
        (Source::EntrezLike, entrez_like),
        (Source::Nxml, nxml),
        (Source::FileList, file_list),
    ]
    .into_iter()
    .filter_map(|(s, m)| m.map(|m| (s, m)))
    .collect();

    let mut ids = sources
        .iter()
        .filter_map(|(s, m)| m.accession_id.as_deref().filter(|id| !id.is_empty()).map(|id| (*s, id)));
    let (id_source, first_id) = ids.next().ok_or(JatsError::MissingAccession)?;
    if let Some((_, other)) = ids.find(|(_, id)| *id != first_id) {
        return Err(JatsError::AccessionMismatch(first_id.to_string(), other.to_string()));
    }

    let mut out = ArticleMetadata::new(first_id);
    let mut prov = BTreeMap::new();
    prov.insert("accession_id".to_string(), id_source);

    let text = |s: &Option<String>| s.as_ref().filter(|v| !v.is_empty()).cloned();
    let list = |v: &Vec<String>| Some(v.clone()).filter(|v| !v.is_empty());

    out.pmid = take(&sources, &mut prov, "pmid", |m| text(&m.pmid));
    out.publication_date = take(&sources, &mut prov, "publication_date", |m| m.publication_date);
    out.citation = take(&sources, &mut prov, "citation", |m| text(&m.citation));
    out.journal = take(&sources, &mut prov, "journal", |m| text(&m.journal));
    out.license = take(&sources, &mut prov, "license", |m| m.license.clone());
    out.title = take(&sources, &mut prov, "title", |m| text(&m.title));
    out.abstract_text = take(&sources, &mut prov, "abstract", |m| text(&m.abstract_text));
    out.mesh_terms = take(&sources, &mut prov, "mesh_terms", |m| list(&m.mesh_terms)).unwrap_or_default();
    out.keywords = take(&sources, &mut prov, "keywords", |m| list(&m.keywords)).unwrap_or_default();
    out.citing_refs = take(&sources, &mut prov, "citing_refs", |m| list(&m.citing_refs)).unwrap_or_default();

    // Extras merge key by key under the same precedence.
    for (src, m) in sources.iter().rev() {
        for (k, v) in &m.extras {
            out.extras.insert(k.clone(), v.clone());
            prov.insert(format!("extras.{k}"), *src);
        }
    }
    out.provenance = prov;
    Ok(out)
}

/// First value offered by the sources in precedence order.
fn take<T>(
    sources: &[(Source, &PartialMetadata)],
    prov: &mut BTreeMap<String, Source>,
    name: &str,
    get: impl Fn(&PartialMetadata) -> Option<T>,
) -> Option<T> {
    let (src, value) = sources.iter().find_map(|(s, m)| get(m).map(|v| (*s, v)))?;
    prov.insert(name.to_string(), src);
    Some(value)
}
