use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use super::ArticleRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyAccessionId { record_index: usize },
    DuplicateAccessionId { accession_id: String, occurrences: usize },
    MissingLicense { accession_id: String },
    DuplicateFigureId { accession_id: String, figure_id: String },
    EmptyImagePath { accession_id: String, figure_id: String },
    DanglingInlineRef { accession_id: String, figure_id: String, paragraph_index: usize },
    UntaggedField { accession_id: String, field: String },
    StaleProvenance { accession_id: String, field: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, pred: impl Fn(&Violation) -> bool) -> usize {
        self.violations.iter().filter(|v| pred(v)).count()
    }
}

/// Scan a corpus for invariant violations. Never fails; an empty report means
/// the corpus is valid.
pub fn validate_corpus(records: &[ArticleRecord]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();

    for (i, rec) in records.iter().enumerate() {
        let meta = &rec.metadata;
        let acc = meta.accession_id.as_str();
        if acc.is_empty() {
            violations.push(Violation::EmptyAccessionId { record_index: i });
        } else {
            *seen.entry(acc).or_default() += 1;
        }
        if meta.license.is_none() {
            violations.push(Violation::MissingLicense { accession_id: acc.to_string() });
        }

        let populated = meta.populated_fields();
        for field in &populated {
            if !meta.provenance.contains_key(field) {
                violations.push(Violation::UntaggedField {
                    accession_id: acc.to_string(),
                    field: field.clone(),
                });
            }
        }
        let populated: HashSet<&String> = populated.iter().collect();
        for field in meta.provenance.keys() {
            if !populated.contains(field) {
                violations.push(Violation::StaleProvenance {
                    accession_id: acc.to_string(),
                    field: field.clone(),
                });
            }
        }

        let n_par = rec.paragraph_count();
        let mut fig_ids = HashSet::new();
        for fig in &rec.figures {
            if !fig_ids.insert(fig.figure_id.as_str()) {
                violations.push(Violation::DuplicateFigureId {
                    accession_id: acc.to_string(),
                    figure_id: fig.figure_id.clone(),
                });
            }
            if fig.image_path.is_empty() {
                violations.push(Violation::EmptyImagePath {
                    accession_id: acc.to_string(),
                    figure_id: fig.figure_id.clone(),
                });
            }
            for r in &fig.inline_refs {
                if r.paragraph_index >= n_par {
                    violations.push(Violation::DanglingInlineRef {
                        accession_id: acc.to_string(),
                        figure_id: fig.figure_id.clone(),
                        paragraph_index: r.paragraph_index,
                    });
                }
            }
        }
    }

    for (acc, n) in seen {
        if n > 1 {
            violations.push(Violation::DuplicateAccessionId {
                accession_id: acc.to_string(),
                occurrences: n,
            });
        }
    }
    ValidationReport { violations }
}
