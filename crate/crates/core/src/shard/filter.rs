use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::ShardError;
use crate::corpus::{License, PairRecord, PanelType};
use crate::shard::word_count;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "value", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FilterOp {
    Eq(String),
    Neq(String),
    In(Vec<String>),
    Contains(String),
    /// Inclusive bounds; a missing bound is open.
    Range(Option<String>, Option<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub field: String,
    pub op: FilterOp,
}

/// Conjunction of clauses over pair metadata and annotation fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterPredicate {
    pub clauses: Vec<Clause>,
}

const SCALAR_FIELDS: &[&str] = &[
    "pair_id",
    "image_path",
    "caption",
    "caption_word_count",
    "license",
    "accession_id",
    "pmid",
    "publication_date",
    "citation",
    "journal",
    "title",
    "abstract",
    "panel_type",
];
const LIST_FIELDS: &[&str] = &["mesh_terms", "keywords", "citing_refs", "global_concepts", "local_concepts"];

fn canonical_field(raw: &str) -> Result<String, ShardError> {
    let f = raw.trim();
    let f = f.strip_prefix("article_metadata.").or_else(|| f.strip_prefix("annotation.")).unwrap_or(f);
    if SCALAR_FIELDS.contains(&f) || LIST_FIELDS.contains(&f) {
        return Ok(f.to_string());
    }
    if let Some(key) = f.strip_prefix("extras.") {
        if !key.is_empty() {
            return Ok(f.to_string());
        }
    }
    Err(ShardError::Schema(format!("unknown field `{raw}`")))
}

enum Value<'a> {
    Missing,
    Text(String),
    Ref(&'a str),
    List(Vec<&'a str>),
}

fn extract<'a>(rec: &'a PairRecord, field: &str) -> Value<'a> {
    let m = &rec.article_metadata;
    let opt = |v: &'a Option<String>| v.as_deref().map_or(Value::Missing, Value::Ref);
    let ann = rec.annotation.as_ref();
    match field {
        "pair_id" => Value::Ref(&rec.pair_id),
        "image_path" => Value::Ref(&rec.image_path),
        "caption" => Value::Ref(&rec.caption),
        "caption_word_count" => Value::Text(word_count(&rec.caption).to_string()),
        "license" => rec.license.as_ref().map_or(Value::Missing, |l| Value::Ref(l.as_str())),
        "accession_id" => Value::Ref(&m.accession_id),
        "pmid" => opt(&m.pmid),
        "publication_date" => m.publication_date.map_or(Value::Missing, |d| Value::Text(d.to_string())),
        "citation" => opt(&m.citation),
        "journal" => opt(&m.journal),
        "title" => opt(&m.title),
        "abstract" => opt(&m.abstract_text),
        "panel_type" => ann.map_or(Value::Missing, |a| {
            Value::Ref(match a.panel_type {
                PanelType::SinglePanel => "SINGLE_PANEL",
                PanelType::MultiPanel => "MULTI_PANEL",
            })
        }),
        "mesh_terms" => Value::List(m.mesh_terms.iter().map(String::as_str).collect()),
        "keywords" => Value::List(m.keywords.iter().map(String::as_str).collect()),
        "citing_refs" => Value::List(m.citing_refs.iter().map(String::as_str).collect()),
        "global_concepts" => Value::List(ann.map(|a| a.global_concepts.iter().map(String::as_str).collect()).unwrap_or_default()),
        "local_concepts" => Value::List(ann.map(|a| a.local_concepts.iter().map(String::as_str).collect()).unwrap_or_default()),
        other => other
            .strip_prefix("extras.")
            .and_then(|k| m.extras.get(k))
            .map_or(Value::Missing, |v| Value::Ref(v)),
    }
}

/// Numeric comparison when both sides parse as numbers, lexicographic otherwise.
fn compare(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

impl Clause {
    pub fn new(field: &str, op: FilterOp) -> Result<Self, ShardError> {
        Ok(Clause { field: canonical_field(field)?, op })
    }

    fn scalar_eq(&self, actual: &str, expected: &str) -> bool {
        if self.field == "license" {
            License::parse(actual) == License::parse(expected)
        } else {
            actual == expected
        }
    }

    pub fn matches(&self, rec: &PairRecord) -> bool {
        let value = extract(rec, &self.field);
        let items: Vec<&str> = match &value {
            Value::Missing => Vec::new(),
            Value::Text(s) => vec![s.as_str()],
            Value::Ref(s) => vec![s],
            Value::List(l) => l.clone(),
        };
        let any_eq = |expected: &str| items.iter().any(|a| self.scalar_eq(a, expected));
        match &self.op {
            FilterOp::Eq(v) => any_eq(v),
            FilterOp::Neq(v) => !any_eq(v),
            FilterOp::In(vs) => vs.iter().any(|v| any_eq(v)),
            FilterOp::Contains(v) => match value {
                Value::List(l) => l.iter().any(|a| *a == v),
                _ => items.iter().any(|a| a.contains(v.as_str())),
            },
            FilterOp::Range(lo, hi) => items.iter().any(|a| {
                lo.as_deref().is_none_or(|l| compare(a, l) != Ordering::Less)
                    && hi.as_deref().is_none_or(|h| compare(a, h) != Ordering::Greater)
            }),
        }
    }
}

impl FilterPredicate {
    pub fn new(clauses: Vec<Clause>) -> Self {
        FilterPredicate { clauses }
    }

    /// Parse `clause&clause&...` where a clause is one of
    /// `field=value`, `field!=value`, `field~substring`, `field=a|b|c` (IN) or
    /// `field=lo..hi` (inclusive RANGE, either side may be empty).
    pub fn parse(text: &str) -> Result<Self, ShardError> {
        let mut clauses = Vec::new();
        for raw in text.split('&').map(str::trim).filter(|c| !c.is_empty()) {
            let (field, op) = if let Some((f, v)) = raw.split_once("!=") {
                (f, FilterOp::Neq(v.trim().to_string()))
            } else if let Some((f, v)) = raw.split_once('~') {
                (f, FilterOp::Contains(v.trim().to_string()))
            } else if let Some((f, v)) = raw.split_once('=') {
                let v = v.trim();
                let op = if v.contains('|') {
                    FilterOp::In(v.split('|').map(|s| s.trim().to_string()).collect())
                } else if let Some((lo, hi)) = v.split_once("..") {
                    let bound = |s: &str| Some(s.trim().to_string()).filter(|s| !s.is_empty());
                    FilterOp::Range(bound(lo), bound(hi))
                } else {
                    FilterOp::Eq(v.to_string())
                };
                (f, op)
            } else {
                return Err(ShardError::Schema(format!("clause `{raw}` has no operator")));
            };
            clauses.push(Clause::new(field, op)?);
        }
        Ok(FilterPredicate { clauses })
    }

    pub fn matches(&self, rec: &PairRecord) -> bool {
        self.clauses.iter().all(|c| c.matches(rec))
    }
}
