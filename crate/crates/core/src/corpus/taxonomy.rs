use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaxonomyLevel {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyNode {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    pub level: TaxonomyLevel,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TaxonomyError {
    #[error("duplicate taxonomy node `{0}`")]
    DuplicateNode(String),
    #[error("unknown taxonomy node `{0}`")]
    UnknownNode(String),
    #[error("parent link from `{0}` would create a cycle")]
    Cycle(String),
    #[error("local node `{0}` has no global ancestor")]
    NoGlobalAncestor(String),
    #[error("annotation label lists must be non-empty")]
    EmptyLabels,
    #[error("invalid taxonomy file: {0}")]
    Format(String),
}

/// Concept hierarchy used for annotation labels. Parent links always form a
/// forest and every LOCAL node has a GLOBAL ancestor.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Taxonomy {
    pub version: u32,
    nodes: Vec<TaxonomyNode>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
}

impl Taxonomy {
    pub fn new(version: u32) -> Self {
        Taxonomy { version, nodes: Vec::new(), index: BTreeMap::new() }
    }

    /// Build from an unordered node list, validating the whole forest.
    pub fn from_nodes(version: u32, nodes: Vec<TaxonomyNode>) -> Result<Self, TaxonomyError> {
        let mut tax = Taxonomy::new(version);
        for node in nodes {
            if tax.index.contains_key(&node.id) {
                return Err(TaxonomyError::DuplicateNode(node.id));
            }
            tax.index.insert(node.id.clone(), tax.nodes.len());
            tax.nodes.push(node);
        }
        for node in &tax.nodes {
            if let Some(p) = &node.parent_id {
                if !tax.index.contains_key(p) {
                    return Err(TaxonomyError::UnknownNode(p.clone()));
                }
            }
        }
        for node in &tax.nodes {
            tax.check_ancestry(&node.id)?;
        }
        Ok(tax)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaxonomyError::Format(e.to_string()))?;
        #[derive(Deserialize)]
        struct File {
            version: u32,
            nodes: Vec<TaxonomyNode>,
        }
        let file: File = serde_json::from_str(&text).map_err(|e| TaxonomyError::Format(e.to_string()))?;
        Taxonomy::from_nodes(file.version, file.nodes)
    }

    pub fn nodes(&self) -> &[TaxonomyNode] {
        &self.nodes
    }

    pub fn get(&self, id: &str) -> Option<&TaxonomyNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    /// Add a node. Its parent, if any, must already exist.
    pub fn insert(&mut self, node: TaxonomyNode) -> Result<(), TaxonomyError> {
        if self.index.contains_key(&node.id) {
            return Err(TaxonomyError::DuplicateNode(node.id));
        }
        if let Some(p) = &node.parent_id {
            if !self.index.contains_key(p) {
                return Err(TaxonomyError::UnknownNode(p.clone()));
            }
        }
        let id = node.id.clone();
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(node);
        if let Err(e) = self.check_ancestry(&id) {
            self.nodes.pop();
            self.index.remove(&id);
            return Err(e);
        }
        Ok(())
    }

    /// Re-parent a node; rejected if the new edge closes a cycle.
    pub fn set_parent(&mut self, id: &str, parent: Option<&str>) -> Result<(), TaxonomyError> {
        let &pos = self.index.get(id).ok_or_else(|| TaxonomyError::UnknownNode(id.to_string()))?;
        if let Some(p) = parent {
            if !self.index.contains_key(p) {
                return Err(TaxonomyError::UnknownNode(p.to_string()));
            }
            let mut cursor = Some(p.to_string());
            while let Some(c) = cursor {
                if c == id {
                    return Err(TaxonomyError::Cycle(id.to_string()));
                }
                cursor = self.get(&c).and_then(|n| n.parent_id.clone());
            }
        }
        let old = std::mem::replace(&mut self.nodes[pos].parent_id, parent.map(str::to_string));
        // Descendants of a re-parented node may lose their global ancestor.
        let ids: Vec<String> = self.nodes.iter().map(|n| n.id.clone()).collect();
        for nid in ids {
            if let Err(e) = self.check_ancestry(&nid) {
                self.nodes[pos].parent_id = old;
                return Err(e);
            }
        }
        Ok(())
    }

    fn check_ancestry(&self, id: &str) -> Result<(), TaxonomyError> {
        let start = self.get(id).ok_or_else(|| TaxonomyError::UnknownNode(id.to_string()))?;
        let mut seen = HashSet::new();
        seen.insert(start.id.as_str());
        let mut has_global = false;
        let mut cursor = start.parent_id.as_deref();
        while let Some(c) = cursor {
            if !seen.insert(c) {
                return Err(TaxonomyError::Cycle(id.to_string()));
            }
            let node = self.get(c).ok_or_else(|| TaxonomyError::UnknownNode(c.to_string()))?;
            has_global |= node.level == TaxonomyLevel::Global;
            cursor = node.parent_id.as_deref();
        }
        if start.level == TaxonomyLevel::Local && !has_global {
            return Err(TaxonomyError::NoGlobalAncestor(id.to_string()));
        }
        Ok(())
    }
}
