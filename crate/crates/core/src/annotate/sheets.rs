use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotateError, Clustering};
use crate::corpus::{AnnotationLabels, PairRecord};

pub const DEFAULT_SAMPLE_SIZE: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationSheet {
    pub cluster_id: usize,
    pub sampled_pair_ids: Vec<String>,
    #[serde(default)]
    pub assigned_labels: Option<AnnotationLabels>,
}

/// One sheet per non-empty cluster with up to `sample_size` members drawn
/// without replacement. Each cluster gets its own stream derived from `seed`.
pub fn make_sheets(clustering: &Clustering, sample_size: usize, seed: u64) -> Vec<AnnotationSheet> {
    clustering
        .members()
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(cluster_id, members)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (cluster_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let take = members.len().min(sample_size);
            let mut picked: Vec<usize> = index::sample(&mut rng, members.len(), take).into_vec();
            picked.sort_unstable();
            AnnotationSheet {
                cluster_id,
                sampled_pair_ids: picked.into_iter().map(|i| clustering.ids[members[i]].clone()).collect(),
                assigned_labels: None,
            }
        })
        .collect()
}

/// Every pair inherits its cluster's sheet labels.
pub fn propagate_labels(
    clustering: &Clustering,
    sheets: &[AnnotationSheet],
) -> Result<BTreeMap<String, AnnotationLabels>, AnnotateError> {
    let mut labels: BTreeMap<usize, &AnnotationLabels> = BTreeMap::new();
    for sheet in sheets {
        if let Some(l) = &sheet.assigned_labels {
            labels.insert(sheet.cluster_id, l);
        }
    }
    let mut missing: Vec<usize> = clustering
        .assignment
        .iter()
        .copied()
        .filter(|c| !labels.contains_key(c))
        .collect();
    missing.sort_unstable();
    missing.dedup();
    if !missing.is_empty() {
        return Err(AnnotateError::UnlabeledCluster(missing));
    }
    Ok(clustering
        .ids
        .iter()
        .zip(&clustering.assignment)
        .map(|(id, c)| (id.clone(), labels[c].clone()))
        .collect())
}

/// Attach propagated labels to pairs; returns how many were labelled.
pub fn apply_labels(pairs: &mut [PairRecord], labels: &BTreeMap<String, AnnotationLabels>) -> usize {
    let mut n = 0;
    for pair in pairs.iter_mut() {
        if let Some(l) = labels.get(&pair.pair_id) {
            pair.annotation = Some(l.clone());
            n += 1;
        }
    }
    n
}

pub fn write_sheets(path: &Path, sheets: &[AnnotationSheet]) -> Result<(), AnnotateError> {
    let json = serde_json::to_vec_pretty(sheets).map_err(|e| AnnotateError::Format(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_sheets(path: &Path) -> Result<Vec<AnnotationSheet>, AnnotateError> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| AnnotateError::Format(e.to_string()))
}
