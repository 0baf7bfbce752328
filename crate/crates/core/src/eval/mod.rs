//! Evaluation metrics: symmetric InfoNCE, closed-VQA argmax accuracy,
//! Recall@k, exact-match accuracy and causal language-model loss.
//!
//! Similarities are cosine; inputs are expected unit-normalized so a dot
//! product suffices. Ties resolve to the lowest index.

mod report;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use report::{aggregate_scoresheet, read_scoresheet, read_scoresheet_file, MetricReport, ModelScores, ScoreRow, ScoreSheetSummary};

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("{what} row {row} has norm {norm}, expected 1")]
    NotUnitNorm { what: &'static str, row: usize, norm: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("expected {expected} caption variants, got {found}")]
    VariantCountMismatch { expected: usize, found: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("{predictions} predictions for {references} references")]
    LengthMismatch { predictions: usize, references: usize },
    #[error("probability at position {0} is zero")]
    ZeroProbability(usize),
    #[error("probability at position {position} is {value}, outside (0, 1]")]
    InvalidProbability { position: usize, value: f64 },
    #[error("empty input")]
    Empty,
    #[error("score sheet line {line}: {message}")]
    ScoreSheet { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_unit(what: &'static str, rows: &[Vec<f64>]) -> Result<(), EvalError> {
    for (row, v) in rows.iter().enumerate() {
        let norm = dot(v, v).sqrt();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(EvalError::NotUnitNorm { what, row, norm });
        }
    }
    Ok(())
}

fn check_dims(rows: &[Vec<f64>], d: usize) -> Result<(), EvalError> {
    match rows.iter().position(|r| r.len() != d) {
        Some(i) => Err(EvalError::ShapeMismatch(format!("row {i} has {} dims, expected {d}", rows[i].len()))),
        None => Ok(()),
    }
}

pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let n = dot(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveBatch {
    pub z_image: Vec<Vec<f64>>,
    pub z_text: Vec<Vec<f64>>,
    pub tau: f64,
}

impl ContrastiveBatch {
    pub fn new(z_image: Vec<Vec<f64>>, z_text: Vec<Vec<f64>>, tau: f64) -> Result<Self, EvalError> {
        if !(tau > 0.0) {
            return Err(EvalError::NonPositiveTemperature(tau));
        }
        if z_image.is_empty() {
            return Err(EvalError::Empty);
        }
        if z_image.len() != z_text.len() {
            return Err(EvalError::ShapeMismatch(format!("{} images, {} texts", z_image.len(), z_text.len())));
        }
        let d = z_image[0].len();
        check_dims(&z_image, d)?;
        check_dims(&z_text, d)?;
        check_unit("image", &z_image)?;
        check_unit("text", &z_text)?;
        Ok(ContrastiveBatch { z_image, z_text, tau })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoNceLoss {
    pub image_to_text: f64,
    pub text_to_image: f64,
    pub loss: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `S[k][j] = sim(image_k, text_j)/τ`; the image loss is the mean negative
/// log softmax of the diagonal over rows of S, the text loss the same over
/// rows of Sᵀ, and the total their average.
pub fn infonce_loss(batch: &ContrastiveBatch) -> Result<InfoNceLoss, EvalError> {
    if !(batch.tau > 0.0) {
        return Err(EvalError::NonPositiveTemperature(batch.tau));
    }
    let n = batch.z_image.len();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let s: Vec<Vec<f64>> = batch
        .z_image
        .iter()
        .map(|zi| batch.z_text.iter().map(|zt| dot(zi, zt) / batch.tau).collect())
        .collect();
    let mut li = 0.0;
    let mut lt = 0.0;
    for k in 0..n {
        li += log_sum_exp(s[k].iter().copied()) - s[k][k];
        lt += log_sum_exp((0..n).map(|j| s[j][k])) - s[k][k];
    }
    let (li, lt) = (li / n as f64, lt / n as f64);
    Ok(InfoNceLoss { image_to_text: li, text_to_image: lt, loss: (li + lt) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedVqaInstance {
    pub image_embedding: Vec<f64>,
    pub candidate_embeddings: Vec<Vec<f64>>,
    pub correct_index: usize,
}

pub fn closed_vqa_predict(instance: &ClosedVqaInstance) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, c) in instance.candidate_embeddings.iter().enumerate() {
        let s = dot(c, &instance.image_embedding);
        if s > best.1 {
            best = (j, s);
        }
    }
    best.0
}

fn vqa_accuracy(instances: &[ClosedVqaInstance]) -> f64 {
    let correct = instances.iter().filter(|i| closed_vqa_predict(i) == i.correct_index).count();
    correct as f64 / instances.len() as f64
}

/// Mean over caption variants of per-variant closed-VQA accuracy. Every
/// variant must cover the same number of instances.
pub fn classification_accuracy(variants: &[Vec<ClosedVqaInstance>], caption_variants: usize) -> Result<f64, EvalError> {
    if variants.len() != caption_variants {
        return Err(EvalError::VariantCountMismatch { expected: caption_variants, found: variants.len() });
    }
    let n = variants.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(EvalError::Empty);
    }
    if let Some(v) = variants.iter().find(|v| v.len() != n) {
        return Err(EvalError::ShapeMismatch(format!("variant has {} instances, expected {n}", v.len())));
    }
    Ok(variants.iter().map(|v| vqa_accuracy(v)).sum::<f64>() / variants.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Direction {
    I2T,
    T2I,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSet {
    pub image_embeddings: Vec<Vec<f64>>,
    pub caption_embeddings: Vec<Vec<f64>>,
}

/// Fraction of queries whose paired target ranks within the top `k`.
/// A target's rank counts strictly more similar targets plus equally similar
/// ones at a lower index.
pub fn recall_at_k(set: &RetrievalSet, k: usize, direction: Direction) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let (queries, targets) = match direction {
        Direction::I2T => (&set.image_embeddings, &set.caption_embeddings),
        Direction::T2I => (&set.caption_embeddings, &set.image_embeddings),
    };
    if queries.len() != targets.len() {
        return Err(EvalError::ShapeMismatch(format!("{} queries, {} targets", queries.len(), targets.len())));
    }
    if queries.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = queries
        .iter()
        .enumerate()
        .filter(|(i, q)| {
            let own = dot(q, &targets[*i]);
            let ahead = targets
                .iter()
                .enumerate()
                .filter(|(j, t)| {
                    let s = dot(q, t);
                    s > own || (s == own && j < i)
                })
                .count();
            ahead < k
        })
        .count();
    Ok(hits as f64 / queries.len() as f64)
}

static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}").unwrap());

/// Lowercase, drop Unicode punctuation, collapse whitespace.
pub fn normalize_answer(s: &str) -> String {
    let lower = s.to_lowercase();
    PUNCT.replace_all(&lower, "").split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn exact_match_accuracy<P: AsRef<str>, R: AsRef<str>>(predictions: &[P], references: &[R]) -> Result<f64, EvalError> {
    if predictions.len() != references.len() {
        return Err(EvalError::LengthMismatch { predictions: predictions.len(), references: references.len() });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = predictions
        .iter()
        .zip(references)
        .filter(|(p, r)| normalize_answer(p.as_ref()) == normalize_answer(r.as_ref()))
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// `−Σ ln p_t` over per-position probabilities of the observed tokens.
pub fn causal_lm_loss(probabilities: &[f64]) -> Result<f64, EvalError> {
    if probabilities.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut total = 0.0;
    for (position, &p) in probabilities.iter().enumerate() {
        if p == 0.0 {
            return Err(EvalError::ZeroProbability(position));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(EvalError::InvalidProbability { position, value: p });
        }
        total -= p.ln();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn infonce_single_pair_is_zero() {
        let b = ContrastiveBatch::new(vec![basis(3, 0)], vec![basis(3, 1)], 0.07).unwrap();
        let l = infonce_loss(&b).unwrap();
        assert!(l.loss.abs() < 1e-12 && l.image_to_text.abs() < 1e-12 && l.text_to_image.abs() < 1e-12);
    }

    #[test]
    fn infonce_uniform_is_ln_n() {
        let b = ContrastiveBatch::new(vec![basis(4, 2); 5], vec![basis(4, 2); 5], 0.07).unwrap();
        assert!((infonce_loss(&b).unwrap().loss - 5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn infonce_validation() {
        assert!(matches!(ContrastiveBatch::new(vec![basis(2, 0)], vec![basis(2, 0)], 0.0), Err(EvalError::NonPositiveTemperature(_))));
        assert!(matches!(
            ContrastiveBatch::new(vec![vec![2.0, 0.0]], vec![basis(2, 0)], 1.0),
            Err(EvalError::NotUnitNorm { what: "image", row: 0, .. })
        ));
        let raw = ContrastiveBatch { z_image: vec![basis(2, 0)], z_text: vec![basis(2, 0)], tau: -1.0 };
        assert!(matches!(infonce_loss(&raw), Err(EvalError::NonPositiveTemperature(_))));
    }

    #[test]
    fn vqa_identity_and_ties() {
        let img = l2_normalize(&[1.0, 2.0, 3.0]);
        let inst = ClosedVqaInstance {
            image_embedding: img.clone(),
            candidate_embeddings: vec![basis(3, 0), basis(3, 1), img],
            correct_index: 2,
        };
        assert_eq!(closed_vqa_predict(&inst), 2);
        let orth = ClosedVqaInstance {
            image_embedding: basis(3, 0),
            candidate_embeddings: vec![basis(3, 1), basis(3, 2)],
            correct_index: 1,
        };
        assert_eq!(closed_vqa_predict(&orth), 0);
    }

    #[test]
    fn accuracy_is_mean_over_variants() {
        let make = |correct: usize, n: usize| -> Vec<ClosedVqaInstance> {
            (0..n)
                .map(|i| ClosedVqaInstance {
                    image_embedding: basis(2, 0),
                    candidate_embeddings: vec![basis(2, 0), basis(2, 1)],
                    correct_index: if i < correct { 0 } else { 1 },
                })
                .collect()
        };
        assert!((classification_accuracy(&[make(5, 10), make(7, 10)], 2).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(classification_accuracy(&[make(4, 4), make(4, 4)], 2).unwrap(), 1.0);
        assert!(matches!(
            classification_accuracy(&[make(1, 2)], 2),
            Err(EvalError::VariantCountMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn recall_bounds() {
        let set = RetrievalSet {
            image_embeddings: (0..4).map(|i| basis(4, i)).collect(),
            caption_embeddings: (0..4).map(|i| basis(4, i)).collect(),
        };
        assert_eq!(recall_at_k(&set, 1, Direction::I2T).unwrap(), 1.0);
        assert_eq!(recall_at_k(&set, 1, Direction::T2I).unwrap(), 1.0);
        let scrambled = RetrievalSet {
            image_embeddings: set.image_embeddings.clone(),
            caption_embeddings: (0..4).map(|i| basis(4, (i + 1) % 4)).collect(),
        };
        assert_eq!(recall_at_k(&scrambled, 4, Direction::I2T).unwrap(), 1.0);
        assert_eq!(recall_at_k(&scrambled, 1, Direction::I2T).unwrap(), 0.0);
        assert!(matches!(recall_at_k(&set, 0, Direction::I2T), Err(EvalError::InvalidK)));
    }

    #[test]
    fn exact_match_normalization() {
        assert_eq!(normalize_answer("  Yes. "), "yes");
        assert_eq!(normalize_answer("Adeno-carcinoma"), "adenocarcinoma");
        assert_eq!(normalize_answer("«Ca²⁺»  signal"), "ca²⁺ signal");
        assert_eq!(exact_match_accuracy(&["Yes.", "no"], &["yes", "yes"]).unwrap(), 0.5);
        assert!(matches!(exact_match_accuracy(&["a"], &["a", "b"]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn causal_loss_closed_forms() {
        assert_eq!(causal_lm_loss(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((causal_lm_loss(&[0.5, 0.5]).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(matches!(causal_lm_loss(&[0.3, 0.0]), Err(EvalError::ZeroProbability(1))));
        assert!(matches!(causal_lm_loss(&[1.5]), Err(EvalError::InvalidProbability { .. })));
    }
}
