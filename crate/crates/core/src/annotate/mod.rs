//! Expert-guided clustering: embed pairs, reduce with PCA, cluster with
//! K-means, sample per-cluster annotation sheets and propagate the labels
//! annotators assign back to every cluster member.

mod embed;
mod kmeans;
mod pca;
mod sheets;

pub use embed::{embed, Embedder, EmbeddingMatrix, HashEmbedder};
pub use kmeans::{kmeans, Clustering, KMeansConfig, CONVERGENCE_TOLERANCE, DEFAULT_K, DEFAULT_MAX_ITERS};
pub use pca::{fit_pca, DenseMatrix, PcaModel, DEFAULT_COMPONENTS};
pub use sheets::{apply_labels, make_sheets, propagate_labels, read_sheets, write_sheets, AnnotationSheet, DEFAULT_SAMPLE_SIZE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("row {row}: embedding has dimension {found}, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, found: usize },
    #[error("row {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("PCA needs at least {components} rows, got {rows}")]
    RankDeficiency { rows: usize, components: usize },
    #[error("cannot extract {components} components from {dims}-dimensional data")]
    InvalidComponents { components: usize, dims: usize },
    #[error("K-means with K={k} needs at least {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("clusters without labels: {0:?}")]
    UnlabeledCluster(Vec<usize>),
    #[error("invalid embeddings file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
