use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnnotateError, EmbeddingMatrix};

pub const DEFAULT_COMPONENTS: usize = 25;

/// Row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix shape");
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        DenseMatrix::new(rows.len(), cols, rows.concat())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn from_embeddings(m: &EmbeddingMatrix) -> Self {
        DenseMatrix::new(m.rows(), m.dims, m.values.iter().map(|&v| v as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// C×D, orthonormal rows, sorted by explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, x: &DenseMatrix) -> DenseMatrix {
        let c = self.components.len();
        let data: Vec<f64> = (0..x.rows)
            .into_par_iter()
            .flat_map_iter(|i| {
                let row = x.row(i);
                self.components.iter().map(move |comp| {
                    comp.iter().zip(row).zip(&self.mean).map(|((w, v), m)| w * (v - m)).sum::<f64>()
                })
            })
            .collect();
        DenseMatrix::new(x.rows, c, data)
    }

    pub fn reconstruct(&self, projected: &DenseMatrix) -> DenseMatrix {
        let d = self.mean.len();
        let mut data = Vec::with_capacity(projected.rows * d);
        for i in 0..projected.rows {
            let coords = projected.row(i);
            for j in 0..d {
                let v: f64 = self.components.iter().zip(coords).map(|(comp, c)| comp[j] * c).sum();
                data.push(self.mean[j] + v);
            }
        }
        DenseMatrix::new(projected.rows, d, data)
    }
}

/// Principal components from the eigendecomposition of the sample covariance
/// (denominator N−1). Data is mean-centred but not standardized. Each
/// component's largest-magnitude coordinate is made positive.
pub fn fit_pca(x: &DenseMatrix, n_components: usize) -> Result<PcaModel, AnnotateError> {
    let (n, d) = (x.rows, x.cols);
    if n_components == 0 || n_components > d {
        return Err(AnnotateError::InvalidComponents { components: n_components, dims: d });
    }
    if n < n_components {
        return Err(AnnotateError::RankDeficiency { rows: n, components: n_components });
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let denom = (n.max(2) - 1) as f64;
    // Each covariance row is an independent fixed-order sum.
    let upper: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![0.0; d - j];
            for i in 0..n {
                let row = x.row(i);
                let a = row[j] - mean[j];
                if a == 0.0 {
                    continue;
                }
                for (slot, k) in acc.iter_mut().zip(j..d) {
                    *slot += a * (row[k] - mean[k]);
                }
            }
            acc.iter_mut().for_each(|v| *v /= denom);
            acc
        })
        .collect();
    let cov = DMatrix::from_fn(d, d, |r, c| if r <= c { upper[r][c - r] } else { upper[c][r - c] });

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(n_components);
    let mut explained = Vec::with_capacity(n_components);
    for &idx in order.iter().take(n_components) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel { mean, components, explained_variance: explained })
}
