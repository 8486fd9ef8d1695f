//! Column standardization and per-group PCA reduction.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Per-column (mean, std) fitted on training rows, reapplicable to test data.
///
/// Uses the population variance (divide by n). Constant columns are recorded
/// with std 1.0 so they standardize to zero instead of erroring.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Fits on the given rows (all rows when `rows` is `None`).
    pub fn fit(d: &Dataset, rows: Option<&[usize]>) -> Scaler {
        let owned;
        let values = match rows {
            Some(idx) => {
                owned = d.values().select(Axis(0), idx);
                owned.view()
            }
            None => d.values(),
        };
        let n = values.nrows() as f64;
        let mut means = Vec::with_capacity(values.ncols());
        let mut stds = Vec::with_capacity(values.ncols());
        for col in values.axis_iter(Axis(1)) {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            means.push(mean);
            stds.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
        }
        Scaler { means, stds }
    }

    /// Applies z-scoring to every row of a dataset.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        if self.means.len() != d.n_cols() {
            return Err(Error::Dimensions(format!(
                "scaler has {} columns, dataset {}",
                self.means.len(),
                d.n_cols()
            )));
        }
        let mut values = d.values().to_owned();
        for (c, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.means[c]) / self.stds[c]);
        }
        Dataset::new(d.name().to_string(), d.groups().to_vec(), values, d.labels().clone())
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (*v - self.means[c]) / self.stds[c];
        }
    }
}

/// Standardizes every column to mean 0, variance 1 (fit and apply on `d`).
pub fn standardize(d: &Dataset) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(d, None);
    Ok((scaler.apply(d)?, scaler))
}

/// A fitted per-group PCA projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaMap {
    pub group: usize,
    pub mean: Vec<f64>,
    /// k x dims, rows are components ordered by decreasing eigenvalue.
    pub components: Array2<f64>,
    /// Fraction of the group's total variance captured by each component.
    pub explained: Vec<f64>,
}

impl PcaMap {
    /// Fits on the given rows of group `group` (all rows when `None`).
    pub fn fit(d: &Dataset, group: usize, k: usize, rows: Option<&[usize]>) -> Result<PcaMap> {
        let dims = d.group(group).dims;
        if dims <= 1 {
            return Err(Error::Config(format!(
                "group {} is scalar; PCA needs dims > 1",
                d.group(group).name
            )));
        }
        if k == 0 || k > dims {
            return Err(Error::Config(format!(
                "k = {k} out of range for group with {dims} dims"
            )));
        }
        let cols: Vec<usize> = d.group_range(group).collect();
        let full = d.select_cols(&cols);
        let owned;
        let x = match rows {
            Some(idx) => {
                owned = full.select(Axis(0), idx);
                owned.view()
            }
            None => full.view(),
        };
        let n = x.nrows() as f64;
        let mean: Array1<f64> = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = &x - &mean.view().insert_axis(Axis(0));
        // Population covariance, dims x dims.
        let cov = centered.t().dot(&centered) / n;
        let cov_na = nalgebra::DMatrix::from_fn(dims, dims, |r, c| cov[[r, c]]);
        let eig = nalgebra::SymmetricEigen::new(cov_na);
        let mut order: Vec<usize> = (0..dims).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
        let mut components = Array2::zeros((k, dims));
        let mut explained = Vec::with_capacity(k);
        for (out, &src) in order.iter().take(k).enumerate() {
            let col = eig.eigenvectors.column(src);
            // Sign convention: largest-magnitude entry positive.
            let lead = col
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap_or(1.0);
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            for c in 0..dims {
                components[[out, c]] = sign * col[c];
            }
            explained.push(if total > 0.0 {
                eig.eigenvalues[src].max(0.0) / total
            } else {
                0.0
            });
        }
        Ok(PcaMap {
            group,
            mean: mean.to_vec(),
            components,
            explained,
        })
    }

    /// Projects one group's values (already scaled) for a single row.
    pub fn transform_slice(&self, vals: &[f64]) -> Result<Vec<f64>> {
        if vals.len() != self.mean.len() {
            return Err(Error::Dimensions(format!(
                "PCA map expects {} dims, got {}",
                self.mean.len(),
                vals.len()
            )));
        }
        let k = self.components.nrows();
        let mut out = vec![0.0; k];
        for (j, score) in out.iter_mut().enumerate() {
            *score = vals
                .iter()
                .zip(self.mean.iter())
                .enumerate()
                .map(|(c, (v, m))| (v - m) * self.components[[j, c]])
                .sum();
        }
        Ok(out)
    }

    /// Projects the group's columns of every row, returning the reduced dataset.
    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        let cols: Vec<usize> = d.group_range(self.group).collect();
        if cols.len() != self.mean.len() {
            return Err(Error::Dimensions(format!(
                "PCA map for group {} expects {} dims, dataset has {}",
                self.group,
                self.mean.len(),
                cols.len()
            )));
        }
        let x = d.select_cols(&cols);
        let mean = Array1::from_vec(self.mean.clone());
        let centered = &x - &mean.view().insert_axis(Axis(0));
        let scores = centered.dot(&self.components.t());
        d.with_group_columns(self.group, scores)
    }
}

/// Replaces a multidimensional group's columns by its first `k` principal
/// component scores (fit on `train_rows` when given, applied to all rows).
pub fn pca_reduce_group(
    d: &Dataset,
    group: usize,
    k: usize,
    train_rows: Option<&[usize]>,
) -> Result<(Dataset, PcaMap)> {
    let map = PcaMap::fit(d, group, k, train_rows)?;
    Ok((map.apply(d)?, map))
}
