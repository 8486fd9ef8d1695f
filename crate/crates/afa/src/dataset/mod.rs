//! Tabular datasets with feature-group structure and acquisition costs.
//!
//! A *feature group* (the paper's "modality") is the unit of acquisition: it
//! may span several columns (e.g. a PCA-reduced waveform) and carries a single
//! cost. The dataset stores one dense matrix whose columns are partitioned by
//! group, plus binary labels.

mod csvio;
mod schema;
mod split;
mod transform;

pub mod synth;

pub use csvio::{load_csv, write_csv, write_schema};
pub use schema::Schema;
pub use split::{split, split_indices, SplitKind, SplitSpec};
pub use transform::{pca_reduce_group, standardize, PcaMap, Scaler};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An acquirable unit of one or more columns with a single acquisition cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGroup {
    /// Contiguous index in `0..F`.
    pub id: usize,
    pub name: String,
    /// Number of columns the group occupies (scalar feature = 1).
    pub dims: usize,
    /// Nonnegative acquisition cost, in arbitrary currency units.
    pub cost: f64,
}

/// Instance matrix with grouped columns and binary labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    groups: Vec<FeatureGroup>,
    /// Prefix sums: group `g` occupies columns `col_starts[g]..col_starts[g+1]`.
    col_starts: Vec<usize>,
    values: Array2<f64>,
    labels: Array1<u8>,
}

impl Dataset {
    /// Builds a dataset, validating every structural invariant.
    pub fn new(
        name: impl Into<String>,
        groups: Vec<FeatureGroup>,
        values: Array2<f64>,
        labels: Array1<u8>,
    ) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::Data("dataset needs at least one feature group".into()));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.id != i {
                return Err(Error::Data(format!(
                    "group ids must be contiguous: expected {i}, found {} ({})",
                    g.id, g.name
                )));
            }
            if g.dims == 0 {
                return Err(Error::Data(format!("group {} has zero dims", g.name)));
            }
            if !(g.cost >= 0.0) {
                return Err(Error::Data(format!("group {} has negative cost", g.name)));
            }
        }
        let mut col_starts = Vec::with_capacity(groups.len() + 1);
        col_starts.push(0);
        for g in &groups {
            col_starts.push(col_starts.last().unwrap() + g.dims);
        }
        if *col_starts.last().unwrap() != values.ncols() {
            return Err(Error::Dimensions(format!(
                "group dims sum to {} but matrix has {} columns",
                col_starts.last().unwrap(),
                values.ncols()
            )));
        }
        if values.nrows() != labels.len() {
            return Err(Error::Dimensions(format!(
                "{} rows vs {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if values.nrows() < 2 {
            return Err(Error::Data("dataset needs at least 2 rows".into()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        if !labels.iter().any(|&y| y == 0) || !labels.iter().any(|&y| y == 1) {
            return Err(Error::Data("both classes must be present".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in feature matrix".into()));
        }
        Ok(Self {
            name: name.into(),
            groups,
            col_starts,
            values,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    /// Number of feature groups F.
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[FeatureGroup] {
        &self.groups
    }

    pub fn group(&self, id: usize) -> &FeatureGroup {
        &self.groups[id]
    }

    /// Global column range occupied by group `id`.
    pub fn group_range(&self, id: usize) -> std::ops::Range<usize> {
        self.col_starts[id]..self.col_starts[id + 1]
    }

    /// Group owning a global column index.
    pub fn group_of_col(&self, col: usize) -> usize {
        match self.col_starts.binary_search(&col) {
            Ok(g) if g < self.groups.len() => g,
            Ok(g) => g - 1,
            Err(g) => g - 1,
        }
    }

    /// Global columns of a set of groups, ascending.
    pub fn cols_of_groups(&self, groups: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut cols: Vec<usize> = groups
            .into_iter()
            .flat_map(|g| self.group_range(g))
            .collect();
        cols.sort_unstable();
        cols
    }

    /// Sum of costs over a set of groups.
    pub fn cost_of_groups(&self, groups: impl IntoIterator<Item = usize>) -> f64 {
        groups.into_iter().map(|g| self.groups[g].cost).sum()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn labels(&self) -> &Array1<u8> {
        &self.labels
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).to_vec()
    }

    /// Fraction of positive labels.
    pub fn prevalence(&self) -> f64 {
        self.labels.iter().map(|&y| y as usize).sum::<usize>() as f64 / self.n_rows() as f64
    }

    /// Copy of the submatrix restricted to the given columns (in the given order).
    pub fn select_cols(&self, cols: &[usize]) -> Array2<f64> {
        self.values.select(Axis(1), cols)
    }

    /// New dataset restricted to the given rows (kept in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.name.clone(),
            self.groups.clone(),
            self.values.select(Axis(0), rows),
            self.labels.select(Axis(0), rows),
        )
    }

    /// Replaces one group's columns, adjusting dims and the column map.
    pub fn with_group_columns(&self, id: usize, new_cols: Array2<f64>) -> Result<Dataset> {
        if new_cols.nrows() != self.n_rows() {
            return Err(Error::Dimensions(format!(
                "replacement for group {id} has {} rows, dataset has {}",
                new_cols.nrows(),
                self.n_rows()
            )));
        }
        let mut groups = self.groups.clone();
        groups[id].dims = new_cols.ncols();
        let range = self.group_range(id);
        let n = self.n_rows();
        let total = self.n_cols() - range.len() + new_cols.ncols();
        let mut values = Array2::zeros((n, total));
        values
            .slice_mut(ndarray::s![.., ..range.start])
            .assign(&self.values.slice(ndarray::s![.., ..range.start]));
        values
            .slice_mut(ndarray::s![.., range.start..range.start + new_cols.ncols()])
            .assign(&new_cols);
        values
            .slice_mut(ndarray::s![.., range.start + new_cols.ncols()..])
            .assign(&self.values.slice(ndarray::s![.., range.end..]));
        Dataset::new(self.name.clone(), groups, values, self.labels.clone())
    }
}
