//! Regression and classification backends for Q-value estimation and
//! terminal diagnosis.

mod classifier;
mod cv;
pub mod kernel;
mod nearest;
mod ridge;

pub use classifier::{ClassifierSpec, MaskedClassifier};
pub use cv::{cv_accuracy, stratified_folds, CvClassifier};
pub use kernel::{median_bandwidths, rbf_gram};
pub use nearest::NearestNeighbor;
pub use ridge::KernelRidge;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel regression configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// Per-column RBF bandwidths (positive).
    pub bandwidths: Vec<f64>,
    pub nystrom: Nystrom,
    /// Nonnegative ridge weight.
    pub ridge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Nystrom {
    /// Full kernel solve over all training rows.
    Exact,
    /// Reduced-rank solve on `rank` seeded uniformly-subsampled landmark rows.
    Rank { rank: usize, seed: u64 },
}

/// A fitted per-(superstate, action) value regressor.
///
/// Enum dispatch keeps models serializable; artifacts reload to bit-identical
/// predictions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum QModel {
    Ridge(KernelRidge),
    Nearest(NearestNeighbor),
}

impl QModel {
    /// Predict on full-width rows; the model selects its own columns.
    pub fn predict_full(&self, full: ArrayView2<f64>) -> Result<Array1<f64>> {
        match self {
            QModel::Ridge(m) => m.predict_full(full),
            QModel::Nearest(m) => m.predict_full(full),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        match self {
            QModel::Ridge(m) => m.predict_row(row),
            QModel::Nearest(m) => m.predict_row(row),
        }
    }
}

/// How the solver fits Q-estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QTrainer {
    /// Kernel ridge with optional Nyström rank (None = exact solve).
    Ridge { rank: Option<usize>, ridge: f64 },
    /// Memorizing 1-NN; in-sample predictions are the targets themselves.
    /// The interpolation limit, used by oracle checks on unique-row data.
    Interpolating,
}

impl QTrainer {
    /// Fits a regressor of `targets` on the given global `cols` of `full`.
    ///
    /// Returns the model plus its in-sample predictions (the vector the
    /// solver maximizes over). `salt` seeds landmark subsampling, so fits
    /// are pure functions of (columns, targets, salt).
    pub fn fit(
        &self,
        full: ArrayView2<f64>,
        cols: &[usize],
        targets: ArrayView1<f64>,
        bandwidths_all: &[f64],
        salt: u64,
    ) -> Result<(QModel, Array1<f64>)> {
        let x = full.select(ndarray::Axis(1), cols);
        match *self {
            QTrainer::Ridge { rank, ridge } => {
                let bandwidths: Vec<f64> = cols.iter().map(|&c| bandwidths_all[c]).collect();
                let nystrom = match rank {
                    None => Nystrom::Exact,
                    Some(r) => {
                        if r == 0 {
                            return Err(Error::Config("Nyström rank must be positive".into()));
                        }
                        Nystrom::Rank { rank: r, seed: salt }
                    }
                };
                let spec = KernelSpec { bandwidths, nystrom, ridge };
                let model = KernelRidge::fit(x.view(), targets, &spec)?;
                let in_sample = model.predict(x.view())?;
                let model = model.with_cols(cols.to_vec())?;
                Ok((QModel::Ridge(model), in_sample))
            }
            QTrainer::Interpolating => {
                let model = NearestNeighbor::fit(x.view(), targets)?.with_cols(cols.to_vec())?;
                let in_sample = targets.to_owned();
                Ok((QModel::Nearest(model), in_sample))
            }
        }
    }
}

pub(crate) fn solve_psd_with_jitter(
    a: nalgebra::DMatrix<f64>,
    b: nalgebra::DVector<f64>,
) -> Result<nalgebra::DVector<f64>> {
    let m = a.nrows();
    let scale = 1.0 + a.diagonal().iter().sum::<f64>().abs() / m.max(1) as f64;
    let mut jitter = 0.0;
    for _ in 0..4 {
        let mut try_a = a.clone();
        for i in 0..m {
            try_a[(i, i)] += jitter;
        }
        if let Some(chol) = nalgebra::Cholesky::new(try_a) {
            return Ok(chol.solve(&b));
        }
        jitter = if jitter == 0.0 { 1e-10 * scale } else { jitter * 100.0 };
    }
    Err(Error::IllConditioned(
        "positive-semidefinite system not factorizable".into(),
    ))
}
