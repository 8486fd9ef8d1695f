//! Cross-validated terminal rewards.
//!
//! Rewards at final nodes use the held-out prediction of each training
//! instance: a classifier per fold, fit without that fold, scores it. Because
//! the classifier is additive over columns, the held-out masked log-odds for
//! ANY superstate decompose as `base[i] + sum_{c in mask} delta[i, c]`, both
//! cached at fit time; per-superstate accuracy vectors then cost O(N * cols)
//! with no refitting.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::classifier::{ClassifierSpec, MaskedClassifier};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::util::{mix_seed, tags};

/// Deterministic stratified fold assignment: each class is shuffled by the
/// seed and dealt round-robin, so fold class balance is as even as possible.
///
/// Errors when some fold's training complement would miss a class (only
/// possible when a class has a single member).
pub fn stratified_folds(labels: &Array1<u8>, k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::Config(format!("fold count {k} out of range for {n} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[tags::FOLDS, k as u64]));
    let mut fold_of = vec![0usize; n];
    let mut next = 0usize;
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    for fold in 0..k {
        let train_has = |class: u8| {
            (0..n).any(|i| fold_of[i] != fold && labels[i] == class)
        };
        if !train_has(0) || !train_has(1) {
            return Err(Error::Data(format!(
                "fold {fold}: training complement misses a class"
            )));
        }
    }
    Ok(fold_of)
}

/// K classifiers fit fold-wise plus cached held-out contributions.
#[derive(Debug, Clone)]
pub struct CvClassifier {
    fold_of: Vec<usize>,
    models: Vec<MaskedClassifier>,
    /// Refit on all rows; used for test-time prediction.
    full: MaskedClassifier,
    /// Held-out all-masked log-odds per instance.
    base: Array1<f64>,
    /// Held-out (observed - masked) contribution per instance and column.
    delta: Array2<f64>,
    labels: Array1<u8>,
}

impl CvClassifier {
    pub fn fit(d: &Dataset, k: usize, spec: &ClassifierSpec, seed: u64) -> Result<CvClassifier> {
        let fold_of = stratified_folds(d.labels(), k, seed)?;
        let models: Vec<MaskedClassifier> = (0..k)
            .into_par_iter()
            .map(|fold| {
                let rows: Vec<usize> = (0..d.n_rows()).filter(|&i| fold_of[i] != fold).collect();
                let fold_spec = ClassifierSpec {
                    seed: mix_seed(seed, &[tags::CLASSIFIER, fold as u64]),
                    ..spec.clone()
                };
                MaskedClassifier::fit_rows(d, &rows, &fold_spec)
            })
            .collect::<Result<Vec<_>>>()?;
        let full_spec = ClassifierSpec {
            seed: mix_seed(seed, &[tags::CLASSIFIER, u64::MAX]),
            ..spec.clone()
        };
        let full = MaskedClassifier::fit(d, &full_spec)?;

        let n = d.n_rows();
        let c_cols = d.n_cols();
        let mut base = Array1::zeros(n);
        let mut delta = Array2::zeros((n, c_cols));
        let values = d.values();
        for i in 0..n {
            let m = &models[fold_of[i]];
            let mut b = m.intercept();
            for c in 0..c_cols {
                let masked = m.masked_contribution(c);
                b += masked;
                delta[[i, c]] = m.column_contribution(c, values[[i, c]]) - masked;
            }
            base[i] = b;
        }
        Ok(CvClassifier {
            fold_of,
            models,
            full,
            base,
            delta,
            labels: d.labels().clone(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.base.len()
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn fold_model(&self, fold: usize) -> &MaskedClassifier {
        &self.models[fold]
    }

    /// The all-rows refit used for inference-time terminal prediction.
    pub fn full_model(&self) -> &MaskedClassifier {
        &self.full
    }

    /// Held-out log-odds per instance with exactly `cols` observed.
    pub fn heldout_logits(&self, cols: &[usize]) -> Array1<f64> {
        let mut out = self.base.clone();
        for i in 0..out.len() {
            let mut s = 0.0;
            for &c in cols {
                s += self.delta[[i, c]];
            }
            out[i] += s;
        }
        out
    }

    /// Held-out correctness per instance with exactly `cols` observed.
    ///
    /// Threshold 0.5; a probability of exactly 0.5 counts as incorrect.
    pub fn masked_accuracy(&self, cols: &[usize]) -> Array1<u8> {
        let logits = self.heldout_logits(cols);
        Array1::from_iter(logits.iter().zip(self.labels.iter()).map(|(&z, &y)| {
            let correct = (z > 0.0 && y == 1) || (z < 0.0 && y == 0);
            u8::from(correct)
        }))
    }
}

/// Per-instance held-out correctness for a superstate: 1 iff instance `i`
/// is correctly classified by a model trained on folds excluding `i`, with
/// only the groups in `mask` observed.
pub fn cv_accuracy(
    d: &Dataset,
    mask: u64,
    k: usize,
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<Array1<u8>> {
    let cv = CvClassifier::fit(d, k, spec, seed)?;
    let groups = (0..d.n_groups()).filter(|&g| mask & (1 << g) != 0);
    Ok(cv.masked_accuracy(&d.cols_of_groups(groups)))
}
