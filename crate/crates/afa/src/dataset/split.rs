//! Reproducible train/test splits.
//!
//! Every split is a pure function of (seed, kind, attempt). The attempt
//! counter increments when a draw leaves a training part without both
//! classes; after 100 attempts the split fails.

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::util::{mix_seed, tags};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub kind: SplitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// One split holding out `fraction` of the rows for testing.
    Holdout { fraction: f64 },
    /// `reps` bootstrap resamples; train drawn with replacement, test = out-of-bag.
    Bootstrap { reps: usize },
    /// `k` disjoint folds; pair `i` tests on fold `i`.
    KFold { k: usize },
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SplitKind::Holdout { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(Error::Config(format!(
                        "holdout fraction {fraction} must lie in (0,1)"
                    )));
                }
            }
            SplitKind::Bootstrap { reps } => {
                if reps < 2 {
                    return Err(Error::Config("bootstrap reps must be >= 2".into()));
                }
            }
            SplitKind::KFold { k } => {
                if k < 2 {
                    return Err(Error::Config("k-fold needs k >= 2".into()));
                }
            }
        }
        Ok(())
    }

    /// Number of (train, test) pairs the spec produces.
    pub fn n_parts(&self) -> usize {
        match self.kind {
            SplitKind::Holdout { .. } => 1,
            SplitKind::Bootstrap { reps } => reps,
            SplitKind::KFold { k } => k,
        }
    }
}

fn has_both_classes(labels: &Array1<u8>, idx: &[usize]) -> bool {
    idx.iter().any(|&i| labels[i] == 0) && idx.iter().any(|&i| labels[i] == 1)
}

/// Row-index splits for a label vector; `part` addresses one (train, test)
/// pair, so a given (seed, part) can be reproduced without generating the rest.
pub fn split_indices(
    labels: &Array1<u8>,
    spec: &SplitSpec,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    spec.validate()?;
    let n = labels.len();
    (0..spec.n_parts())
        .map(|part| split_part(labels, spec, part, n))
        .collect()
}

fn split_part(
    labels: &Array1<u8>,
    spec: &SplitSpec,
    part: usize,
    n: usize,
) -> Result<(Vec<usize>, Vec<usize>)> {
    // K-fold carves every fold out of ONE permutation (folds must stay
    // pairwise disjoint), so its seed and its accept/reject decision ignore
    // `part`; holdout and bootstrap draw each part independently.
    for attempt in 0..100u64 {
        match spec.kind {
            SplitKind::Holdout { fraction } => {
                let seed = mix_seed(spec.seed, &[tags::SPLIT, 1, part as u64, attempt]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let n_test = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
                let mut test: Vec<usize> = perm[..n_test].to_vec();
                let mut train: Vec<usize> = perm[n_test..].to_vec();
                test.sort_unstable();
                train.sort_unstable();
                if has_both_classes(labels, &train) {
                    return Ok((train, test));
                }
            }
            SplitKind::KFold { k } => {
                if k > n {
                    return Err(Error::Config(format!("k = {k} exceeds {n} rows")));
                }
                let seed = mix_seed(spec.seed, &[tags::SPLIT, 3, attempt]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                // Accept the permutation only if EVERY fold's train part is valid.
                let all_valid = (0..k).all(|fold| {
                    let train: Vec<usize> = perm
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| j % k != fold)
                        .map(|(_, &row)| row)
                        .collect();
                    has_both_classes(labels, &train)
                });
                if all_valid {
                    let mut test = Vec::new();
                    let mut train = Vec::new();
                    for (j, &row) in perm.iter().enumerate() {
                        if j % k == part {
                            test.push(row);
                        } else {
                            train.push(row);
                        }
                    }
                    test.sort_unstable();
                    train.sort_unstable();
                    return Ok((train, test));
                }
            }
            SplitKind::Bootstrap { .. } => {
                let seed = mix_seed(spec.seed, &[tags::SPLIT, 2, part as u64, attempt]);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut train: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                train.sort_unstable();
                let mut in_bag = vec![false; n];
                for &i in &train {
                    in_bag[i] = true;
                }
                let test: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
                if !test.is_empty() && has_both_classes(labels, &train) {
                    return Ok((train, test));
                }
            }
        }
    }
    Err(Error::Data(
        "could not produce a split with both classes in train after 100 attempts".into(),
    ))
}

/// Materialized dataset splits.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<Vec<(Dataset, Dataset)>> {
    let parts = split_indices(d.labels(), spec)?;
    parts
        .into_iter()
        .map(|(train, test)| Ok((d.select_rows(&train)?, d.select_rows(&test)?)))
        .collect()
}
