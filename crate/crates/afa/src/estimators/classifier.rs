//! Shared-weight masked kernel logistic classifier.
//!
//! One model serves every superstate: it is fit once on full rows, and at
//! prediction time the columns of non-acquired groups are replaced by their
//! training-population means. The kernel is additive over columns (a per-
//! column RBF feature map with scalar landmarks), so the weight vector
//! decomposes per column and masking a column only switches that column's
//! contribution between its observed value and its mean.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::median_bandwidths;
use super::solve_psd_with_jitter;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    /// Scalar landmarks per column for the per-column feature map.
    pub per_column_rank: usize,
    /// L2 penalty on non-intercept weights.
    pub ridge: f64,
    pub max_iters: usize,
    /// Convergence threshold on the max-abs penalized gradient.
    pub tol: f64,
    /// Masked training replicas per row (0 = fit on full rows only).
    ///
    /// Each replica re-observes a row under a random group mask with the
    /// masked columns at their population means, exactly as prediction will
    /// see them. Without this, a full-row fit spreads weight across all
    /// columns and sparsely-acquired superstates barely move the logit.
    pub mask_replicas: usize,
    pub seed: u64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        ClassifierSpec {
            per_column_rank: 8,
            ridge: 1.0,
            max_iters: 100,
            tol: 1e-6,
            mask_replicas: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskedClassifier {
    /// Global column span of each feature group (start, end).
    group_ranges: Vec<(usize, usize)>,
    /// Per-column scalar landmark values.
    landmarks: Vec<Vec<f64>>,
    /// Per-column weights, same shape as `landmarks`.
    weights: Vec<Vec<f64>>,
    bandwidths: Vec<f64>,
    /// Training-population mean per column, substituted for masked columns.
    means: Vec<f64>,
    intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(1e-12, 1.0 - 1e-12)
}

impl MaskedClassifier {
    /// Fits on every row of `d`.
    pub fn fit(d: &Dataset, spec: &ClassifierSpec) -> Result<MaskedClassifier> {
        let rows: Vec<usize> = (0..d.n_rows()).collect();
        Self::fit_rows(d, &rows, spec)
    }

    /// Fits on the given rows only (used per CV fold).
    pub fn fit_rows(d: &Dataset, rows: &[usize], spec: &ClassifierSpec) -> Result<MaskedClassifier> {
        let x = d.values().select(Axis(0), rows);
        let y: Vec<f64> = rows.iter().map(|&i| d.labels()[i] as f64).collect();
        if !y.iter().any(|&v| v == 0.0) || !y.iter().any(|&v| v == 1.0) {
            return Err(Error::Data("classifier fit needs both classes".into()));
        }
        let n = x.nrows();
        let c_cols = x.ncols();
        let m = spec.per_column_rank.min(n).max(1);

        let bandwidths = median_bandwidths(x.view());
        let means: Vec<f64> = (0..c_cols)
            .map(|c| x.column(c).sum() / n as f64)
            .collect();

        // Same seeded landmark rows for every column.
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
        idx.sort_unstable();
        let landmarks: Vec<Vec<f64>> = (0..c_cols)
            .map(|c| idx.iter().map(|&i| x[[i, c]]).collect())
            .collect();

        // Random group masks for the augmented replicas: uniform acquired
        // count first, then uniform membership (the sizes prediction sees).
        let group_ranges: Vec<(usize, usize)> = (0..d.n_groups())
            .map(|g| {
                let r = d.group_range(g);
                (r.start, r.end)
            })
            .collect();
        let n_groups = group_ranges.len();
        let mut col_masked = vec![false; c_cols];
        let mut group_pool: Vec<usize> = (0..n_groups).collect();

        // Design matrix: intercept plus m RBF features per column; one block
        // of full rows, then `mask_replicas` blocks of masked re-observations.
        let rows_total = n * (1 + spec.mask_replicas);
        let width = 1 + c_cols * m;
        let mut z = Array2::zeros((rows_total, width));
        let mut y_aug = Vec::with_capacity(rows_total);
        let masked_feature: Vec<Vec<f64>> = (0..c_cols)
            .map(|c| {
                let inv2 = 0.5 / (bandwidths[c] * bandwidths[c]);
                landmarks[c]
                    .iter()
                    .map(|&l| {
                        let dlt = means[c] - l;
                        (-dlt * dlt * inv2).exp()
                    })
                    .collect()
            })
            .collect();
        for rep in 0..=spec.mask_replicas {
            for i in 0..n {
                let row = rep * n + i;
                z[[row, 0]] = 1.0;
                if rep > 0 {
                    let keep = rng.gen_range(0..=n_groups);
                    for (k, slot) in group_pool.iter_mut().enumerate() {
                        *slot = k;
                    }
                    col_masked.iter_mut().for_each(|v| *v = true);
                    for pick in 0..keep {
                        let j = rng.gen_range(pick..n_groups);
                        group_pool.swap(pick, j);
                        let (start, end) = group_ranges[group_pool[pick]];
                        for flag in &mut col_masked[start..end] {
                            *flag = false;
                        }
                    }
                }
                for c in 0..c_cols {
                    let block = 1 + c * m;
                    if rep > 0 && col_masked[c] {
                        for (j, &f) in masked_feature[c].iter().enumerate() {
                            z[[row, block + j]] = f;
                        }
                    } else {
                        let inv2 = 0.5 / (bandwidths[c] * bandwidths[c]);
                        for (j, &l) in landmarks[c].iter().enumerate() {
                            let dlt = x[[i, c]] - l;
                            z[[row, block + j]] = (-dlt * dlt * inv2).exp();
                        }
                    }
                }
                y_aug.push(y[i]);
            }
        }

        let w = irls(&z, &y_aug, spec)?;

        let weights: Vec<Vec<f64>> = (0..c_cols)
            .map(|c| w.as_slice().unwrap()[1 + c * m..1 + (c + 1) * m].to_vec())
            .collect();
        Ok(MaskedClassifier {
            group_ranges: (0..d.n_groups())
                .map(|g| {
                    let r = d.group_range(g);
                    (r.start, r.end)
                })
                .collect(),
            landmarks,
            weights,
            bandwidths,
            means,
            intercept: w[0],
        })
    }

    pub fn n_cols(&self) -> usize {
        self.means.len()
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn n_groups(&self) -> usize {
        self.group_ranges.len()
    }

    /// The additive contribution of column `c` when it carries value `v`.
    pub fn column_contribution(&self, c: usize, v: f64) -> f64 {
        let inv2 = 0.5 / (self.bandwidths[c] * self.bandwidths[c]);
        self.landmarks[c]
            .iter()
            .zip(&self.weights[c])
            .map(|(&l, &w)| {
                let d = v - l;
                w * (-d * d * inv2).exp()
            })
            .sum()
    }

    /// Contribution of column `c` when masked (its population mean).
    pub fn masked_contribution(&self, c: usize) -> f64 {
        self.column_contribution(c, self.means[c])
    }

    /// Log-odds for a full row with only the groups in `acquired_mask`
    /// (bit g = group g) observed; all other columns read their means.
    pub fn masked_logit(&self, row: &[f64], acquired_mask: u64) -> f64 {
        let mut z = self.intercept;
        for (g, &(start, end)) in self.group_ranges.iter().enumerate() {
            let acquired = acquired_mask & (1 << g) != 0;
            for c in start..end {
                z += if acquired {
                    self.column_contribution(c, row[c])
                } else {
                    self.masked_contribution(c)
                };
            }
        }
        z
    }

    /// Probability of the positive class under masking; always in (0, 1).
    pub fn predict_proba(&self, row: &[f64], acquired_mask: u64) -> f64 {
        sigmoid(self.masked_logit(row, acquired_mask))
    }

    /// Zeroes the weights of one group's columns (test/diagnostic hook).
    pub fn zero_group_weights(&mut self, group: usize) {
        let (start, end) = self.group_ranges[group];
        for c in start..end {
            for w in &mut self.weights[c] {
                *w = 0.0;
            }
        }
    }
}

/// Damped Newton (IRLS) for L2-penalized logistic regression.
fn irls(z: &Array2<f64>, y: &[f64], spec: &ClassifierSpec) -> Result<Array1<f64>> {
    let n = z.nrows();
    let width = z.ncols();
    let prevalence = y.iter().sum::<f64>() / n as f64;
    let mut w = Array1::zeros(width);
    w[0] = (prevalence.clamp(1e-6, 1.0 - 1e-6) / (1.0 - prevalence.clamp(1e-6, 1.0 - 1e-6))).ln();

    let penalty = |w: &Array1<f64>| -> f64 {
        0.5 * spec.ridge * w.iter().skip(1).map(|v| v * v).sum::<f64>()
    };
    let nll = |w: &Array1<f64>| -> f64 {
        let eta = z.dot(w);
        let mut s = 0.0;
        for i in 0..n {
            let e = eta[i];
            s += e.max(0.0) + (-e.abs()).exp().ln_1p() - y[i] * e;
        }
        s + penalty(w)
    };

    let mut grad_norm = f64::INFINITY;
    for _it in 0..spec.max_iters {
        let eta = z.dot(&w);
        let p = eta.mapv(sigmoid);
        // gradient of the penalized NLL (sign flipped: we solve H d = -g)
        let resid = Array1::from_iter((0..n).map(|i| y[i] - p[i]));
        let mut g = z.t().dot(&resid);
        for j in 1..width {
            g[j] -= spec.ridge * w[j];
        }
        grad_norm = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if grad_norm <= spec.tol {
            return Ok(w);
        }

        let sqrt_w = p.mapv(|pi| (pi * (1.0 - pi)).max(1e-10).sqrt());
        let zw = z * &sqrt_w.view().insert_axis(Axis(1));
        let h_nd = zw.t().dot(&zw);
        let mut h = nalgebra::DMatrix::from_fn(width, width, |r, c| h_nd[[r, c]]);
        for j in 1..width {
            h[(j, j)] += spec.ridge;
        }
        let rhs = nalgebra::DVector::from_fn(width, |r, _| g[r]);
        let step = solve_psd_with_jitter(h, rhs)?;
        let step = Array1::from_iter(step.iter().cloned());

        // Step halving keeps the penalized NLL non-increasing.
        let f0 = nll(&w);
        let mut t = 1.0;
        loop {
            let cand = &w + &(&step * t);
            if nll(&cand) <= f0 || t < 1e-4 {
                w = cand;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::NonConvergence {
        iters: spec.max_iters,
        grad_norm,
    })
}
