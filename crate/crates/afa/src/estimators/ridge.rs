//! Kernel ridge regression, exact or Nyström-approximated.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::rbf_gram;
use super::{solve_psd_with_jitter, KernelSpec, Nystrom};
use crate::error::{Error, Result};

/// A fitted kernel ridge regressor.
///
/// `cols` records which global dataset columns the model reads, so a model
/// trained on a superstate's feature slice can be applied to full rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelRidge {
    cols: Vec<usize>,
    landmarks: Array2<f64>,
    weights: Array1<f64>,
    bandwidths: Vec<f64>,
}

impl KernelRidge {
    /// Fits on an already-selected matrix (n x d). `spec.bandwidths` must
    /// have length d.
    ///
    /// Exact mode solves (K + ridge I) a = y over all rows. Nyström mode
    /// picks `rank` landmark rows by a seeded uniform subsample and solves
    /// the reduced normal equations
    /// (K_mn K_nm + ridge K_mm) b = K_mn y.
    pub fn fit(x: ArrayView2<f64>, y: ArrayView1<f64>, spec: &KernelSpec) -> Result<KernelRidge> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::Data("kernel ridge needs at least one row".into()));
        }
        if y.len() != n {
            return Err(Error::Dimensions(format!("{} rows vs {} targets", n, y.len())));
        }
        if spec.bandwidths.len() != x.ncols() {
            return Err(Error::Dimensions(format!(
                "{} bandwidths for {} columns",
                spec.bandwidths.len(),
                x.ncols()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite input to kernel ridge".into()));
        }

        match spec.nystrom {
            Nystrom::Exact => {
                let k = rbf_gram(x, x, &spec.bandwidths)?;
                let mut a = nalgebra::DMatrix::from_fn(n, n, |r, c| k[[r, c]]);
                for i in 0..n {
                    a[(i, i)] += spec.ridge;
                }
                let b = nalgebra::DVector::from_fn(n, |r, _| y[r]);
                let chol = nalgebra::Cholesky::new(a).ok_or_else(|| {
                    Error::IllConditioned(
                        "exact kernel system is singular (try a positive ridge)".into(),
                    )
                })?;
                let alpha = chol.solve(&b);
                Ok(KernelRidge {
                    cols: (0..x.ncols()).collect(),
                    landmarks: x.to_owned(),
                    weights: Array1::from_iter(alpha.iter().cloned()),
                    bandwidths: spec.bandwidths.clone(),
                })
            }
            Nystrom::Rank { rank, seed } => {
                let m = rank.min(n);
                if m == 0 {
                    return Err(Error::Config("Nyström rank must be positive".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
                idx.sort_unstable();
                let landmarks = x.select(Axis(0), &idx);
                let k_mn = rbf_gram(landmarks.view(), x, &spec.bandwidths)?;
                let k_mm = rbf_gram(landmarks.view(), landmarks.view(), &spec.bandwidths)?;
                // A = K_mn K_nm + ridge K_mm
                let a_nd = k_mn.dot(&k_mn.t()) + &(k_mm * spec.ridge);
                let b_nd = k_mn.dot(&y);
                let a = nalgebra::DMatrix::from_fn(m, m, |r, c| a_nd[[r, c]]);
                let b = nalgebra::DVector::from_fn(m, |r, _| b_nd[r]);
                let beta = solve_psd_with_jitter(a, b)?;
                Ok(KernelRidge {
                    cols: (0..x.ncols()).collect(),
                    landmarks,
                    weights: Array1::from_iter(beta.iter().cloned()),
                    bandwidths: spec.bandwidths.clone(),
                })
            }
        }
    }

    /// Re-keys the model onto global dataset columns.
    pub fn with_cols(mut self, cols: Vec<usize>) -> Result<KernelRidge> {
        if cols.len() != self.bandwidths.len() {
            return Err(Error::Dimensions(format!(
                "{} cols for a {}-column model",
                cols.len(),
                self.bandwidths.len()
            )));
        }
        self.cols = cols;
        Ok(self)
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Predicts on an already-selected matrix (q x d).
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.bandwidths.len() {
            return Err(Error::Dimensions(format!(
                "predict: {} columns, model expects {}",
                x.ncols(),
                self.bandwidths.len()
            )));
        }
        if x.nrows() == 0 {
            return Ok(Array1::zeros(0));
        }
        let k = rbf_gram(x, self.landmarks.view(), &self.bandwidths)?;
        Ok(k.dot(&self.weights))
    }

    /// Predicts on full rows, selecting the model's global columns.
    pub fn predict_full(&self, full: ArrayView2<f64>) -> Result<Array1<f64>> {
        let sel = full.select(Axis(1), &self.cols);
        self.predict(sel.view())
    }

    /// Single full row convenience.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let sel: Vec<f64> = self.cols.iter().map(|&c| row[c]).collect();
        let x = ArrayView2::from_shape((1, sel.len()), &sel)
            .map_err(|e| Error::Dimensions(e.to_string()))?;
        Ok(self.predict(x)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn spec_exact(d: usize, ridge: f64) -> KernelSpec {
        KernelSpec {
            bandwidths: vec![1.0; d],
            nystrom: Nystrom::Exact,
            ridge,
        }
    }

    #[test]
    fn zero_targets_give_zero_predictions() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = array![0.0, 0.0, 0.0];
        let m = KernelRidge::fit(x.view(), y.view(), &spec_exact(1, 1e-3)).unwrap();
        let p = m.predict(x.view()).unwrap();
        assert!(p.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn near_interpolation_with_tiny_ridge() {
        let x = array![[0.0], [1.0], [2.5]];
        let y = array![1.0, -0.5, 2.0];
        let m = KernelRidge::fit(x.view(), y.view(), &spec_exact(1, 1e-8)).unwrap();
        let p = m.predict(x.view()).unwrap();
        for (a, b) in p.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn empty_query_gives_empty_vector() {
        let x = array![[0.0], [1.0]];
        let y = array![1.0, 2.0];
        let m = KernelRidge::fit(x.view(), y.view(), &spec_exact(1, 1e-3)).unwrap();
        let q = Array2::zeros((0, 1));
        assert_eq!(m.predict(q.view()).unwrap().len(), 0);
    }

    #[test]
    fn batch_equals_row_by_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((20, 3), |_| rng.gen_range(-1.0..1.0));
        let y = Array1::from_shape_fn(20, |_| rng.gen_range(-1.0..1.0));
        let m = KernelRidge::fit(x.view(), y.view(), &spec_exact(3, 1e-3)).unwrap();
        let q = Array2::from_shape_fn((7, 3), |_| rng.gen_range(-1.0..1.0));
        let batch = m.predict(q.view()).unwrap();
        for i in 0..7 {
            let row = q.row(i).insert_axis(Axis(0));
            let single = m.predict(row).unwrap()[0];
            assert_eq!(batch[i], single);
        }
    }
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nystrom_full_rank_matches_exact_within_1e6() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let x = Array2::from_shape_fn((50, 5), |_| rng.gen_range(-2.0..2.0));
        let y = Array1::from_shape_fn(50, |_| rng.gen_range(-1.0..1.0));
        let bw = super::super::kernel::median_bandwidths(x.view());
        let exact = KernelRidge::fit(
            x.view(),
            y.view(),
            &KernelSpec { bandwidths: bw.clone(), nystrom: Nystrom::Exact, ridge: 1e-3 },
        )
        .unwrap();
        let nys = KernelRidge::fit(
            x.view(),
            y.view(),
            &KernelSpec {
                bandwidths: bw,
                nystrom: Nystrom::Rank { rank: 50, seed: 99 },
                ridge: 1e-3,
            },
        )
        .unwrap();
        let q = Array2::from_shape_fn((30, 5), |_| rng.gen_range(-2.0..2.0));
        let pe = exact.predict(q.view()).unwrap();
        let pn = nys.predict(q.view()).unwrap();
        let gap = pe
            .iter()
            .zip(pn.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(gap < 1e-6, "max gap {gap}");
    }

    #[test]
    fn nystrom_gap_shrinks_as_rank_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let x = Array2::from_shape_fn((60, 4), |_| rng.gen_range(-2.0..2.0));
        let y = Array1::from_shape_fn(60, |i| f64::sin(x[[i, 0]] + x[[i, 1]]));
        let bw = super::super::kernel::median_bandwidths(x.view());
        let exact = KernelRidge::fit(
            x.view(),
            y.view(),
            &KernelSpec { bandwidths: bw.clone(), nystrom: Nystrom::Exact, ridge: 1e-4 },
        )
        .unwrap();
        let pe = exact.predict(x.view()).unwrap();
        let mut gaps = Vec::new();
        for rank in [10, 30, 60] {
            let nys = KernelRidge::fit(
                x.view(),
                y.view(),
                &KernelSpec {
                    bandwidths: bw.clone(),
                    nystrom: Nystrom::Rank { rank, seed: 7 },
                    ridge: 1e-4,
                },
            )
            .unwrap();
            let pn = nys.predict(x.view()).unwrap();
            gaps.push(
                pe.iter()
                    .zip(pn.iter())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max),
            );
        }
        assert!(gaps[0] >= gaps[1] - 1e-12 && gaps[1] >= gaps[2] - 1e-12, "{gaps:?}");
        assert!(gaps[2] < 1e-6);
    }

    #[test]
    fn predictions_are_linear_in_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let x = Array2::from_shape_fn((25, 2), |_| rng.gen_range(-1.0..1.0));
        let y = Array1::from_shape_fn(25, |_| rng.gen_range(-1.0..1.0));
        let spec = spec_exact(2, 1e-3);
        let m1 = KernelRidge::fit(x.view(), y.view(), &spec).unwrap();
        let y3 = &y * 3.0;
        let m3 = KernelRidge::fit(x.view(), y3.view(), &spec).unwrap();
        let q = Array2::from_shape_fn((5, 2), |_| rng.gen_range(-1.0..1.0));
        let p1 = m1.predict(q.view()).unwrap();
        let p3 = m3.predict(q.view()).unwrap();
        for (a, b) in p1.iter().zip(p3.iter()) {
            assert!((3.0 * a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_rows_at_zero_ridge_signal_ill_conditioning() {
        let x = array![[1.0], [1.0], [2.0]];
        let y = array![0.0, 1.0, 2.0];
        let err = KernelRidge::fit(x.view(), y.view(), &spec_exact(1, 0.0));
        assert!(matches!(err, Err(Error::IllConditioned(_))), "{err:?}");
    }

    #[test]
    fn zero_column_model_predicts_a_constant() {
        // The root superstate has no features: gram is all ones.
        let x = Array2::zeros((4, 0));
        let y = array![1.0, 2.0, 3.0, 4.0];
        let m = KernelRidge::fit(
            x.view(),
            y.view(),
            &KernelSpec { bandwidths: vec![], nystrom: Nystrom::Exact, ridge: 1e-6 },
        )
        .unwrap();
        let p = m.predict(Array2::zeros((2, 0)).view()).unwrap();
        assert!((p[0] - 2.5).abs() < 1e-4, "shrunk mean, got {}", p[0]);
        assert_eq!(p[0], p[1]);
    }

    #[test]
    fn predict_full_selects_global_columns() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = array![0.0, 1.0, 2.0];
        let m = KernelRidge::fit(x.view(), y.view(), &spec_exact(1, 1e-6))
            .unwrap()
            .with_cols(vec![2])
            .unwrap();
        let full = array![[9.0, 9.0, 1.0]];
        let p = m.predict_full(full.view()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-3);
        assert_eq!(p[0], m.predict_row(&[9.0, 9.0, 1.0]).unwrap());
    }
}
