//! Memorizing 1-nearest-neighbor regressor.
//!
//! Used as the "perfect" interpolating Q-estimator in solver-vs-bruteforce
//! oracle checks: on datasets with unique rows its in-sample predictions are
//! exactly the training targets.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearestNeighbor {
    cols: Vec<usize>,
    x: Array2<f64>,
    y: Array1<f64>,
}

impl NearestNeighbor {
    pub fn fit(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<NearestNeighbor> {
        if x.nrows() != y.len() || x.nrows() == 0 {
            return Err(Error::Dimensions(format!(
                "1-NN fit: {} rows vs {} targets",
                x.nrows(),
                y.len()
            )));
        }
        Ok(NearestNeighbor {
            cols: (0..x.ncols()).collect(),
            x: x.to_owned(),
            y: y.to_owned(),
        })
    }

    pub fn with_cols(mut self, cols: Vec<usize>) -> Result<NearestNeighbor> {
        if cols.len() != self.x.ncols() {
            return Err(Error::Dimensions("1-NN cols mismatch".into()));
        }
        self.cols = cols;
        Ok(self)
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Training targets; by definition the in-sample interpolation values.
    pub fn targets(&self) -> &Array1<f64> {
        &self.y
    }

    /// Nearest training row by Euclidean distance; ties break to the lowest index.
    pub fn predict(&self, q: ArrayView2<f64>) -> Result<Array1<f64>> {
        if q.ncols() != self.x.ncols() {
            return Err(Error::Dimensions(format!(
                "1-NN predict: {} columns, model expects {}",
                q.ncols(),
                self.x.ncols()
            )));
        }
        let mut out = Array1::zeros(q.nrows());
        for (r, row) in q.rows().into_iter().enumerate() {
            let mut best = (f64::INFINITY, 0usize);
            for (i, xi) in self.x.rows().into_iter().enumerate() {
                let d: f64 = row
                    .iter()
                    .zip(xi.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.0 {
                    best = (d, i);
                }
            }
            out[r] = self.y[best.1];
        }
        Ok(out)
    }

    pub fn predict_full(&self, full: ArrayView2<f64>) -> Result<Array1<f64>> {
        let sel = full.select(Axis(1), &self.cols);
        self.predict(sel.view())
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        let sel: Vec<f64> = self.cols.iter().map(|&c| row[c]).collect();
        let q = ArrayView2::from_shape((1, sel.len()), &sel)
            .map_err(|e| Error::Dimensions(e.to_string()))?;
        Ok(self.predict(q)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recalls_training_targets_on_unique_rows() {
        let x = array![[0.0], [1.0], [5.0]];
        let y = array![10.0, 20.0, 30.0];
        let m = NearestNeighbor::fit(x.view(), y.view()).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
        assert_eq!(m.predict(array![[0.9]].view()).unwrap()[0], 20.0);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let x = array![[0.0], [2.0]];
        let y = array![1.0, 2.0];
        let m = NearestNeighbor::fit(x.view(), y.view()).unwrap();
        assert_eq!(m.predict(array![[1.0]].view()).unwrap()[0], 1.0);
    }

    #[test]
    fn zero_column_query_returns_first_target() {
        let x = Array2::zeros((3, 0));
        let y = array![7.0, 8.0, 9.0];
        let m = NearestNeighbor::fit(x.view(), y.view()).unwrap();
        assert_eq!(m.predict(Array2::zeros((1, 0)).view()).unwrap()[0], 7.0);
    }
}
