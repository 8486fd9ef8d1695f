//! RBF kernels with per-column bandwidths and the median heuristic.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Gram matrix K[i,j] = exp(-sum_c (X[i,c]-Y[j,c])^2 / (2 bw_c^2)).
///
/// Entries lie in (0, 1]; the product over per-column Gaussian factors.
pub fn rbf_gram(x: ArrayView2<f64>, y: ArrayView2<f64>, bandwidths: &[f64]) -> Result<Array2<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::Dimensions(format!(
            "rbf_gram: {} vs {} columns",
            x.ncols(),
            y.ncols()
        )));
    }
    if bandwidths.len() != x.ncols() {
        return Err(Error::Dimensions(format!(
            "rbf_gram: {} bandwidths for {} columns",
            bandwidths.len(),
            x.ncols()
        )));
    }
    let inv2: Vec<f64> = bandwidths.iter().map(|b| 0.5 / (b * b)).collect();
    let mut k = Array2::zeros((x.nrows(), y.nrows()));
    for (i, xi) in x.rows().into_iter().enumerate() {
        for (j, yj) in y.rows().into_iter().enumerate() {
            let mut s = 0.0;
            for c in 0..xi.len() {
                let d = xi[c] - yj[c];
                s += d * d * inv2[c];
            }
            k[[i, j]] = (-s).exp();
        }
    }
    Ok(k)
}

/// Per-column median heuristic bandwidths.
///
/// bw_c = median over i<j of |X[i,c]-X[j,c]|, floored at 1e-6. Above 2000
/// rows a deterministic evenly-strided subsample of 2000 rows is used; below
/// that every pair enters. Even pair counts take the mean of the two middle
/// order statistics.
pub fn median_bandwidths(x: ArrayView2<f64>) -> Vec<f64> {
    const CAP: usize = 2000;
    let n = x.nrows();
    let rows: Vec<usize> = if n <= CAP {
        (0..n).collect()
    } else {
        (0..CAP).map(|i| i * n / CAP).collect()
    };
    let m = rows.len();
    let mut out = Vec::with_capacity(x.ncols());
    for c in 0..x.ncols() {
        let col: Vec<f64> = rows.iter().map(|&i| x[[i, c]]).collect();
        let mut gaps = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in (i + 1)..m {
                gaps.push((col[i] - col[j]).abs());
            }
        }
        out.push(median_in_place(&mut gaps).max(1e-6));
    }
    out
}

fn median_in_place(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, upper_mid, _) = v.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).unwrap());
    let upper = *upper_mid;
    if v.len() % 2 == 1 {
        upper
    } else {
        let lower = v[..mid]
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}
