//! k-NN affinity graphs and their Laplacians.

use rayon::prelude::*;

use crate::error::{PsdmfError, Result};
use crate::numerics::{trace_vlvt, Matrix};

pub const DEFAULT_KNN: usize = 5;

/// Binary affinity `S`, degree `D` and Laplacian `L = D − S` of one view.
#[derive(Clone, Debug)]
pub struct GraphLaplacian {
    pub affinity: Matrix,
    pub degree: Matrix,
    pub laplacian: Matrix,
    /// Neighbor count the affinity was built with, if it came from a k-NN
    /// construction.
    pub k: Option<usize>,
}

impl GraphLaplacian {
    /// Builds the union-symmetrized k-NN graph over the columns of `x`.
    pub fn from_samples(x: &Matrix, k: usize) -> Result<Self> {
        let s = build_knn_affinity(x, k)?;
        let mut g = laplacian(&s)?;
        g.k = Some(k);
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.laplacian.rows()
    }
}

/// `S[j][q] = 1` iff `q` is among the `k` nearest columns of `j` or `j` is
/// among the `k` nearest of `q` (Euclidean distance, ties to the lower
/// column index). The diagonal is zero.
pub fn build_knn_affinity(x: &Matrix, k: usize) -> Result<Matrix> {
    let n = x.cols();
    if n < 2 {
        return Err(PsdmfError::invalid(format!(
            "k-NN graph needs at least 2 samples, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(PsdmfError::invalid(format!(
            "k-NN neighbor count {k} out of range 1..{n}"
        )));
    }
    x.ensure_finite("k-NN input")?;

    let samples: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&q| q != j)
                .map(|q| (sq_dist(&samples[j], &samples[q]), q))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.into_iter().take(k).map(|(_, q)| q).collect()
        })
        .collect();

    let mut s = Matrix::zeros(n, n);
    for (j, nb) in neighbors.iter().enumerate() {
        for &q in nb {
            s[(j, q)] = 1.0;
            s[(q, j)] = 1.0;
        }
    }
    Ok(s)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn laplacian(s: &Matrix) -> Result<GraphLaplacian> {
    let n = s.rows();
    if s.cols() != n {
        return Err(PsdmfError::ShapeMismatch {
            op: "laplacian",
            left: s.shape(),
            right: (n, n),
        });
    }
    s.ensure_finite("affinity")?;
    for j in 0..n {
        if s[(j, j)] != 0.0 {
            return Err(PsdmfError::invalid(format!(
                "affinity diagonal entry {j} is nonzero"
            )));
        }
        for q in 0..n {
            if s[(j, q)] != s[(q, j)] {
                return Err(PsdmfError::NotSymmetric {
                    context: "affinity",
                });
            }
            if s[(j, q)] < 0.0 {
                return Err(PsdmfError::invalid("affinity has negative entries"));
            }
        }
    }
    let degrees: Vec<f64> = (0..n).map(|j| s.row(j).iter().sum()).collect();
    let degree = Matrix::diag(&degrees);
    let laplacian = &degree - s;
    Ok(GraphLaplacian {
        affinity: s.clone(),
        degree,
        laplacian,
        k: None,
    })
}

/// `tr(V·L·Vᵀ)`.
pub fn regularizer_value(v: &Matrix, l: &Matrix) -> Result<f64> {
    trace_vlvt(v, l)
}
