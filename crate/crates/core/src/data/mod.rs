//! Multi-view datasets: ingestion, labeled/unlabeled partitioning,
//! normalization and a synthetic generator with planted structure.

mod io;
mod normalize;
mod split;
mod synthetic;

pub use io::{load_dataset, read_labels, read_matrix, save_dataset, write_labels, write_matrix};
pub use normalize::{normalize, NormalizeMode};
pub use split::{labeled_count, split_labeled};
pub use synthetic::{generate_synthetic, PlantedFactors, SyntheticData, SyntheticSpec};

use crate::error::{PsdmfError, Result};
use crate::numerics::Matrix;

/// `P` views (`M^p × N`) over the same `N` samples. The first `n_labeled`
/// columns form the labeled block.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiViewDataset {
    pub views: Vec<Matrix>,
    pub truth: Option<Vec<usize>>,
    pub n_labeled: usize,
    pub class_count: usize,
    /// Original sample index of each column, tracking permutations.
    pub sample_ids: Vec<usize>,
}

impl MultiViewDataset {
    /// Builds an unlabeled-block dataset (`n_labeled = 0`) and validates it.
    /// The class count is `max(truth) + 1`.
    pub fn new(views: Vec<Matrix>, truth: Option<Vec<usize>>) -> Result<Self> {
        let n = views.first().map_or(0, Matrix::cols);
        let class_count = truth
            .as_ref()
            .and_then(|t| t.iter().max())
            .map_or(0, |m| m + 1);
        let ds = Self {
            views,
            truth,
            n_labeled: 0,
            class_count,
            sample_ids: (0..n).collect(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn n_samples(&self) -> usize {
        self.views.first().map_or(0, Matrix::cols)
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n_samples() - self.n_labeled
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(Matrix::rows).collect()
    }

    /// Class ids of the labeled block.
    pub fn labeled_truth(&self) -> Option<&[usize]> {
        self.truth.as_deref().map(|t| &t[..self.n_labeled])
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .views
            .first()
            .ok_or_else(|| PsdmfError::Dataset("dataset has no views".into()))?;
        let n = first.cols();
        if n == 0 {
            return Err(PsdmfError::Dataset("dataset has no samples".into()));
        }
        for (p, v) in self.views.iter().enumerate() {
            if v.cols() != n {
                return Err(PsdmfError::Dataset(format!(
                    "view 0 has {n} samples but view {p} has {}",
                    v.cols()
                )));
            }
            if v.rows() == 0 {
                return Err(PsdmfError::Dataset(format!("view {p} has no features")));
            }
            v.ensure_finite(&format!("view {p}"))?;
        }
        if self.n_labeled > n {
            return Err(PsdmfError::Dataset(format!(
                "{} labeled samples exceed the {n} available",
                self.n_labeled
            )));
        }
        match &self.truth {
            Some(t) => {
                if t.len() != n {
                    return Err(PsdmfError::Dataset(format!(
                        "{} labels for {n} samples",
                        t.len()
                    )));
                }
                if let Some(bad) = t.iter().find(|&&c| c >= self.class_count) {
                    return Err(PsdmfError::Dataset(format!(
                        "label {bad} out of range for {} classes",
                        self.class_count
                    )));
                }
            }
            None if self.n_labeled > 0 => {
                return Err(PsdmfError::Dataset(
                    "labeled block requires ground-truth labels".into(),
                ));
            }
            None => {}
        }
        if self.sample_ids.len() != n {
            return Err(PsdmfError::Dataset(
                "sample id list has the wrong length".into(),
            ));
        }
        Ok(())
    }

    /// Reorders columns of every view (and the labels) so that new column
    /// `j` is old column `order[j]`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        Self {
            views: self.views.iter().map(|v| v.select_columns(order)).collect(),
            truth: self
                .truth
                .as_ref()
                .map(|t| order.iter().map(|&j| t[j]).collect()),
            n_labeled: self.n_labeled,
            class_count: self.class_count,
            sample_ids: order.iter().map(|&j| self.sample_ids[j]).collect(),
        }
    }
}
