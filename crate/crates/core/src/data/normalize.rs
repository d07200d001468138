use std::fmt;
use std::str::FromStr;

use super::MultiViewDataset;
use crate::error::PsdmfError;
use crate::numerics::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NormalizeMode {
    None,
    /// Scale each sample (column) of each view to unit Euclidean norm.
    #[default]
    UnitColumnL2,
    /// Map each feature (row) of each view onto [0, 1].
    MinMaxPerFeature,
}

impl NormalizeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizeMode::None => "none",
            NormalizeMode::UnitColumnL2 => "unit-column-l2",
            NormalizeMode::MinMaxPerFeature => "min-max-per-feature",
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizeMode {
    type Err = PsdmfError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(NormalizeMode::None),
            "unit-column-l2" => Ok(NormalizeMode::UnitColumnL2),
            "min-max-per-feature" => Ok(NormalizeMode::MinMaxPerFeature),
            other => Err(PsdmfError::invalid(format!(
                "unknown normalization `{other}` (expected none, unit-column-l2 or min-max-per-feature)"
            ))),
        }
    }
}

/// Applies `mode` to every view. All-zero columns and constant features are
/// mapped to zero rather than divided by zero.
pub fn normalize(ds: &MultiViewDataset, mode: NormalizeMode) -> MultiViewDataset {
    let views = ds
        .views
        .iter()
        .map(|v| match mode {
            NormalizeMode::None => v.clone(),
            NormalizeMode::UnitColumnL2 => unit_columns(v),
            NormalizeMode::MinMaxPerFeature => min_max_rows(v),
        })
        .collect();
    MultiViewDataset {
        views,
        ..ds.clone()
    }
}

fn unit_columns(v: &Matrix) -> Matrix {
    let norms: Vec<f64> = (0..v.cols())
        .map(|j| v.column(j).iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    Matrix::from_fn(v.rows(), v.cols(), |i, j| {
        if norms[j] > 0.0 {
            v[(i, j)] / norms[j]
        } else {
            0.0
        }
    })
}

fn min_max_rows(v: &Matrix) -> Matrix {
    let ranges: Vec<(f64, f64)> = (0..v.rows())
        .map(|i| {
            let row = v.row(i);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    Matrix::from_fn(v.rows(), v.cols(), |i, j| {
        let (lo, hi) = ranges[i];
        if hi > lo {
            (v[(i, j)] - lo) / (hi - lo)
        } else {
            0.0
        }
    })
}
