use crate::error::{PsdmfError, Result};
use crate::graph::GraphLaplacian;
use crate::numerics::Matrix;
use crate::pretrain::chain_product;

use super::config::BlockDims;

/// Final-layer representation: one view-specific block per view plus one
/// block shared by all views. Labeled samples are the leading
/// `n_labeled` columns of every block.
#[derive(Clone, Debug, PartialEq)]
pub struct PartiallySharedFactor {
    /// `V_s^p`, `K_s × N` each.
    pub specific: Vec<Matrix>,
    /// `V_c`, `K_c × N`.
    pub shared: Matrix,
    pub n_labeled: usize,
}

impl PartiallySharedFactor {
    pub fn n_views(&self) -> usize {
        self.specific.len()
    }

    pub fn n_samples(&self) -> usize {
        self.shared.cols()
    }

    pub fn dims(&self) -> BlockDims {
        BlockDims {
            specific: self.specific.first().map_or(0, Matrix::rows),
            shared: self.shared.rows(),
            n_views: self.n_views(),
        }
    }

    /// `V_m^p = [V_s^p; V_c]`.
    pub fn view_block(&self, view: usize) -> Matrix {
        Matrix::vcat(&[&self.specific[view], &self.shared]).expect("blocks share N")
    }

    /// `V = [V_s^1; …; V_s^P; V_c]`, `K × N`.
    pub fn stacked(&self) -> Matrix {
        let mut blocks: Vec<&Matrix> = self.specific.iter().collect();
        blocks.push(&self.shared);
        Matrix::vcat(&blocks).expect("blocks share N")
    }

    /// Labeled columns of the stacked representation, `K × N_l`.
    pub fn labeled(&self) -> Matrix {
        self.stacked().col_block(0..self.n_labeled)
    }

    pub fn min(&self) -> f64 {
        self.specific
            .iter()
            .map(Matrix::min)
            .fold(self.shared.min(), f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_samples();
        let ks = self.dims().specific;
        for (p, s) in self.specific.iter().enumerate() {
            if s.cols() != n || s.rows() != ks {
                return Err(PsdmfError::Invariant(format!(
                    "view {p} specific block is {:?}, expected ({ks}, {n})",
                    s.shape()
                )));
            }
        }
        if self.n_labeled > n {
            return Err(PsdmfError::Invariant("labeled block exceeds N".into()));
        }
        self.ensure_nonnegative("factor")
    }

    pub fn ensure_nonnegative(&self, context: &str) -> Result<()> {
        let m = self.min();
        if m >= 0.0 {
            Ok(())
        } else if m.is_nan() || !self.shared.is_finite() {
            Err(PsdmfError::NonFinite {
                context: context.to_string(),
            })
        } else {
            Err(PsdmfError::Invariant(format!(
                "negative representation entry {m:e} after {context}"
            )))
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelState {
    /// `loadings[p]` holds `U_1^p … U_m^p`.
    pub loadings: Vec<Vec<Matrix>>,
    pub factor: PartiallySharedFactor,
    /// Regression weights, `K × C`.
    pub w: Matrix,
    /// Per-view weights `α^p`.
    pub alpha: Vec<f64>,
    /// Label indicators of the labeled block, `C × N_l`.
    pub y: Matrix,
    pub laplacians: Vec<GraphLaplacian>,
}

impl ModelState {
    pub fn n_views(&self) -> usize {
        self.loadings.len()
    }

    pub fn n_layers(&self) -> usize {
        self.loadings.first().map_or(0, Vec::len)
    }

    pub fn dims(&self) -> BlockDims {
        self.factor.dims()
    }

    /// `Φ_m^p = U_1^p ⋯ U_m^p`.
    pub fn chain(&self, view: usize) -> Matrix {
        chain_product(&self.loadings[view])
    }

    pub fn reconstruction(&self, view: usize) -> Matrix {
        self.chain(view).matmul(&self.factor.view_block(view))
    }

    /// `‖X^p − Φ_m^p·V_m^p‖_F`.
    pub fn residual_norm(&self, view: usize, x: &Matrix) -> f64 {
        (x - &self.reconstruction(view)).frobenius_norm()
    }
}
