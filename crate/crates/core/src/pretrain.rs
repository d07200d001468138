//! Greedy layer-wise pre-training of the per-view deep factorization.
//!
//! Each view is factorized as `X ≈ U₁·V₁`, then `V₁ ≈ U₂·V₂`, and so on,
//! with a Semi-NMF per layer. Only the loadings `U₁ … U_m` and the deepest
//! representation `V_m` are kept.

use rayon::prelude::*;

use crate::data::MultiViewDataset;
use crate::error::{PsdmfError, Result};
use crate::numerics::Matrix;
use crate::seminmf::{fit_seminmf, SemiNmfOptions};

#[derive(Clone, Debug)]
pub struct LayerStack {
    /// `loadings[p][i]` is layer `i` of view `p`.
    pub loadings: Vec<Vec<Matrix>>,
    /// Deepest nonnegative representation per view, `k_m × N`.
    pub deepest: Vec<Matrix>,
}

impl LayerStack {
    pub fn n_views(&self) -> usize {
        self.loadings.len()
    }

    pub fn n_layers(&self) -> usize {
        self.loadings.first().map_or(0, Vec::len)
    }

    /// `U₁·U₂·…·U_m` for one view.
    pub fn chain(&self, view: usize) -> Matrix {
        chain_product(&self.loadings[view])
    }

    pub fn reconstruct(&self, view: usize) -> Matrix {
        self.chain(view).matmul(&self.deepest[view])
    }

    /// Checks the shape chain and the nonnegativity of the deepest layer.
    pub fn validate(&self) -> Result<()> {
        if self.deepest.len() != self.loadings.len() {
            return Err(PsdmfError::Invariant(
                "view count mismatch in layer stack".into(),
            ));
        }
        for (p, (layers, v)) in self.loadings.iter().zip(&self.deepest).enumerate() {
            let last = layers
                .last()
                .ok_or_else(|| PsdmfError::Invariant(format!("view {p} has no layers")))?;
            for (i, w) in layers.windows(2).enumerate() {
                if w[0].cols() != w[1].rows() {
                    return Err(PsdmfError::Invariant(format!(
                        "view {p}: layer {i} has {} columns but layer {} has {} rows",
                        w[0].cols(),
                        i + 1,
                        w[1].rows()
                    )));
                }
            }
            if last.cols() != v.rows() {
                return Err(PsdmfError::Invariant(format!(
                    "view {p}: deepest layer width {} != representation rows {}",
                    last.cols(),
                    v.rows()
                )));
            }
            if v.min() < 0.0 {
                return Err(PsdmfError::Invariant(format!(
                    "view {p}: deepest representation has negative entries"
                )));
            }
        }
        Ok(())
    }
}

/// Product of a chain of loadings. Panics on an empty chain.
pub fn chain_product(layers: &[Matrix]) -> Matrix {
    let mut acc = layers[0].clone();
    for u in &layers[1..] {
        acc = acc.matmul(u);
    }
    acc
}

pub fn pretrain(
    dataset: &MultiViewDataset,
    layer_sizes: &[usize],
    opts: &SemiNmfOptions,
) -> Result<LayerStack> {
    pretrain_views(&dataset.views, layer_sizes, opts)
}

pub fn pretrain_views(
    views: &[Matrix],
    layer_sizes: &[usize],
    opts: &SemiNmfOptions,
) -> Result<LayerStack> {
    if layer_sizes.is_empty() || layer_sizes.contains(&0) {
        return Err(PsdmfError::invalid(format!(
            "layer sizes must be a nonempty list of positive counts, got {layer_sizes:?}"
        )));
    }
    let per_view: Vec<(Vec<Matrix>, Matrix)> = views
        .par_iter()
        .enumerate()
        .map(|(p, x)| pretrain_view(p, x, layer_sizes, opts))
        .collect::<Result<_>>()?;
    let (loadings, deepest) = per_view.into_iter().unzip();
    let stack = LayerStack { loadings, deepest };
    stack.validate()?;
    Ok(stack)
}

fn pretrain_view(
    view: usize,
    x: &Matrix,
    layer_sizes: &[usize],
    opts: &SemiNmfOptions,
) -> Result<(Vec<Matrix>, Matrix)> {
    let mut layers = Vec::with_capacity(layer_sizes.len());
    let mut current = x.clone();
    for (i, &k) in layer_sizes.iter().enumerate() {
        if k > current.rows() || k > current.cols() {
            return Err(PsdmfError::invalid(format!(
                "view {view}, layer {}: size {k} exceeds the {}x{} matrix being factorized",
                i + 1,
                current.rows(),
                current.cols()
            )));
        }
        let layer_opts = SemiNmfOptions {
            seed: layer_seed(opts.seed, view, i),
            ..opts.clone()
        };
        let fit = fit_seminmf(&current, k, &layer_opts)?;
        log::debug!(
            "pretrain view {view} layer {}: {} iterations, objective {:.6e}",
            i + 1,
            fit.iterations,
            fit.objective_trace.last().copied().unwrap_or(f64::NAN)
        );
        layers.push(fit.u);
        current = fit.v;
    }
    Ok((layers, current))
}

fn layer_seed(base: u64, view: usize, layer: usize) -> u64 {
    base.wrapping_add(1_000 * view as u64 + layer as u64)
}
