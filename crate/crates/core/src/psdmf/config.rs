use crate::error::{PsdmfError, Result};
use crate::graph::DEFAULT_KNN;
use crate::seminmf::SemiNmfInit;

/// How each block's gradient is split into the numerator and denominator
/// of the multiplicative step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum VRule {
    /// Splits the quadratic factors (`Φ_bᵀΦ_b`, `W_bW_bᵀ`, `L = D − S`) and
    /// the linear terms separately. Every block step is a majorize-minimize
    /// step, so a sweep never increases the objective.
    #[default]
    Majorization,
    /// Splits every product of the gradient as a whole, e.g. `[Φ_sᵀA]^±`,
    /// `[V_s·L_l]^±`, `[F_s]^±`. A denominator entry can vanish while its
    /// numerator does not, so a sweep may increase the objective.
    Printed,
}

impl VRule {
    pub fn as_str(self) -> &'static str {
        match self {
            VRule::Majorization => "majorization",
            VRule::Printed => "printed",
        }
    }
}

impl std::fmt::Display for VRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for VRule {
    type Err = PsdmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majorization" => Ok(VRule::Majorization),
            "printed" => Ok(VRule::Printed),
            other => Err(PsdmfError::invalid(format!(
                "unknown update rule `{other}` (expected majorization or printed)"
            ))),
        }
    }
}

/// Hyperparameters of the model and its optimizer.
///
/// Defaults reproduce the published experimental setup: `μ = 0.1`,
/// `β = 10`, `γ = 10`, `λ = 0.5`, `K = 100`, layers `[100, 50]` and 10%
/// labeled samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PsdmfConfig {
    /// Graph regularization weight.
    pub mu: f64,
    /// Weight of the label regression term.
    pub beta: f64,
    /// Row-sparsity weight on the regression matrix.
    pub gamma: f64,
    /// Common factor ratio `K_c / (K_s + K_c)`.
    pub lambda_ratio: f64,
    /// Total representation size `K = K_s·P + K_c`.
    pub total_dim: usize,
    /// Per-layer sizes. The last entry is replaced by `K_s + K_c`.
    pub layer_sizes: Vec<usize>,
    pub knn_k: usize,
    pub label_fraction: f64,
    pub max_iter: usize,
    /// Stop once the relative objective change drops below this.
    pub tol: f64,
    pub seed: u64,
    pub pretrain_max_iter: usize,
    pub pretrain_tol: f64,
    pub init: SemiNmfInit,
    pub v_rule: VRule,
    /// Check the view-weight ordering after every weight update.
    pub debug_checks: bool,
}

impl Default for PsdmfConfig {
    fn default() -> Self {
        Self {
            mu: 0.1,
            beta: 10.0,
            gamma: 10.0,
            lambda_ratio: 0.5,
            total_dim: 100,
            layer_sizes: vec![100, 50],
            knn_k: DEFAULT_KNN,
            label_fraction: 0.1,
            max_iter: 200,
            tol: 1e-5,
            seed: 0,
            pretrain_max_iter: 100,
            pretrain_tol: 1e-6,
            init: SemiNmfInit::KMeans,
            v_rule: VRule::Majorization,
            debug_checks: false,
        }
    }
}

/// Sizes of the view-specific and shared representation blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockDims {
    pub specific: usize,
    pub shared: usize,
    pub n_views: usize,
}

impl BlockDims {
    /// `K = K_s·P + K_c`.
    pub fn total(&self) -> usize {
        self.specific * self.n_views + self.shared
    }

    /// `K_s + K_c`, the final layer width of every view.
    pub fn per_view(&self) -> usize {
        self.specific + self.shared
    }

    /// First row of view `p`'s specific block inside the stacked `V`.
    pub fn specific_offset(&self, view: usize) -> usize {
        view * self.specific
    }

    pub fn shared_offset(&self) -> usize {
        self.n_views * self.specific
    }

    /// Realized `K_c / (K_s + K_c)`.
    pub fn ratio(&self) -> f64 {
        self.shared as f64 / self.per_view() as f64
    }
}

impl PsdmfConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PsdmfError::invalid(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.lambda_ratio > 0.0 && self.lambda_ratio < 1.0) {
            return Err(PsdmfError::invalid(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda_ratio
            )));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(PsdmfError::invalid(format!(
                "label fraction must lie in (0, 1], got {}",
                self.label_fraction
            )));
        }
        if self.layer_sizes.is_empty() || self.layer_sizes.contains(&0) {
            return Err(PsdmfError::invalid(format!(
                "layer sizes must be positive, got {:?}",
                self.layer_sizes
            )));
        }
        if self.knn_k == 0 {
            return Err(PsdmfError::invalid("knn_k must be positive"));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(PsdmfError::invalid(format!(
                "tol must be nonnegative, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Solves `K_c + K_s·P = K` and `K_c / (K_s + K_c) = λ`. When the exact
    /// `K_s` is not an integer it is floored and `K_c` takes the remainder.
    pub fn block_dims(&self, n_views: usize) -> Result<BlockDims> {
        if n_views == 0 {
            return Err(PsdmfError::invalid("at least one view is required"));
        }
        let lambda = self.lambda_ratio;
        let p = n_views as f64;
        let exact = self.total_dim as f64 * (1.0 - lambda) / (p * (1.0 - lambda) + lambda);
        let rounded = exact.round();
        let specific = if (exact - rounded).abs() < 1e-9 {
            rounded as usize
        } else {
            exact.floor() as usize
        };
        let used = specific * n_views;
        if specific == 0 || used >= self.total_dim {
            return Err(PsdmfError::invalid(format!(
                "K = {} with lambda = {lambda} and {n_views} views leaves no room for both blocks",
                self.total_dim
            )));
        }
        let dims = BlockDims {
            specific,
            shared: self.total_dim - used,
            n_views,
        };
        if (dims.ratio() - lambda).abs() > 1e-9 {
            log::warn!(
                "K_s = {}, K_c = {} realize lambda = {:.4} instead of {lambda}",
                dims.specific,
                dims.shared,
                dims.ratio()
            );
        }
        Ok(dims)
    }

    /// Layer sizes with the final layer forced to `K_s + K_c`.
    pub fn effective_layers(&self, dims: &BlockDims) -> Vec<usize> {
        let mut layers = self.layer_sizes.clone();
        let last = layers.last_mut().expect("validated nonempty");
        if *last != dims.per_view() {
            log::warn!(
                "final layer size {} replaced by K_s + K_c = {}",
                *last,
                dims.per_view()
            );
            *last = dims.per_view();
        }
        layers
    }
}
