use rayon::prelude::*;

use crate::data::MultiViewDataset;
use crate::error::{PsdmfError, Result};
use crate::graph::GraphLaplacian;
use crate::numerics::Matrix;
use crate::pretrain::pretrain;
use crate::seminmf::{SemiNmfOptions, DENOM_FLOOR};

use super::config::PsdmfConfig;
use super::state::{ModelState, PartiallySharedFactor};
use super::updates::{
    alpha_from_residual, build_label_matrix, objective, update_u, update_v_blocks, update_w,
};

/// Result of a fit.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub state: ModelState,
    /// Objective before the first iteration, then after every iteration.
    pub trace: Vec<f64>,
    /// View weights chosen in every iteration.
    pub alpha_history: Vec<Vec<f64>>,
    /// Residual norms the weights of `alpha_history` were computed from.
    pub residual_history: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

impl FitOutcome {
    pub fn final_objective(&self) -> f64 {
        *self
            .trace
            .last()
            .expect("trace holds the initial objective")
    }
}

/// Builds the initial state: label indicators, one k-NN graph per view,
/// layer-wise pre-training, and the split of every view's deepest
/// representation into its specific rows and the shared rows (averaged
/// across views). `W` starts at zero.
pub fn initialize(data: &MultiViewDataset, cfg: &PsdmfConfig) -> Result<ModelState> {
    cfg.validate()?;
    data.validate()?;
    if data.class_count == 0 {
        return Err(PsdmfError::invalid("dataset has no classes"));
    }
    let dims = cfg.block_dims(data.n_views())?;
    let layers = cfg.effective_layers(&dims);
    if data.labeled_truth().is_none() {
        return Err(PsdmfError::invalid("labeled block requires ground truth"));
    }

    let laplacians = data
        .views
        .par_iter()
        .map(|x| GraphLaplacian::from_samples(x, cfg.knn_k))
        .collect::<Result<Vec<_>>>()?;

    let opts = SemiNmfOptions {
        max_iter: cfg.pretrain_max_iter,
        tol: cfg.pretrain_tol,
        seed: cfg.seed,
        init: cfg.init,
    };
    let stack = pretrain(data, &layers, &opts)?;

    let floor = |m: Matrix| m.map(|v| v.max(DENOM_FLOOR));
    let specific: Vec<Matrix> = stack
        .deepest
        .iter()
        .map(|v| floor(v.row_block(0..dims.specific)))
        .collect();
    let mut shared = Matrix::zeros(dims.shared, data.n_samples());
    for v in &stack.deepest {
        shared.add_assign(&v.row_block(dims.specific..dims.per_view()));
    }
    let shared = floor(shared.scale(1.0 / data.n_views() as f64));
    let factor = PartiallySharedFactor {
        specific,
        shared,
        n_labeled: data.n_labeled,
    };
    assemble_state(data, cfg, stack.loadings, factor, laplacians)
}

/// Completes a state from given loadings and representation: label
/// indicators, `W = 0` and the view weights of the given fit. Graphs are
/// built when `laplacians` is empty.
pub fn assemble_state(
    data: &MultiViewDataset,
    cfg: &PsdmfConfig,
    loadings: Vec<Vec<Matrix>>,
    factor: PartiallySharedFactor,
    laplacians: Vec<GraphLaplacian>,
) -> Result<ModelState> {
    factor.validate()?;
    if factor.n_views() != data.n_views() || loadings.len() != data.n_views() {
        return Err(PsdmfError::invalid(
            "loadings and factor must cover every view",
        ));
    }
    let labels = data
        .labeled_truth()
        .ok_or_else(|| PsdmfError::invalid("labeled block requires ground truth"))?;
    let y = build_label_matrix(labels, data.class_count)?;
    let laplacians = if laplacians.is_empty() {
        data.views
            .par_iter()
            .map(|x| GraphLaplacian::from_samples(x, cfg.knn_k))
            .collect::<Result<Vec<_>>>()?
    } else {
        laplacians
    };
    let mut state = ModelState {
        loadings,
        factor,
        w: Matrix::zeros(0, 0),
        alpha: vec![1.0; data.n_views()],
        y,
        laplacians,
    };
    state.w = Matrix::zeros(state.dims().total(), data.class_count);
    state.alpha = (0..data.n_views())
        .map(|p| alpha_from_residual(state.residual_norm(p, &data.views[p])))
        .collect();
    Ok(state)
}

pub fn fit(data: &MultiViewDataset, cfg: &PsdmfConfig) -> Result<FitOutcome> {
    let state = initialize(data, cfg)?;
    fit_from(state, data, cfg)
}

/// Runs the alternating updates from a given state. One iteration updates
/// `W`, then for every view its weight `α^p` and loadings `U_1^p … U_m^p`,
/// then sweeps the representation blocks once. Stops when the relative
/// objective change falls below `cfg.tol` or after `cfg.max_iter`
/// iterations.
pub fn fit_from(
    mut state: ModelState,
    data: &MultiViewDataset,
    cfg: &PsdmfConfig,
) -> Result<FitOutcome> {
    cfg.validate()?;
    state.factor.validate()?;
    let initial = objective(&state, data, cfg)?;
    if !initial.is_finite() {
        return Err(PsdmfError::Diverged {
            update: "initialization".into(),
            iteration: 0,
        });
    }
    let mut trace = vec![initial];
    let mut alpha_history = Vec::new();
    let mut residual_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        let diverged = |update: String| PsdmfError::Diverged {
            update,
            iteration: iterations,
        };

        state.w = update_w(&state.factor.labeled(), &state.y, cfg.gamma, &state.w)
            .map_err(|_| diverged("W".into()))?;
        if !state.w.is_finite() {
            return Err(diverged("W".into()));
        }

        let mut residuals = Vec::with_capacity(data.n_views());
        for p in 0..data.n_views() {
            let r = state.residual_norm(p, &data.views[p]);
            state.alpha[p] = alpha_from_residual(r);
            if !state.alpha[p].is_finite() {
                return Err(diverged(format!("alpha (view {p})")));
            }
            residuals.push(r);
            for i in 0..state.n_layers() {
                let u = update_u(&state, data, p, i)
                    .map_err(|_| diverged(format!("U_{} (view {p})", i + 1)))?;
                if !u.is_finite() {
                    return Err(diverged(format!("U_{} (view {p})", i + 1)));
                }
                state.loadings[p][i] = u;
            }
        }
        if cfg.debug_checks {
            check_weight_order(&residuals, &state.alpha, iterations)?;
        }
        alpha_history.push(state.alpha.clone());
        residual_history.push(residuals);

        state.factor = update_v_blocks(&state, data, cfg).map_err(|e| match e {
            PsdmfError::Invariant(_) => e,
            _ => diverged("V blocks".into()),
        })?;

        let current = objective(&state, data, cfg)?;
        if !current.is_finite() {
            return Err(diverged("V blocks".into()));
        }
        let previous = *trace.last().expect("nonempty");
        trace.push(current);
        let change = (previous - current).abs() / previous.abs().max(f64::MIN_POSITIVE);
        if change < cfg.tol || current == 0.0 {
            converged = true;
            break;
        }
    }

    Ok(FitOutcome {
        state,
        trace,
        alpha_history,
        residual_history,
        iterations,
        converged,
    })
}

/// Views with smaller residuals must carry weights at least as large.
pub fn check_weight_order(residuals: &[f64], alpha: &[f64], iteration: usize) -> Result<()> {
    let mut order: Vec<usize> = (0..residuals.len()).collect();
    order.sort_by(|&a, &b| residuals[a].total_cmp(&residuals[b]));
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if alpha[a] < alpha[b] {
            return Err(PsdmfError::Invariant(format!(
                "iteration {iteration}: view {a} has residual {:e} <= {:e} of view {b} \
                 but weight {:e} < {:e}",
                residuals[a], residuals[b], alpha[a], alpha[b]
            )));
        }
    }
    Ok(())
}
