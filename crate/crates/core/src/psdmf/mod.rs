//! The partially shared deep factorization model and its optimizer.

mod config;
mod fit;
mod state;
mod updates;

pub use config::{BlockDims, PsdmfConfig, VRule};
pub use fit::{assemble_state, check_weight_order, fit, fit_from, initialize, FitOutcome};
pub use state::{ModelState, PartiallySharedFactor};
pub use updates::{
    alpha_from_residual, argmax_columns, build_label_matrix, objective, objective_terms,
    predict_labels, regression_residual, reweighting, update_alpha, update_u, update_v_blocks,
    update_w, v_gradients, w_gradient, ObjectiveTerms, VGradients, RESIDUAL_FLOOR, ROW_NORM_FLOOR,
};
