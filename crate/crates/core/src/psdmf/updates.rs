//! Objective, gradients and the per-block update rules.
//!
//! Notation in comments follows the model: `Φ = U_1^p ⋯ U_m^p` with column
//! blocks `Φ_s` (first `K_s` columns) and `Φ_c`; `A^p = Φ·[V_sl^p; V_cl]`,
//! `B^p = Φ·[V_su^p; V_cu]`; `F = W(WᵀV_l − Y)` with row blocks `F_s^p`,
//! `F_c`; `L_l`, `L_u` are the labeled/unlabeled column blocks of `L^p`.

use std::ops::Range;

use crate::data::MultiViewDataset;
use crate::error::{PsdmfError, Result};
use crate::graph::GraphLaplacian;
use crate::numerics::{l21_norm, solve_spd, split_neg, split_pos, trace_vlvt, Matrix};
use crate::pretrain::chain_product;
use crate::seminmf::multiplicative_step;

use super::config::{PsdmfConfig, VRule};
use super::state::{ModelState, PartiallySharedFactor};

/// Residual floor in the view weight: `α ≤ 1 / (2·RESIDUAL_FLOOR)`.
pub const RESIDUAL_FLOOR: f64 = 1e-8;

/// Row-norm floor in the reweighting matrix `E` of the W update.
pub const ROW_NORM_FLOOR: f64 = 1e-8;

/// `Y[c][n] = 1` iff sample `n` has class `c`.
pub fn build_label_matrix(labels: &[usize], classes: usize) -> Result<Matrix> {
    let mut y = Matrix::zeros(classes, labels.len());
    for (n, &c) in labels.iter().enumerate() {
        if c >= classes {
            return Err(PsdmfError::invalid(format!(
                "label {c} of sample {n} out of range for {classes} classes"
            )));
        }
        y[(c, n)] = 1.0;
    }
    Ok(y)
}

/// Individual terms of the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTerms {
    /// `‖X^p − Φ^p·V_m^p‖²_F` per view (unweighted).
    pub reconstruction: Vec<f64>,
    /// `tr(V_m^p·L^p·V_m^pᵀ)` per view.
    pub graph: Vec<f64>,
    /// `‖WᵀV_l − Y‖²_F`.
    pub regression: f64,
    /// `‖W‖_{2,1}`.
    pub sparsity: f64,
    /// `Σ_p (α^p·rec_p + μ·graph_p) + β·(regression + γ·sparsity)`.
    pub total: f64,
}

pub fn objective_terms(
    state: &ModelState,
    data: &MultiViewDataset,
    cfg: &PsdmfConfig,
) -> Result<ObjectiveTerms> {
    check_shapes(state, data)?;
    let mut reconstruction = Vec::with_capacity(state.n_views());
    let mut graph = Vec::with_capacity(state.n_views());
    let mut total = 0.0;
    for (p, x) in data.views.iter().enumerate() {
        let v = state.factor.view_block(p);
        let rec = (x - &state.chain(p).matmul(&v)).frobenius_norm_sq();
        let g = trace_vlvt(&v, &state.laplacians[p].laplacian)?;
        total += state.alpha[p] * rec + cfg.mu * g;
        reconstruction.push(rec);
        graph.push(g);
    }
    let regression = (&state.w.tr_matmul(&state.factor.labeled()) - &state.y).frobenius_norm_sq();
    let sparsity = l21_norm(&state.w);
    total += cfg.beta * (regression + cfg.gamma * sparsity);
    Ok(ObjectiveTerms {
        reconstruction,
        graph,
        regression,
        sparsity,
        total,
    })
}

pub fn objective(state: &ModelState, data: &MultiViewDataset, cfg: &PsdmfConfig) -> Result<f64> {
    Ok(objective_terms(state, data, cfg)?.total)
}

fn check_shapes(state: &ModelState, data: &MultiViewDataset) -> Result<()> {
    let p = data.n_views();
    if state.n_views() != p
        || state.factor.n_views() != p
        || state.alpha.len() != p
        || state.laplacians.len() != p
    {
        return Err(PsdmfError::invalid(format!(
            "model state does not match a {p}-view dataset"
        )));
    }
    let n = data.n_samples();
    if state.factor.n_samples() != n || state.factor.n_labeled != data.n_labeled {
        return Err(PsdmfError::ShapeMismatch {
            op: "model state vs dataset",
            left: (state.factor.n_labeled, state.factor.n_samples()),
            right: (data.n_labeled, n),
        });
    }
    for (q, x) in data.views.iter().enumerate() {
        let first = &state.loadings[q][0];
        if first.rows() != x.rows() {
            return Err(PsdmfError::ShapeMismatch {
                op: "first-layer loadings vs view",
                left: first.shape(),
                right: x.shape(),
            });
        }
    }
    Ok(())
}

/// `α = 1 / (2·max(residual, RESIDUAL_FLOOR))`.
pub fn alpha_from_residual(residual: f64) -> f64 {
    1.0 / (2.0 * residual.max(RESIDUAL_FLOOR))
}

/// View weights from the current reconstruction residuals.
pub fn update_alpha(state: &ModelState, data: &MultiViewDataset) -> Vec<f64> {
    data.views
        .iter()
        .enumerate()
        .map(|(p, x)| alpha_from_residual(state.residual_norm(p, x)))
        .collect()
}

/// Closed-form minimizer of the reconstruction term over `U_i^p` with all
/// other factors fixed: `(ΦᵀΦ)⁻¹·Φᵀ·X·Ũᵀ·(Ũ·Ũᵀ)⁻¹`, where `Φ` is the
/// product of the layers above `i` and `Ũ` the product of the layers below
/// it times `V_m^p`. `layer` is 0-based.
pub fn update_u(
    state: &ModelState,
    data: &MultiViewDataset,
    view: usize,
    layer: usize,
) -> Result<Matrix> {
    let layers = &state.loadings[view];
    if layer >= layers.len() {
        return Err(PsdmfError::invalid(format!(
            "layer {layer} out of range for {} layers",
            layers.len()
        )));
    }
    let x = &data.views[view];
    let mut below = state.factor.view_block(view);
    for u in layers[layer + 1..].iter().rev() {
        below = u.matmul(&below);
    }
    // Φᵀ·X·Ũᵀ, or X·Ũᵀ on the first layer
    let (projected, left_gram) = if layer == 0 {
        (x.clone(), None)
    } else {
        let phi = chain_product(&layers[..layer]);
        (phi.tr_matmul(x), Some(phi.gram()))
    };
    let mut core = projected.matmul_tr(&below);
    if let Some(g) = left_gram {
        core = solve_spd(&g, &core)?.x;
    }
    // U·(ŨŨᵀ) = core  ⇔  (ŨŨᵀ)·Uᵀ = coreᵀ
    let right_gram = below.outer_gram();
    Ok(solve_spd(&right_gram, &core.t())?.x.t())
}

/// Reweighted least squares step for the L2,1-regularized regression:
/// `W = (V_l·V_lᵀ + γE)⁻¹·V_l·Yᵀ` with
/// `E = diag(1 / (2·max(‖w_i‖, ε_w)))` taken from `w_prev`.
pub fn update_w(v_l: &Matrix, y: &Matrix, gamma: f64, w_prev: &Matrix) -> Result<Matrix> {
    if v_l.cols() != y.cols() || w_prev.rows() != v_l.rows() || w_prev.cols() != y.rows() {
        return Err(PsdmfError::ShapeMismatch {
            op: "update_w",
            left: v_l.shape(),
            right: y.shape(),
        });
    }
    let e = reweighting(w_prev);
    let mut system = v_l.outer_gram();
    system.scaled_add_assign(gamma, &e);
    let rhs = v_l.matmul_tr(y);
    Ok(solve_spd(&system, &rhs)?.x)
}

/// `E = diag(1 / (2·max(‖w_i‖, ε_w)))`.
pub fn reweighting(w: &Matrix) -> Matrix {
    let d: Vec<f64> = w
        .row_norms()
        .into_iter()
        .map(|r| 1.0 / (2.0 * r.max(ROW_NORM_FLOOR)))
        .collect();
    Matrix::diag(&d)
}

/// `F = W·(WᵀV_l − Y)`, `K × N_l`.
pub fn regression_residual(w: &Matrix, v_l: &Matrix, y: &Matrix) -> Matrix {
    w.matmul(&(&w.tr_matmul(v_l) - y))
}

/// Gradient of `β(‖WᵀV_l − Y‖² + γ‖W‖_{2,1})` with respect to `W`:
/// `2β(V_l(V_lᵀW − Yᵀ) + γEW)`.
pub fn w_gradient(v_l: &Matrix, y: &Matrix, w: &Matrix, beta: f64, gamma: f64) -> Matrix {
    let fit = v_l.matmul(&(&v_l.tr_matmul(w) - &y.t()));
    let mut g = fit;
    g.scaled_add_assign(gamma, &reweighting(w).matmul(w));
    g.scale(2.0 * beta)
}

/// Per-view quantities shared by the block updates.
struct ViewTerms<'a> {
    alpha: f64,
    /// First `K_s` columns of `U_1⋯U_m`.
    phi_s: Matrix,
    /// Last `K_c` columns of `U_1⋯U_m`.
    phi_c: Matrix,
    x: &'a Matrix,
    graph: &'a GraphLaplacian,
}

fn view_terms<'a>(state: &'a ModelState, data: &'a MultiViewDataset, view: usize) -> ViewTerms<'a> {
    let ks = state.dims().specific;
    let phi = state.chain(view);
    ViewTerms {
        alpha: state.alpha[view],
        phi_s: phi.col_block(0..ks),
        phi_c: phi.col_block(ks..phi.cols()),
        x: &data.views[view],
        graph: &state.laplacians[view],
    }
}

/// Which sample columns a block covers.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Part {
    Labeled,
    Unlabeled,
}

impl Part {
    fn range(self, n_labeled: usize, n: usize) -> Range<usize> {
        match self {
            Part::Labeled => 0..n_labeled,
            Part::Unlabeled => n_labeled..n,
        }
    }
}

/// Numerator/denominator accumulator for one multiplicative step.
struct Ratio {
    rule: VRule,
    num: Matrix,
    den: Matrix,
}

impl Ratio {
    fn new(rule: VRule, rows: usize, cols: usize) -> Self {
        Self {
            rule,
            num: Matrix::zeros(rows, cols),
            den: Matrix::zeros(rows, cols),
        }
    }

    /// A term `weight·H` of the half gradient: `[H]⁻` to the numerator,
    /// `[H]⁺` to the denominator.
    fn push(&mut self, weight: f64, h: &Matrix) -> Result<()> {
        if weight != 0.0 {
            self.num.scaled_add_assign(weight, &split_neg(h)?);
            self.den.scaled_add_assign(weight, &split_pos(h)?);
        }
        Ok(())
    }

    /// The half gradient `G·V` of `tr(VᵀGV)`, split through `G`.
    fn push_gram(&mut self, weight: f64, g: &Matrix, v: &Matrix) -> Result<()> {
        if weight != 0.0 {
            self.num.scaled_add_assign(weight, &split_neg(g)?.matmul(v));
            self.den.scaled_add_assign(weight, &split_pos(g)?.matmul(v));
        }
        Ok(())
    }

    /// `α‖X_J − Φ_b·V_b − Φ_o·V_o‖²` for block `V_b`.
    fn push_reconstruction(
        &mut self,
        alpha: f64,
        phi_b: &Matrix,
        v_b: &Matrix,
        phi_o: &Matrix,
        v_o: &Matrix,
        x: &Matrix,
    ) -> Result<()> {
        match self.rule {
            VRule::Printed => {
                let fitted = &phi_b.matmul(v_b) + &phi_o.matmul(v_o);
                self.push(alpha, &phi_b.tr_matmul(&fitted))?;
                self.push(alpha, &phi_b.tr_matmul(x).scale(-1.0))
            }
            VRule::Majorization => {
                let target = x - &phi_o.matmul(v_o);
                self.push_gram(alpha, &phi_b.gram(), v_b)?;
                self.push(alpha, &phi_b.tr_matmul(&target).scale(-1.0))
            }
        }
    }

    /// `μ·tr(V·L·Vᵀ)` for the columns `cols` of the rows `v`.
    fn push_graph(
        &mut self,
        mu: f64,
        v: &Matrix,
        graph: &GraphLaplacian,
        cols: Range<usize>,
    ) -> Result<()> {
        if mu == 0.0 {
            return Ok(());
        }
        match self.rule {
            VRule::Printed => self.push(mu, &v.matmul(&graph.laplacian.col_block(cols))),
            VRule::Majorization => {
                // L = D − S with S, D ≥ 0
                self.num
                    .scaled_add_assign(mu, &v.matmul(&graph.affinity.col_block(cols.clone())));
                self.den
                    .scaled_add_assign(mu, &v.matmul(&graph.degree.col_block(cols)));
                Ok(())
            }
        }
    }

    /// `β‖WᵀV_l − Y‖²` for the rows `rows` of the stacked labeled block.
    fn push_regression(
        &mut self,
        beta: f64,
        w: &Matrix,
        v_l: &Matrix,
        y: &Matrix,
        rows: Range<usize>,
    ) -> Result<()> {
        if beta == 0.0 {
            return Ok(());
        }
        let f_b = regression_residual(w, v_l, y).row_block(rows.clone());
        match self.rule {
            VRule::Printed => self.push(beta, &f_b),
            VRule::Majorization => {
                let w_b = w.row_block(rows.clone());
                let gram = w_b.outer_gram();
                let v_b = v_l.row_block(rows);
                self.push_gram(beta, &gram, &v_b)?;
                self.push(beta, &(&f_b - &gram.matmul(&v_b)))
            }
        }
    }

    fn apply(&self, v: &Matrix) -> Matrix {
        multiplicative_step(v, &self.num, &self.den)
    }
}

/// One sweep of the multiplicative rules over all representation blocks:
/// for every view `V_sl^p` then `V_su^p`, then the shared `V_cl` and `V_cu`.
/// Each block sees the latest values of the blocks updated before it.
/// `α`, `W` and the loadings are held fixed.
pub fn update_v_blocks(
    state: &ModelState,
    data: &MultiViewDataset,
    cfg: &PsdmfConfig,
) -> Result<PartiallySharedFactor> {
    check_shapes(state, data)?;
    let dims = state.dims();
    let n = data.n_samples();
    let n_l = data.n_labeled;
    let terms: Vec<ViewTerms<'_>> = (0..data.n_views())
        .map(|p| view_terms(state, data, p))
        .collect();
    let mut factor = state.factor.clone();

    for (p, t) in terms.iter().enumerate() {
        for part in [Part::Labeled, Part::Unlabeled] {
            let cols = part.range(n_l, n);
            if cols.is_empty() {
                continue;
            }
            let v_b = factor.specific[p].col_block(cols.clone());
            let mut ratio = Ratio::new(cfg.v_rule, dims.specific, cols.len());
            ratio.push_reconstruction(
                t.alpha,
                &t.phi_s,
                &v_b,
                &t.phi_c,
                &factor.shared.col_block(cols.clone()),
                &t.x.col_block(cols.clone()),
            )?;
            ratio.push_graph(cfg.mu, &factor.specific[p], t.graph, cols.clone())?;
            if part == Part::Labeled {
                let off = dims.specific_offset(p);
                ratio.push_regression(
                    cfg.beta,
                    &state.w,
                    &factor.labeled(),
                    &state.y,
                    off..off + dims.specific,
                )?;
            }
            factor.specific[p].set_col_block(cols.start, &ratio.apply(&v_b));
        }
    }

    for part in [Part::Labeled, Part::Unlabeled] {
        let cols = part.range(n_l, n);
        if cols.is_empty() {
            continue;
        }
        let v_b = factor.shared.col_block(cols.clone());
        let mut ratio = Ratio::new(cfg.v_rule, dims.shared, cols.len());
        for (p, t) in terms.iter().enumerate() {
            ratio.push_reconstruction(
                t.alpha,
                &t.phi_c,
                &v_b,
                &t.phi_s,
                &factor.specific[p].col_block(cols.clone()),
                &t.x.col_block(cols.clone()),
            )?;
            ratio.push_graph(cfg.mu, &factor.shared, t.graph, cols.clone())?;
        }
        if part == Part::Labeled {
            ratio.push_regression(
                cfg.beta,
                &state.w,
                &factor.labeled(),
                &state.y,
                dims.shared_offset()..dims.total(),
            )?;
        }
        factor.shared.set_col_block(cols.start, &ratio.apply(&v_b));
    }

    for (p, s) in factor.specific.iter().enumerate() {
        s.ensure_finite(&format!("update_v_blocks (view {p} specific block)"))?;
    }
    factor
        .shared
        .ensure_finite("update_v_blocks (shared block)")?;
    factor.ensure_nonnegative("update_v_blocks")?;
    Ok(factor)
}

/// Gradients of the objective (fixed `α`) with respect to the four kinds
/// of representation block.
#[derive(Clone, Debug)]
pub struct VGradients {
    pub specific_labeled: Vec<Matrix>,
    pub specific_unlabeled: Vec<Matrix>,
    pub shared_labeled: Matrix,
    pub shared_unlabeled: Matrix,
}

/// Analytic gradients. Each is twice the corresponding stationarity
/// expression, e.g. for `V_sl^p`:
/// `2(α^p·Φ_sᵀ(A^p − X_l^p) + μ·V_s^p·L_l^p + β·F_s^p)`.
pub fn v_gradients(
    state: &ModelState,
    data: &MultiViewDataset,
    cfg: &PsdmfConfig,
) -> Result<VGradients> {
    check_shapes(state, data)?;
    let dims = state.dims();
    let n = data.n_samples();
    let n_l = data.n_labeled;
    let f = regression_residual(&state.w, &state.factor.labeled(), &state.y);

    let half = |p: usize, t: &ViewTerms<'_>, phi_b: &Matrix, rows: &Matrix, part: Part| {
        let cols = part.range(n_l, n);
        let v = state.factor.view_block(p).col_block(cols.clone());
        let phi = Matrix::hcat(&[&t.phi_s, &t.phi_c]).expect("same row count");
        let residual = &phi.matmul(&v) - &t.x.col_block(cols.clone());
        let mut g = phi_b.tr_matmul(&residual).scale(t.alpha);
        g.scaled_add_assign(cfg.mu, &rows.matmul(&t.graph.laplacian.col_block(cols)));
        g
    };

    let mut specific_labeled = Vec::new();
    let mut specific_unlabeled = Vec::new();
    let mut shared_labeled = Matrix::zeros(dims.shared, n_l);
    let mut shared_unlabeled = Matrix::zeros(dims.shared, n - n_l);
    for p in 0..data.n_views() {
        let t = view_terms(state, data, p);
        let spec = &state.factor.specific[p];
        let mut gl = half(p, &t, &t.phi_s, spec, Part::Labeled);
        let off = dims.specific_offset(p);
        gl.scaled_add_assign(cfg.beta, &f.row_block(off..off + dims.specific));
        specific_labeled.push(gl.scale(2.0));
        specific_unlabeled.push(half(p, &t, &t.phi_s, spec, Part::Unlabeled).scale(2.0));
        let shared = &state.factor.shared;
        shared_labeled.add_assign(&half(p, &t, &t.phi_c, shared, Part::Labeled));
        shared_unlabeled.add_assign(&half(p, &t, &t.phi_c, shared, Part::Unlabeled));
    }
    shared_labeled.scaled_add_assign(cfg.beta, &f.row_block(dims.shared_offset()..dims.total()));
    Ok(VGradients {
        specific_labeled,
        specific_unlabeled,
        shared_labeled: shared_labeled.scale(2.0),
        shared_unlabeled: shared_unlabeled.scale(2.0),
    })
}

/// Class of every sample: `argmax_c (Wᵀ·v_i)_c`, ties to the lowest class.
pub fn predict_labels(state: &ModelState) -> Vec<usize> {
    let scores = state.w.tr_matmul(&state.factor.stacked());
    argmax_columns(&scores)
}

pub fn argmax_columns(scores: &Matrix) -> Vec<usize> {
    (0..scores.cols())
        .map(|j| {
            let mut best = 0;
            for c in 1..scores.rows() {
                if scores[(c, j)] > scores[(best, j)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
