//! Single-layer Semi-NMF: minimize `‖X − U·V‖²_F` subject to `V ≥ 0`, with
//! `X` and `U` of arbitrary sign.
//!
//! `U` takes the exact least-squares step for fixed `V`. `V` takes the
//! square-root multiplicative step built from the positive and negative
//! parts of `UᵀX` and `UᵀU`, which never increases the objective and keeps
//! `V` nonnegative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PsdmfError, Result};
use crate::kmeans::kmeans;
use crate::numerics::{solve_spd, split_neg, split_pos, Matrix};

/// Floor applied to the denominators of multiplicative ratios.
pub const DENOM_FLOOR: f64 = 1e-10;

/// Squared relative residual treated as an exact fit.
pub const ROUNDOFF_FLOOR: f64 = 1e-26;

/// Offset added to k-means cluster indicators when seeding `V`.
pub const INDICATOR_OFFSET: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SemiNmfInit {
    /// Cluster indicators from k-means on the columns of `X`, plus 0.2.
    #[default]
    KMeans,
    /// Uniform entries in (0, 1].
    Random,
}

impl SemiNmfInit {
    pub fn as_str(self) -> &'static str {
        match self {
            SemiNmfInit::KMeans => "kmeans",
            SemiNmfInit::Random => "random",
        }
    }
}

impl std::fmt::Display for SemiNmfInit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SemiNmfInit {
    type Err = crate::error::PsdmfError;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kmeans" => Ok(SemiNmfInit::KMeans),
            "random" => Ok(SemiNmfInit::Random),
            other => Err(crate::error::PsdmfError::invalid(format!(
                "unknown initialization `{other}` (expected kmeans or random)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SemiNmfOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub init: SemiNmfInit,
}

impl Default for SemiNmfOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            seed: 0,
            init: SemiNmfInit::KMeans,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SemiNmfResult {
    /// Mixed-sign basis, `rows(X) × k`.
    pub u: Matrix,
    /// Nonnegative coefficients, `k × cols(X)`.
    pub v: Matrix,
    /// `‖X − U·V‖²_F` after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares `U = X·Vᵀ·(V·Vᵀ)⁻¹` for fixed `V`.
pub fn seminmf_update_u(x: &Matrix, v: &Matrix) -> Result<Matrix> {
    if x.cols() != v.cols() {
        return Err(PsdmfError::ShapeMismatch {
            op: "seminmf_update_u",
            left: x.shape(),
            right: v.shape(),
        });
    }
    // (V Vᵀ) Uᵀ = V Xᵀ
    let gram = v.outer_gram();
    let rhs = v.matmul_tr(x);
    Ok(solve_spd(&gram, &rhs)?.x.t())
}

/// One multiplicative step
/// `V ← V ⊙ sqrt(([UᵀX]⁺ + [UᵀU]⁻·V) / ([UᵀX]⁻ + [UᵀU]⁺·V))`.
pub fn seminmf_update_v(x: &Matrix, u: &Matrix, v: &Matrix) -> Result<Matrix> {
    if x.rows() != u.rows() || u.cols() != v.rows() || x.cols() != v.cols() {
        return Err(PsdmfError::ShapeMismatch {
            op: "seminmf_update_v",
            left: x.shape(),
            right: (u.rows(), v.cols()),
        });
    }
    let utx = u.tr_matmul(x);
    let utu = u.gram();
    let utu_pos = split_pos(&utu)?;
    let utu_neg = split_neg(&utu)?;
    let num = &split_pos(&utx)? + &utu_neg.matmul(v);
    let den = &split_neg(&utx)? + &utu_pos.matmul(v);
    let updated = multiplicative_step(v, &num, &den);
    updated.ensure_finite("seminmf_update_v")?;
    Ok(updated)
}

/// `V ⊙ sqrt(num / max(den, δ))`.
pub(crate) fn multiplicative_step(v: &Matrix, num: &Matrix, den: &Matrix) -> Matrix {
    let ratio = num.div_elem(&den.map(|d| d.max(DENOM_FLOOR)));
    v.hadamard(&ratio.sqrt_elem())
}

pub fn reconstruction_error(x: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
    (x - &u.matmul(v)).frobenius_norm_sq()
}

pub fn initial_v(x: &Matrix, k: usize, opts: &SemiNmfOptions) -> Result<Matrix> {
    let n = x.cols();
    match opts.init {
        SemiNmfInit::KMeans => {
            let km = kmeans(x, k, 100, opts.seed)?;
            Ok(Matrix::from_fn(k, n, |c, j| {
                let hit = if km.assignments[j] == c { 1.0 } else { 0.0 };
                hit + INDICATOR_OFFSET
            }))
        }
        SemiNmfInit::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            Ok(Matrix::from_fn(k, n, |_, _| 1.0 - rng.random::<f64>()))
        }
    }
}

pub fn fit_seminmf(x: &Matrix, k: usize, opts: &SemiNmfOptions) -> Result<SemiNmfResult> {
    if k == 0 || k > x.rows().min(x.cols()) {
        return Err(PsdmfError::invalid(format!(
            "Semi-NMF rank {k} must lie in 1..={} for a {}x{} matrix",
            x.rows().min(x.cols()),
            x.rows(),
            x.cols()
        )));
    }
    x.ensure_finite("Semi-NMF input")?;

    let mut v = initial_v(x, k, opts)?;
    let mut u = seminmf_update_u(x, &v)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut prev = f64::INFINITY;
    // residuals below ~1e-13 relative are round-off
    let floor = ROUNDOFF_FLOOR * x.frobenius_norm_sq();
    for _ in 0..opts.max_iter {
        u = seminmf_update_u(x, &v)?;
        v = seminmf_update_v(x, &u, &v)?;
        if v.min() < 0.0 {
            return Err(PsdmfError::Invariant(
                "Semi-NMF coefficients became negative".into(),
            ));
        }
        let obj = reconstruction_error(x, &u, &v);
        trace.push(obj);
        if obj <= floor || (prev - obj).abs() < opts.tol * prev {
            converged = true;
            break;
        }
        prev = obj;
    }
    Ok(SemiNmfResult {
        u,
        v,
        iterations: trace.len(),
        objective_trace: trace,
        converged,
    })
}
