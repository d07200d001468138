mod common;

use common::{gaussian, random_instance, uniform, Shape};
use nalgebra::DMatrix;
use psdmf::pretrain::chain_product;
use psdmf::psdmf::{
    alpha_from_residual, argmax_columns, build_label_matrix, objective, objective_terms,
    predict_labels, reweighting, update_alpha, update_u, update_w, RESIDUAL_FLOOR,
};
use psdmf::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Orthogonal projector onto the column space of `a`, from the
/// eigendecomposition of `aᵀa` (eigenvalues below `1e-10·max` dropped).
fn column_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = (a.transpose() * a).symmetric_eigen();
    let top = eig.eigenvalues.max();
    let mut p = DMatrix::zeros(a.nrows(), a.nrows());
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 1e-10 * top {
            let q = a * eig.eigenvectors.column(k) / lambda.sqrt();
            p += &q * q.transpose();
        }
    }
    p
}

/// `min_U ‖X − Φ·U·Ũ‖² = ‖X − P_Φ·X·P_Ũ‖²`, where `P_Φ` projects onto the
/// columns of `Φ` and `P_Ũ` onto the rows of `Ũ`.
fn least_squares_optimum(x: &Matrix, phi: Option<&Matrix>, below: &Matrix) -> f64 {
    let x = to_na(x);
    let left = phi.map_or_else(
        || DMatrix::identity(x.nrows(), x.nrows()),
        |p| column_projector(&to_na(p)),
    );
    let right = column_projector(&to_na(below).transpose());
    (&x - left * &x * right).norm_squared()
}

fn reconstruction(state: &psdmf::ModelState, data: &psdmf::MultiViewDataset, p: usize) -> f64 {
    (&data.views[p] - &state.reconstruction(p)).frobenius_norm_sq()
}

#[test]
fn update_u_matches_normal_equations_oracle() {
    for seed in 0..100 {
        let inst = random_instance(
            &Shape {
                layers: 2,
                ..Default::default()
            },
            seed,
        );
        for p in 0..2 {
            for i in 0..2 {
                let layers = &inst.state.loadings[p];
                let mut below = inst.state.factor.view_block(p);
                for u in layers[i + 1..].iter().rev() {
                    below = u.matmul(&below);
                }
                let phi = (i > 0).then(|| chain_product(&layers[..i]));
                let b = least_squares_optimum(&inst.data.views[p], phi.as_ref(), &below);

                let mut ours = inst.state.clone();
                ours.loadings[p][i] = update_u(&inst.state, &inst.data, p, i).unwrap();
                let a = reconstruction(&ours, &inst.data, p);
                assert!(
                    (a - b).abs() <= 1e-8 * b,
                    "seed {seed} view {p} layer {i}: {a} vs {b}"
                );
                assert!(a <= reconstruction(&inst.state, &inst.data, p) * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn update_u_descent_probe() {
    for seed in 0..500 {
        let inst = random_instance(
            &Shape {
                layers: 2,
                ..Default::default()
            },
            10_000 + seed,
        );
        let mut state = inst.state.clone();
        for p in 0..2 {
            for i in 0..2 {
                let before = reconstruction(&state, &inst.data, p);
                state.loadings[p][i] = update_u(&state, &inst.data, p, i).unwrap();
                let after = reconstruction(&state, &inst.data, p);
                assert!(after <= before * (1.0 + 1e-10), "seed {seed}");
            }
        }
    }
}

#[test]
fn update_u_recovers_exact_loadings() {
    let mut inst = random_instance(&Shape::default(), 3);
    let truth = gaussian(
        inst.data.views[0].rows(),
        4,
        &mut ChaCha8Rng::seed_from_u64(9),
    );
    inst.data.views[0] = truth.matmul(&inst.state.factor.view_block(0));
    let u = update_u(&inst.state, &inst.data, 0, 0).unwrap();
    assert!((&u - &truth).frobenius_norm() <= 1e-8 * truth.frobenius_norm());
}

#[test]
fn first_layer_reduces_to_right_solve() {
    let inst = random_instance(&Shape::default(), 4);
    let below = inst.state.factor.view_block(0);
    let x = &inst.data.views[0];
    // X·Ũᵀ·(ŨŨᵀ)⁻¹ via nalgebra
    let b = to_na(&below);
    let expected = to_na(x) * b.transpose() * (&b * b.transpose()).try_inverse().unwrap();
    let u = update_u(&inst.state, &inst.data, 0, 0).unwrap();
    let diff = (to_na(&u) - &expected).norm();
    assert!(diff <= 1e-8 * expected.norm(), "{diff}");
}

#[test]
fn update_w_satisfies_stationarity() {
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v_l = uniform(6, 9, 0.0, 1.0, &mut rng);
        let labels: Vec<usize> = (0..9).map(|j| j % 3).collect();
        let y = build_label_matrix(&labels, 3).unwrap();
        let w_prev = gaussian(6, 3, &mut rng);
        let gamma = [0.0, 0.1, 1.0, 10.0][seed as usize % 4];
        let w = update_w(&v_l, &y, gamma, &w_prev).unwrap();
        let e = reweighting(&w_prev);
        let fit = v_l.matmul(&(&v_l.tr_matmul(&w) - &y.t()));
        let mut residual = fit;
        residual.scaled_add_assign(gamma, &e.matmul(&w));
        let bound = 1e-6 * (1.0 + v_l.matmul_tr(&y).frobenius_norm());
        assert!(residual.frobenius_norm() <= bound, "seed {seed}");
    }
}

#[test]
fn update_w_exact_regression() {
    let labels = [0, 1, 2, 1];
    let y = build_label_matrix(&labels, 3).unwrap();
    let w = update_w(&Matrix::identity(4), &y, 0.0, &Matrix::zeros(4, 3)).unwrap();
    assert!((&w - &y.t()).frobenius_norm() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v_l = uniform(4, 4, 0.1, 1.0, &mut rng);
    let w = update_w(&v_l, &y, 0.0, &Matrix::zeros(4, 3)).unwrap();
    assert!((&w.tr_matmul(&v_l) - &y).frobenius_norm() < 1e-8);
}

#[test]
fn alpha_examples() {
    assert_eq!(alpha_from_residual(0.5), 1.0);
    let r = 0.37;
    assert!((alpha_from_residual(r) / alpha_from_residual(2.0 * r) - 2.0).abs() < 1e-12);
    let capped = alpha_from_residual(0.0);
    assert!(capped.is_finite());
    assert_eq!(capped, 1.0 / (2.0 * RESIDUAL_FLOOR));
}

#[test]
fn alpha_uses_view_residuals() {
    let inst = random_instance(&Shape::default(), 8);
    let alpha = update_alpha(&inst.state, &inst.data);
    for (p, a) in alpha.iter().enumerate() {
        let r = inst.state.residual_norm(p, &inst.data.views[p]);
        assert_eq!(*a, 1.0 / (2.0 * r));
    }
}

#[test]
fn label_matrix() {
    let y = build_label_matrix(&[0, 1, 0], 2).unwrap();
    assert_eq!(
        y,
        Matrix::from_rows(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap()
    );
    let y = build_label_matrix(&[0, 0, 0, 0], 3).unwrap();
    assert_eq!(y.row(0), vec![1.0; 4]);
    assert_eq!(y.row(1), vec![0.0; 4]);
    assert!(build_label_matrix(&[0, 3], 3).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let labels: Vec<usize> = (0..30)
            .map(|_| rand::Rng::random_range(&mut rng, 0..5))
            .collect();
        let y = build_label_matrix(&labels, 5).unwrap();
        for j in 0..30 {
            let col = y.column(j);
            assert_eq!(col.iter().sum::<f64>(), 1.0);
            assert_eq!(col[labels[j]], 1.0);
        }
    }
}

/// Scalar-loop evaluation of every objective term.
fn loop_objective(inst: &common::Instance) -> f64 {
    let s = &inst.state;
    let mut total = 0.0;
    for p in 0..inst.data.n_views() {
        let phi = s.chain(p);
        let v = s.factor.view_block(p);
        let x = &inst.data.views[p];
        let mut rec = 0.0;
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let mut fit = 0.0;
                for k in 0..v.rows() {
                    fit += phi[(i, k)] * v[(k, j)];
                }
                rec += (x[(i, j)] - fit).powi(2);
            }
        }
        // Σ_ij S_ij ‖v_i − v_j‖² / 2
        let aff = &s.laplacians[p].affinity;
        let mut graph = 0.0;
        for i in 0..v.cols() {
            for j in 0..v.cols() {
                let d: f64 = (0..v.rows()).map(|k| (v[(k, i)] - v[(k, j)]).powi(2)).sum();
                graph += aff[(i, j)] * d;
            }
        }
        total += s.alpha[p] * rec + inst.cfg.mu * graph / 2.0;
    }
    let v = s.factor.stacked();
    let mut reg = 0.0;
    for c in 0..s.y.rows() {
        for n in 0..s.factor.n_labeled {
            let pred: f64 = (0..v.rows()).map(|k| s.w[(k, c)] * v[(k, n)]).sum();
            reg += (pred - s.y[(c, n)]).powi(2);
        }
    }
    let l21: f64 = (0..s.w.rows())
        .map(|k| {
            (0..s.w.cols())
                .map(|c| s.w[(k, c)].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    total + inst.cfg.beta * (reg + inst.cfg.gamma * l21)
}

#[test]
fn objective_matches_loop_oracle() {
    for seed in 0..30 {
        let inst = random_instance(
            &Shape {
                layers: 1 + seed as usize % 2,
                ..Default::default()
            },
            seed,
        );
        let a = objective(&inst.state, &inst.data, &inst.cfg).unwrap();
        let b = loop_objective(&inst);
        assert!((a - b).abs() <= 1e-10 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn objective_term_isolation() {
    let mut inst = random_instance(&Shape::default(), 2);
    inst.cfg.mu = 0.0;
    inst.cfg.beta = 0.0;
    inst.state.alpha = vec![1.0, 1.0];
    let terms = objective_terms(&inst.state, &inst.data, &inst.cfg).unwrap();
    let rec: f64 = terms.reconstruction.iter().sum();
    assert!((terms.total - rec).abs() <= 1e-12 * rec);

    // perfect reconstruction, W = 0, Y = 0, μ = 0
    for p in 0..2 {
        inst.data.views[p] = inst.state.reconstruction(p);
    }
    inst.state.w = Matrix::zeros(inst.state.w.rows(), inst.state.w.cols());
    inst.state.y = Matrix::zeros(inst.state.y.rows(), inst.state.y.cols());
    inst.cfg.beta = 10.0;
    assert_eq!(objective(&inst.state, &inst.data, &inst.cfg).unwrap(), 0.0);
}

#[test]
fn prediction_examples() {
    let scores = Matrix::from_rows(&[vec![0.1, 0.5], vec![0.9, 0.5]]).unwrap();
    assert_eq!(argmax_columns(&scores), vec![1, 0]);
}

#[test]
fn prediction_invariant_to_positive_scaling() {
    for seed in 0..20 {
        let inst = random_instance(&Shape::default(), seed);
        let base = predict_labels(&inst.state);
        assert_eq!(base.len(), 20);
        let mut scaled = inst.state.clone();
        scaled.w = scaled.w.scale(3.7);
        assert_eq!(predict_labels(&scaled), base);
    }
}
