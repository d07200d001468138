#![allow(dead_code)]

use psdmf::data::MultiViewDataset;
use psdmf::graph::GraphLaplacian;
use psdmf::psdmf::{build_label_matrix, ModelState, PartiallySharedFactor, PsdmfConfig};
use psdmf::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub struct Shape {
    pub views: usize,
    pub n: usize,
    pub n_labeled: usize,
    pub specific: usize,
    pub shared: usize,
    pub layers: usize,
    pub classes: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Self {
            views: 2,
            n: 20,
            n_labeled: 4,
            specific: 2,
            shared: 2,
            layers: 1,
            classes: 2,
        }
    }
}

pub struct Instance {
    pub data: MultiViewDataset,
    pub state: ModelState,
    pub cfg: PsdmfConfig,
}

/// Random state with every factor drawn independently: mixed-sign data and
/// loadings, strictly positive representation blocks, random regression
/// weights and view weights, k-NN graphs on the data.
pub fn random_instance(shape: &Shape, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_view = shape.specific + shape.shared;
    let mut views = Vec::new();
    let mut loadings = Vec::new();
    for p in 0..shape.views {
        let m = 5 + p + rng.random_range(0..3);
        views.push(gaussian(m, shape.n, &mut rng));
        let mut sizes = vec![m];
        for i in 1..shape.layers {
            sizes.push(per_view + shape.layers - i);
        }
        sizes.push(per_view);
        loadings.push(
            sizes
                .windows(2)
                .map(|w| gaussian(w[0], w[1], &mut rng))
                .collect::<Vec<_>>(),
        );
    }
    let truth: Vec<usize> = (0..shape.n).map(|j| j % shape.classes).collect();
    let mut data = MultiViewDataset::new(views, Some(truth.clone())).unwrap();
    data.n_labeled = shape.n_labeled;
    let factor = PartiallySharedFactor {
        specific: (0..shape.views)
            .map(|_| uniform(shape.specific, shape.n, 0.05, 1.0, &mut rng))
            .collect(),
        shared: uniform(shape.shared, shape.n, 0.05, 1.0, &mut rng),
        n_labeled: shape.n_labeled,
    };
    let k = shape.views * shape.specific + shape.shared;
    let cfg = PsdmfConfig {
        mu: rng.random_range(0.0..1.0),
        beta: rng.random_range(0.0..10.0),
        gamma: rng.random_range(0.0..10.0),
        ..Default::default()
    };
    let state = ModelState {
        loadings,
        factor,
        w: gaussian(k, shape.classes, &mut rng),
        alpha: (0..shape.views)
            .map(|_| rng.random_range(0.1..2.0))
            .collect(),
        y: build_label_matrix(&truth[..shape.n_labeled], shape.classes).unwrap(),
        laplacians: data
            .views
            .iter()
            .map(|x| GraphLaplacian::from_samples(x, 3).unwrap())
            .collect(),
    };
    Instance { data, state, cfg }
}
