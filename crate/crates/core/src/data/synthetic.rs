//! Synthetic multi-view data with a planted partially shared factorization.
//!
//! Every view is `X^p = U^p·[V_s^p; V_c] + noise`: the shared block `V_c`
//! carries the cluster structure, each view-specific block `V_s^p` is
//! class-independent nonnegative clutter, and the loadings `U^p` are
//! Gaussian (mixed sign).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::MultiViewDataset;
use crate::error::{PsdmfError, Result};
use crate::numerics::Matrix;

/// Amplitude of the class-indicator pattern in the shared block.
const SIGNAL: f64 = 1.0;
/// Upper bound of the uniform jitter added to the shared block.
const SHARED_JITTER: f64 = 0.2;
/// Upper bound of the uniform view-specific entries.
const SPECIFIC_SCALE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n_views: usize,
    pub n_samples: usize,
    pub n_classes: usize,
    pub specific_dim: usize,
    pub shared_dim: usize,
    /// Feature count per view; length must equal `n_views`.
    pub view_dims: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_views: 2,
            n_samples: 120,
            n_classes: 3,
            specific_dim: 3,
            shared_dim: 3,
            view_dims: vec![20, 30],
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedFactors {
    /// `U^p`, `M^p × (K_s + K_c)`.
    pub loadings: Vec<Matrix>,
    /// `V_s^p`, `K_s × N`.
    pub specific: Vec<Matrix>,
    /// `V_c`, `K_c × N`.
    pub shared: Matrix,
}

impl PlantedFactors {
    /// `[V_s^p; V_c]`.
    pub fn stacked(&self, view: usize) -> Matrix {
        Matrix::vcat(&[&self.specific[view], &self.shared]).expect("planted blocks share N")
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: MultiViewDataset,
    pub planted: PlantedFactors,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.n_views == 0 || spec.view_dims.len() != spec.n_views {
        return Err(PsdmfError::invalid(format!(
            "{} views but {} view dimensions",
            spec.n_views,
            spec.view_dims.len()
        )));
    }
    if spec.n_classes == 0 || spec.n_samples < spec.n_classes {
        return Err(PsdmfError::invalid(format!(
            "{} samples cannot hold {} classes",
            spec.n_samples, spec.n_classes
        )));
    }
    if spec.shared_dim == 0 || spec.view_dims.contains(&0) {
        return Err(PsdmfError::invalid(
            "shared and view dimensions must be positive",
        ));
    }
    if !(spec.noise_sigma >= 0.0 && spec.noise_sigma.is_finite()) {
        return Err(PsdmfError::invalid(format!(
            "noise sigma {} must be a finite nonnegative number",
            spec.noise_sigma
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_samples;
    let c = spec.n_classes;

    let mut truth: Vec<usize> = (0..n).map(|j| j % c).collect();
    truth.shuffle(&mut rng);

    // class prototypes in the shared space
    let prototypes: Vec<Vec<f64>> = if spec.shared_dim >= c {
        (0..c)
            .map(|k| {
                (0..spec.shared_dim)
                    .map(|r| if r % c == k { SIGNAL } else { 0.0 })
                    .collect()
            })
            .collect()
    } else {
        (0..c)
            .map(|_| {
                (0..spec.shared_dim)
                    .map(|_| SIGNAL * rng.random::<f64>())
                    .collect()
            })
            .collect()
    };
    let shared = Matrix::from_fn(spec.shared_dim, n, |r, j| {
        prototypes[truth[j]][r] + SHARED_JITTER * rng.random::<f64>()
    });

    let mut loadings = Vec::with_capacity(spec.n_views);
    let mut specific = Vec::with_capacity(spec.n_views);
    let mut views = Vec::with_capacity(spec.n_views);
    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| PsdmfError::invalid(e.to_string()))?;
    for &dim in &spec.view_dims {
        let v_s = Matrix::from_fn(spec.specific_dim, n, |_, _| {
            SPECIFIC_SCALE * rng.random::<f64>()
        });
        let u = Matrix::from_fn(dim, spec.specific_dim + spec.shared_dim, |_, _| {
            StandardNormal.sample(&mut rng)
        });
        let stacked = Matrix::vcat(&[&v_s, &shared])?;
        let mut x = u.matmul(&stacked);
        if spec.noise_sigma > 0.0 {
            let e = Matrix::from_fn(dim, n, |_, _| noise.sample(&mut rng));
            x.add_assign(&e);
        }
        loadings.push(u);
        specific.push(v_s);
        views.push(x);
    }

    let mut dataset = MultiViewDataset::new(views, Some(truth))?;
    dataset.class_count = c;
    Ok(SyntheticData {
        dataset,
        planted: PlantedFactors {
            loadings,
            specific,
            shared,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_views_are_exact_low_rank() {
        let spec = SyntheticSpec {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let data = generate_synthetic(&spec).unwrap();
        for p in 0..spec.n_views {
            let recon = data.planted.loadings[p].matmul(&data.planted.stacked(p));
            assert_eq!((&data.dataset.views[p] - &recon).frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate_synthetic(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn balanced_classes() {
        let data = generate_synthetic(&SyntheticSpec::default()).unwrap();
        let t = data.dataset.truth.unwrap();
        for k in 0..3 {
            assert_eq!(t.iter().filter(|&&x| x == k).count(), 40);
        }
        assert!(data.planted.shared.min() >= 0.0);
        assert!(data.planted.specific.iter().all(|s| s.min() >= 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = SyntheticSpec {
            view_dims: vec![10],
            ..Default::default()
        };
        assert!(generate_synthetic(&bad).is_err());
        let bad = SyntheticSpec {
            noise_sigma: -1.0,
            ..Default::default()
        };
        assert!(generate_synthetic(&bad).is_err());
    }
}
