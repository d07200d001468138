//! Seeded Lloyd's k-means over matrix columns, used to initialize Semi-NMF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PsdmfError, Result};
use crate::numerics::Matrix;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    /// `features × k`
    pub centroids: Matrix,
    pub iterations: usize,
}

/// Clusters the columns of `x` into `k` groups with k-means++ seeding.
pub fn kmeans(x: &Matrix, k: usize, max_iter: usize, seed: u64) -> Result<KMeansResult> {
    let n = x.cols();
    if k == 0 || k > n {
        return Err(PsdmfError::invalid(format!(
            "k-means: cluster count {k} out of range 1..={n}"
        )));
    }
    let points: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let dim = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (j, d) in nearest.iter().enumerate() {
                if target < *d {
                    pick = j;
                    break;
                }
                target -= d;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[next].clone();
        for (d, p) in nearest.iter_mut().zip(&points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }

    let mut assignments = vec![usize::MAX; n];
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        for (j, p) in points.iter().enumerate() {
            let best = closest(p, &centroids);
            if assignments[j] != best {
                assignments[j] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // re-seed an empty cluster at the point farthest from its centroid
                let far = (0..n)
                    .filter(|&j| counts[assignments[j]] > 1)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centroids[assignments[a]]);
                        let db = sq_dist(&points[b], &centroids[assignments[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                centroids[c] = points[far].clone();
                counts[assignments[far]] -= 1;
                counts[c] = 1;
                assignments[far] = c;
                changed = true;
            } else {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }

    let centroids = Matrix::from_fn(dim, k, |i, c| centroids[c][i]);
    Ok(KMeansResult {
        assignments,
        centroids,
        iterations,
    })
}

fn closest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_blobs() {
        let x = Matrix::from_rows(&[[0.0, 0.1, 0.2, 5.0, 5.1, 5.2]]).unwrap();
        let r = kmeans(&x, 2, 50, 0).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[1], r.assignments[2]);
        assert_eq!(r.assignments[3], r.assignments[4]);
        assert_ne!(r.assignments[0], r.assignments[3]);
    }

    #[test]
    fn every_cluster_nonempty() {
        let x = Matrix::from_rows(&[[0.0, 0.0, 0.0, 0.0, 1.0]]).unwrap();
        let r = kmeans(&x, 3, 20, 7).unwrap();
        for c in 0..3 {
            assert!(r.assignments.contains(&c));
        }
    }

    #[test]
    fn rejects_bad_k() {
        let x = Matrix::zeros(2, 3);
        assert!(kmeans(&x, 0, 10, 0).is_err());
        assert!(kmeans(&x, 4, 10, 0).is_err());
    }
}
