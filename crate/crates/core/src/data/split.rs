use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MultiViewDataset;
use crate::error::{PsdmfError, Result};

/// `⌈fraction · n⌉`, clamped to `1..=n`.
pub fn labeled_count(n: usize, fraction: f64) -> usize {
    // the epsilon keeps 0.1 * 650 from rounding up to 66
    let raw = (fraction * n as f64 - 1e-9).ceil();
    (raw.max(1.0) as usize).min(n)
}

/// Picks a class-stratified labeled subset of size `⌈fraction · N⌉` and
/// permutes the columns so that it forms the leading block. Deterministic
/// for a given seed.
pub fn split_labeled(ds: &MultiViewDataset, fraction: f64, seed: u64) -> Result<MultiViewDataset> {
    let truth = ds
        .truth
        .as_ref()
        .ok_or_else(|| PsdmfError::Dataset("labeled split requires ground-truth labels".into()))?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(PsdmfError::invalid(format!(
            "label fraction {fraction} outside (0, 1]"
        )));
    }
    let n = ds.n_samples();
    let n_labeled = labeled_count(n, fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count];
    for (j, &c) in truth.iter().enumerate() {
        members[c].push(j);
    }
    for m in members.iter_mut() {
        m.shuffle(&mut rng);
    }
    let present = members.iter().filter(|m| !m.is_empty()).count();

    let mut labeled: Vec<usize> = if n_labeled < present {
        log::warn!(
            "{n_labeled} labeled samples cannot cover {present} classes; sampling without stratification"
        );
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all.truncate(n_labeled);
        all
    } else {
        let quotas = stratified_quotas(&members, n_labeled, n);
        members
            .iter()
            .zip(&quotas)
            .flat_map(|(m, &q)| m[..q].iter().copied())
            .collect()
    };
    labeled.shuffle(&mut rng);

    let mut is_labeled = vec![false; n];
    for &j in &labeled {
        is_labeled[j] = true;
    }
    let mut rest: Vec<usize> = (0..n).filter(|&j| !is_labeled[j]).collect();
    rest.shuffle(&mut rng);

    let order: Vec<usize> = labeled.into_iter().chain(rest).collect();
    let mut out = ds.permute_columns(&order);
    out.n_labeled = n_labeled;
    out.validate()?;
    Ok(out)
}

/// Proportional allocation with at least one sample per present class and
/// largest-remainder rounding.
fn stratified_quotas(members: &[Vec<usize>], total: usize, n: usize) -> Vec<usize> {
    let ideal: Vec<f64> = members
        .iter()
        .map(|m| total as f64 * m.len() as f64 / n as f64)
        .collect();
    let mut quotas: Vec<usize> = members
        .iter()
        .zip(&ideal)
        .map(|(m, &x)| {
            if m.is_empty() {
                0
            } else {
                (x.floor() as usize).clamp(1, m.len())
            }
        })
        .collect();
    let mut assigned: usize = quotas.iter().sum();

    let mut by_remainder: Vec<usize> = (0..members.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = ideal[a] - ideal[a].floor();
        let rb = ideal[b] - ideal[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    while assigned < total {
        let mut progressed = false;
        for &c in &by_remainder {
            if assigned == total {
                break;
            }
            if quotas[c] < members[c].len() {
                quotas[c] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    while assigned > total {
        // forced minimums overshot; trim the largest quotas
        let c = (0..quotas.len())
            .filter(|&c| quotas[c] > 1)
            .max_by(|&a, &b| quotas[a].cmp(&quotas[b]).then(b.cmp(&a)))
            .expect("total is at least the number of present classes");
        quotas[c] -= 1;
        assigned -= 1;
    }
    quotas
}
