use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { k: 3, restarts: 50, max_iter: 300 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster of each input value; cluster 0 has the smallest centroid.
    pub assignments: Vec<usize>,
    pub centroids: Vec<f64>,
    pub inertia: f64,
    /// Some cluster ended up with no members.
    pub degenerate: bool,
}

fn nearest(centroids: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (c, &m) in centroids.iter().enumerate() {
        if (v - m).abs() < (v - centroids[best]).abs() {
            best = c;
        }
    }
    best
}

fn plus_plus<R: Rng>(values: &[f64], k: usize, rng: &mut R) -> Vec<f64> {
    let mut centroids = vec![values[rng.random_range(0..values.len())]];
    while centroids.len() < k {
        let d2: Vec<f64> = values
            .iter()
            .map(|&v| {
                let m = centroids[nearest(&centroids, v)];
                (v - m) * (v - m)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        if total == 0.0 {
            // Every value already coincides with a centroid.
            centroids.push(values[rng.random_range(0..values.len())]);
            continue;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = values.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            if target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        centroids.push(values[pick]);
    }
    centroids
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>, max_iter: usize) -> (Vec<usize>, Vec<f64>, f64) {
    let k = centroids.len();
    let mut assign: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
    for _ in 0..max_iter {
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (&v, &a) in values.iter().zip(&assign) {
            sum[a] += v;
            count[a] += 1;
        }
        for c in 0..k {
            if count[c] > 0 {
                centroids[c] = sum[c] / count[c] as f64;
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    let inertia = values
        .iter()
        .zip(&assign)
        .map(|(&v, &a)| (v - centroids[a]) * (v - centroids[a]))
        .sum();
    (assign, centroids, inertia)
}

/// One-dimensional k-means with k-means++ seeding and restarts, keeping the
/// restart with the lowest inertia. Values are sorted before clustering so
/// the partition does not depend on input order.
pub fn kmeans_1d(values: &[f64], cfg: &KMeansConfig, seed: u64) -> Result<KMeansResult, EvalError> {
    if cfg.k == 0 || cfg.restarts == 0 {
        return Err(EvalError::Invalid("k and restarts must be positive"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::Invalid("values must be finite"));
    }
    if values.len() < cfg.k {
        return Err(EvalError::TooFewValues { k: cfg.k, n: values.len() });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
    for r in 0..cfg.restarts as u64 {
        let mut rng = stream(seed, &[0x4B, r]);
        let init = plus_plus(&sorted, cfg.k, &mut rng);
        let run = lloyd(&sorted, init, cfg.max_iter);
        if best.as_ref().map_or(true, |b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (assign, centroids, inertia) = best.expect("restarts > 0");

    let mut count = vec![0usize; cfg.k];
    for &a in &assign {
        count[a] += 1;
    }
    // Rank clusters by centroid; empty clusters go last.
    let mut rank: Vec<usize> = (0..cfg.k).collect();
    rank.sort_by(|&a, &b| (count[a] == 0).cmp(&(count[b] == 0)).then(centroids[a].total_cmp(&centroids[b])));
    let mut relabel = vec![0; cfg.k];
    for (new, &old) in rank.iter().enumerate() {
        relabel[old] = new;
    }
    let mut assignments = vec![0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = relabel[assign[pos]];
    }
    Ok(KMeansResult {
        assignments,
        centroids: rank.iter().map(|&c| centroids[c]).collect(),
        inertia,
        degenerate: count.contains(&0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separated_groups_are_pure() {
        let values = [200.0, 1.0, 50.0, 1.0, 200.0, 50.0, 1.0, 50.0, 200.0];
        let r = kmeans_1d(&values, &KMeansConfig::default(), 7).unwrap();
        for (&v, &a) in values.iter().zip(&r.assignments) {
            let want = if v == 1.0 { 0 } else if v == 50.0 { 1 } else { 2 };
            assert_eq!(a, want);
        }
        assert_eq!(r.centroids, vec![1.0, 50.0, 200.0]);
        assert_eq!(r.inertia, 0.0);
        assert!(!r.degenerate);
    }

    #[test]
    fn identical_values_are_degenerate() {
        let r = kmeans_1d(&[4.0; 6], &KMeansConfig::default(), 1).unwrap();
        assert!(r.degenerate);
        assert!(r.assignments.iter().all(|&a| a == r.assignments[0]));
    }

    #[test]
    fn too_few_values() {
        assert_eq!(
            kmeans_1d(&[1.0, 2.0], &KMeansConfig::default(), 0),
            Err(EvalError::TooFewValues { k: 3, n: 2 })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn partition_ignores_input_order(
            values in proptest::collection::vec(0.0f64..300.0, 3..20),
            perm_seed in any::<u64>(),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let cfg = KMeansConfig::default();
            let a = kmeans_1d(&values, &cfg, seed).unwrap();
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.shuffle(&mut stream(perm_seed, &[]));
            let permuted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            let b = kmeans_1d(&permuted, &cfg, seed).unwrap();
            for (pos, &i) in idx.iter().enumerate() {
                prop_assert_eq!(a.assignments[i], b.assignments[pos]);
            }
        }
    }
}
