use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math::squared_distance;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    /// Cluster of each input row.
    pub assignment: Vec<usize>,
    pub iterations: usize,
}

pub const MAX_ITERATIONS: usize = 50;

/// Lloyd's k-means with seeded k-means++ seeding.
///
/// Ties in the nearest-centroid search go to the lowest cluster index. Fewer
/// than `k` centroids are returned when the rows hold fewer than `k` distinct
/// points. Empty clusters keep their previous centroid.
pub fn kmeans(rows: &[&[f64]], k: usize, max_iterations: usize, seed: u64) -> KMeans {
    if rows.is_empty() || k == 0 {
        return KMeans {
            centroids: Vec::new(),
            assignment: vec![0; rows.len()],
            iterations: 0,
        };
    }
    let mut rng = seed::rng(seed);
    let mut centroids: Vec<Vec<f64>> = vec![rows[rng.random_range(0..rows.len())].to_vec()];
    let mut nearest: Vec<f64> = rows.iter().map(|r| squared_distance(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random_range(0.0..total);
        let mut pick = rows.len() - 1;
        for (i, w) in nearest.iter().enumerate() {
            if target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        if nearest[pick] <= 0.0 {
            // Floating-point drift landed on an existing centroid; take the farthest row.
            pick = argmax(&nearest);
        }
        let c = rows[pick].to_vec();
        for (n, r) in nearest.iter_mut().zip(rows) {
            *n = n.min(squared_distance(r, &c));
        }
        centroids.push(c);
    }

    let dim = rows[0].len();
    let mut assignment = vec![usize::MAX; rows.len()];
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        let mut changed = false;
        for (a, r) in assignment.iter_mut().zip(rows) {
            let best = closest(&centroids, r);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (&a, r) in assignment.iter().zip(rows) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(r.iter()) {
                *s += v;
            }
        }
        for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
            if n > 0 {
                for (ci, si) in c.iter_mut().zip(s) {
                    *ci = si / n as f64;
                }
            }
        }
    }
    KMeans {
        centroids,
        assignment,
        iterations,
    }
}

fn closest(centroids: &[Vec<f64>], row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(row, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
