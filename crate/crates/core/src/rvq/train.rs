//! Codebook training: per-stage k-means on the running residuals.
//!
//! Stage s runs k-means (k-means++ seeding, a fixed 25 Lloyd iterations,
//! squared Euclidean distance, ties to the lowest index) over the residual
//! set left by stages 0..s, then subtracts each residual's nearest centroid
//! to form the next residual set. Empty clusters are re-seeded from the
//! point farthest from its assigned centroid. Fully deterministic for a
//! given seed.

use super::{nearest_entry, CodebookSet};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

const LLOYD_ITERATIONS: usize = 25;

pub fn train_codebooks(
    frames: &[Vec<f64>],
    n_stages: usize,
    codebook_size: usize,
    seed: u64,
) -> Result<CodebookSet> {
    if n_stages == 0 {
        return Err(Error::Codec("training needs at least one stage".into()));
    }
    if codebook_size < 2 {
        return Err(Error::Codec("codebook size must be at least 2".into()));
    }
    if frames.len() < codebook_size {
        return Err(Error::Codec(format!(
            "need at least {codebook_size} frames to train, got {}",
            frames.len()
        )));
    }
    let dim = frames[0].len();
    if dim == 0 {
        return Err(Error::Codec("frame dimension must be positive".into()));
    }
    for (i, f) in frames.iter().enumerate() {
        if f.len() != dim {
            return Err(Error::Codec(format!(
                "frame {i} has dimension {}, expected {dim}",
                f.len()
            )));
        }
        if f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Codec(format!("frame {i} holds non-finite values")));
        }
    }

    let mut rng = SplitMix64::new(seed);
    let mut residuals: Vec<Vec<f64>> = frames.to_vec();
    let mut stages = Vec::with_capacity(n_stages);
    for _ in 0..n_stages {
        let centroids = kmeans(&residuals, codebook_size, &mut rng);
        for r in &mut residuals {
            let k = nearest_entry(&centroids, r);
            for (x, c) in r.iter_mut().zip(&centroids[k]) {
                *x -= c;
            }
        }
        stages.push(centroids);
    }
    CodebookSet::new(stages)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut centroids = kmeans_plus_plus_init(points, k, rng);
    let mut assignment = vec![0usize; points.len()];
    for _ in 0..LLOYD_ITERATIONS {
        // Assignment step.
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest_entry(&centroids, p);
        }
        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (ctr, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *ctr = s / counts[c] as f64;
                }
            }
        }
        // Re-seed empty clusters from the farthest point.
        for c in 0..k {
            if counts[c] == 0 {
                let far = farthest_point(points, &centroids, &assignment);
                centroids[c] = points[far].clone();
                assignment[far] = c;
            }
        }
    }
    centroids
}

/// Index of the point with the largest distance to its assigned centroid.
fn farthest_point(points: &[Vec<f64>], centroids: &[Vec<f64>], assignment: &[usize]) -> usize {
    let mut best = 0;
    let mut best_dist = -1.0;
    for (i, p) in points.iter().enumerate() {
        let d = squared_distance(p, &centroids[assignment[i]]);
        if d > best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}

fn kmeans_plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.next_index(points.len())].clone());
    // Running min distance of every point to the chosen set.
    let mut min_dist: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = min_dist.iter().sum();
        let chosen = if total > 0.0 {
            let mut threshold = rng.next_f64() * total;
            let mut pick = points.len() - 1;
            for (i, &d) in min_dist.iter().enumerate() {
                threshold -= d;
                if threshold <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // Degenerate cloud: every point coincides with a centroid.
            rng.next_index(points.len())
        };
        centroids.push(points[chosen].clone());
        for (d, p) in min_dist.iter_mut().zip(points) {
            let nd = squared_distance(p, centroids.last().unwrap());
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}
