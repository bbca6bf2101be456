//! Seeded Lloyd k-means with replicates.
//!
//! Each replicate starts from a k-means++ initialization drawn from its own
//! derived seed, alternates assignment and centroid updates until the
//! relative cost change falls below `tol` or `max_iters` is hit, and the
//! lowest-cost replicate wins (ties broken by replicate index). Replicates
//! run in parallel; per-replicate seeds keep the outcome identical for any
//! worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::seed::{self, STREAM_REPLICATE};

/// Knobs for one k-means run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    /// Independent restarts; the best one is returned.
    pub replicates: usize,
    pub max_iters: usize,
    /// Relative change in total within-cluster cost that counts as converged.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            replicates: 20,
            max_iters: 100,
            tol: 1e-6,
            seed,
        }
    }
}

/// Outcome of the best replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster id per sample, in `[0, k)`.
    pub assignments: Vec<usize>,
    /// `k x dim` centroid matrix consistent with `assignments` and `cost`.
    pub centroids: DenseMatrix,
    /// Total within-cluster sum of squared distances.
    pub cost: f64,
    pub iterations_run: usize,
    pub replicate_chosen: usize,
    /// True when a cluster emptied at any point (its centroid was reseeded
    /// to the farthest sample) or ended up unused in the final assignment.
    pub had_empty_clusters: bool,
}

struct LloydRun {
    assignments: Vec<usize>,
    centroids: DenseMatrix,
    cost: f64,
    iterations: usize,
    saw_empty_cluster: bool,
    // read by the descent test
    #[cfg_attr(not(test), allow(dead_code))]
    cost_trace: Vec<f64>,
}

/// Runs `cfg.replicates` seeded Lloyd optimizations and returns the best.
pub fn kmeans(data: &DenseMatrix, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let m = data.n_rows();
    if cfg.k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if cfg.k > m {
        return Err(Error::invalid(format!(
            "k = {} exceeds sample count {m}",
            cfg.k
        )));
    }
    if cfg.replicates == 0 || cfg.max_iters == 0 {
        return Err(Error::invalid("replicates and max_iters must be positive"));
    }
    if !(cfg.tol.is_finite() && cfg.tol >= 0.0) {
        return Err(Error::invalid("tol must be nonnegative"));
    }
    if let Some(index) = data.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }

    let runs: Vec<LloydRun> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let replicate_seed = seed::derive(&[cfg.seed, STREAM_REPLICATE, r]);
            lloyd(data, cfg.k, replicate_seed, cfg.max_iters, cfg.tol)
        })
        .collect();

    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.cost < runs[best].cost {
            best = i;
        }
    }
    let chosen = &runs[best];

    let mut used = vec![false; cfg.k];
    for &a in &chosen.assignments {
        used[a] = true;
    }
    let final_has_empty = used.iter().any(|&u| !u);

    Ok(KMeansResult {
        assignments: chosen.assignments.clone(),
        centroids: chosen.centroids.clone(),
        cost: chosen.cost,
        iterations_run: chosen.iterations,
        replicate_chosen: best,
        had_empty_clusters: chosen.saw_empty_cluster || final_has_empty,
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// One Lloyd optimization from a k-means++ start.
fn lloyd(data: &DenseMatrix, k: usize, seed: u64, max_iters: usize, tol: f64) -> LloydRun {
    let m = data.n_rows();
    let dim = data.n_cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(data, k, &mut rng);
    let mut saw_empty_cluster = false;
    let mut cost_trace = Vec::new();

    let mut assignments = vec![0usize; m];
    let mut cost = f64::INFINITY;
    let mut iterations = 0;

    for iter in 1..=max_iters {
        let prev_cost = cost;
        cost = 0.0;
        for (i, slot) in assignments.iter_mut().enumerate() {
            let point = data.row(i);
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for (c, centroid) in centroids.rows().enumerate() {
                let dist = squared_distance(point, centroid);
                // ties go to the lowest centroid index
                if dist < best_dist {
                    best_dist = dist;
                    best = c;
                }
            }
            *slot = best;
            cost += best_dist;
        }
        iterations = iter;
        cost_trace.push(cost);
        debug_assert!(
            cost <= prev_cost * (1.0 + 1e-12) + 1e-12,
            "cost rose from {prev_cost} to {cost}"
        );

        if prev_cost.is_finite() && prev_cost - cost <= tol * prev_cost {
            break;
        }
        if iter == max_iters {
            break;
        }

        // centroid update: fixed accumulation order over samples
        let mut sums = vec![0.0; k * dim];
        let mut sizes = vec![0usize; k];
        for (i, &a) in assignments.iter().enumerate() {
            sizes[a] += 1;
            let row = data.row(i);
            let acc = &mut sums[a * dim..(a + 1) * dim];
            for (s, &v) in acc.iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut next = Vec::with_capacity(k * dim);
        for c in 0..k {
            if sizes[c] > 0 {
                next.extend(sums[c * dim..(c + 1) * dim].iter().map(|s| s / sizes[c] as f64));
            } else {
                // keep the stale centroid; reseeded below
                next.extend_from_slice(centroids.row(c));
            }
        }
        let mut next = DenseMatrix::from_vec(k, dim, next).expect("centroid buffer is well formed");

        for (c, &size) in sizes.iter().enumerate() {
            if size == 0 {
                saw_empty_cluster = true;
                // move the empty centroid onto the sample farthest from it
                let mut far_idx = 0usize;
                let mut far_dist = -1.0;
                for i in 0..m {
                    let dist = squared_distance(data.row(i), next.row(c));
                    if dist > far_dist {
                        far_dist = dist;
                        far_idx = i;
                    }
                }
                let replacement = data.row(far_idx).to_vec();
                next.row_mut(c).copy_from_slice(&replacement);
            }
        }
        centroids = next;
    }

    LloydRun {
        assignments,
        centroids,
        cost,
        iterations,
        saw_empty_cluster,
        cost_trace,
    }
}

/// Seeded k-means++ initialization: first centroid uniform, the rest drawn
/// with probability proportional to squared distance from the chosen set.
fn kmeans_plus_plus(data: &DenseMatrix, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let m = data.n_rows();
    let dim = data.n_cols();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..m as u64) as usize);

    let mut dist = vec![0.0f64; m];
    for (i, slot) in dist.iter_mut().enumerate() {
        *slot = squared_distance(data.row(i), data.row(chosen[0]));
    }

    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut ticket = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, &w) in dist.iter().enumerate() {
                if ticket < w {
                    pick = i;
                    break;
                }
                ticket -= w;
            }
            pick
        } else {
            // all remaining mass is zero (duplicate points): uniform fallback
            rng.random_range(0..m as u64) as usize
        };
        chosen.push(next);
        for (i, slot) in dist.iter_mut().enumerate() {
            let candidate = squared_distance(data.row(i), data.row(next));
            if candidate < *slot {
                *slot = candidate;
            }
        }
    }

    let mut values = Vec::with_capacity(k * dim);
    for &idx in &chosen {
        values.extend_from_slice(data.row(idx));
    }
    DenseMatrix::from_vec(k, dim, values).expect("centroid seeds are rows of the data")
}
