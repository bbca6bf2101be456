//! Quantitative measures: row-occupancy statistics, distance distortion,
//! preservation probability, class separability and clustering accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::builders::{self, BuilderSpec};
use crate::data_io::LabeledDataset;
use crate::error::{Error, Result};
use crate::matrix::{l2_norm, DenseMatrix, ProjectionMatrix, SparseProjection};
use crate::seed::{self, STREAM_TRIAL_BUILD, STREAM_TRIAL_PICK};

/// Per-row nonzero counts of a sparse projection, with the matching
/// closed-form moments for the balanced and with-replacement constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStats {
    /// Nonzeros per row; sums to `n`.
    pub counts: Vec<usize>,
    /// Mean of `counts`; always exactly `n/d` because the column sum is fixed.
    pub empirical_mean: f64,
    /// Population variance of `counts` (divide by `d`).
    pub empirical_var: f64,
    /// `floor(n/d)`.
    pub r: usize,
    /// `n mod d`.
    pub q: usize,
    /// `n/d`.
    pub theo_mean: f64,
    /// Balanced construction: `q/d - (q/d)^2`, at most 1/4.
    pub theo_var_balanced: f64,
    /// With-replacement construction: `n * (1/d) * (1 - 1/d)`.
    pub theo_var_with_replacement: f64,
}

/// Counts nonzeros per row and fills in empirical and closed-form moments.
pub fn row_nnz_counts(r: &SparseProjection) -> RowStats {
    let d = r.rows();
    let n = r.cols();
    let mut counts = vec![0usize; d];
    for &t in r.target_row() {
        counts[t] += 1;
    }
    let mean = n as f64 / d as f64;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / d as f64;
    let q = n % d;
    let q_over_d = q as f64 / d as f64;
    RowStats {
        counts,
        empirical_mean: mean,
        empirical_var: var,
        r: n / d,
        q,
        theo_mean: mean,
        theo_var_balanced: q_over_d - q_over_d * q_over_d,
        theo_var_with_replacement: n as f64 * (1.0 / d as f64) * (1.0 - 1.0 / d as f64),
    }
}

/// Relative distortion of one vector's norm under a projection:
/// `| ||Rx|| / ||x|| - 1 |`. Scale-invariant in `x`; rejects the zero vector.
pub fn relative_error(x: &[f64], r: &ProjectionMatrix) -> Result<f64> {
    let norm_x = l2_norm(x);
    if norm_x == 0.0 {
        return Err(Error::invalid("relative error of the zero vector"));
    }
    let y = r.project_vector(x)?;
    Ok((l2_norm(&y) / norm_x - 1.0).abs())
}

/// Monte-Carlo estimate of the distance preservation probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PreservationEstimate {
    pub epsilon: f64,
    pub trials: usize,
    /// Fraction of trials whose relative error was at most `epsilon`.
    pub p_hat: f64,
    pub mean_rel_error: f64,
}

impl PreservationEstimate {
    /// Binomial standard error of `p_hat`.
    pub fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}

/// Estimates the probability that a fresh projection keeps `||Rx||` within
/// `[(1-eps)||x||, (1+eps)||x||]`.
///
/// Each trial draws a fresh matrix from a trial seed derived from
/// `template.seed` and evaluates one vector sampled from the rows of
/// `vectors` (a single-row matrix pins the vector). Trials are independent
/// and may run in parallel without changing the result.
pub fn estimate_preservation_probability(
    vectors: &DenseMatrix,
    template: &BuilderSpec,
    epsilon: f64,
    trials: usize,
) -> Result<PreservationEstimate> {
    if vectors.n_rows() == 0 {
        return Err(Error::invalid("empty evaluation vector set"));
    }
    if vectors.n_cols() != template.n {
        return Err(Error::ShapeMismatch {
            context: "estimate_preservation_probability",
            expected: template.n,
            found: vectors.n_cols(),
        });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }

    let outcomes: Vec<(bool, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| -> Result<(bool, f64)> {
            let mut spec = *template;
            spec.seed = seed::derive(&[template.seed, STREAM_TRIAL_BUILD, t]);
            let matrix = builders::build(&spec)?;
            let mut pick =
                ChaCha8Rng::seed_from_u64(seed::derive(&[template.seed, STREAM_TRIAL_PICK, t]));
            let row = pick.random_range(0..vectors.n_rows() as u64) as usize;
            let err = relative_error(vectors.row(row), &matrix)?;
            Ok((err <= epsilon, err))
        })
        .collect::<Result<_>>()?;

    let passes = outcomes.iter().filter(|(ok, _)| *ok).count();
    let mean_rel_error = outcomes.iter().map(|(_, e)| e).sum::<f64>() / trials as f64;
    Ok(PreservationEstimate {
        epsilon,
        trials,
        p_hat: passes as f64 / trials as f64,
        mean_rel_error,
    })
}

/// Class separability: ratio of between-class to within-class scatter.
///
/// `J = tr(S_b) / tr(S_w)` with `S_b` the prior-weighted scatter of class
/// means around the grand mean and `S_w` the prior-weighted scatter of
/// samples around their class means. Traces are accumulated directly as sums
/// of squared deviations; the full scatter matrices are never materialized.
/// Larger is more separable. Errors out when the within-class scatter is
/// zero instead of returning an infinity.
pub fn separability_j(data: &LabeledDataset) -> Result<f64> {
    let m = data.features.n_rows();
    let n = data.features.n_cols();
    let c = data.class_count;
    if c < 2 {
        return Err(Error::invalid("separability needs at least 2 classes"));
    }

    let mut class_sizes = vec![0usize; c];
    for &label in &data.labels {
        class_sizes[label] += 1;
    }
    if class_sizes.contains(&0) {
        return Err(Error::invalid("every class must be nonempty"));
    }

    // class means and grand mean, accumulated in sample order
    let mut class_means = vec![vec![0.0; n]; c];
    for (i, &label) in data.labels.iter().enumerate() {
        let row = data.features.row(i);
        let mean = &mut class_means[label];
        for (acc, &v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for (mean, &size) in class_means.iter_mut().zip(&class_sizes) {
        for v in mean.iter_mut() {
            *v /= size as f64;
        }
    }
    let mut grand_mean = vec![0.0; n];
    for i in 0..m {
        for (acc, &v) in grand_mean.iter_mut().zip(data.features.row(i)) {
            *acc += v;
        }
    }
    for v in &mut grand_mean {
        *v /= m as f64;
    }

    let mut within = 0.0;
    for (i, &label) in data.labels.iter().enumerate() {
        let prior = class_sizes[label] as f64 / m as f64;
        let mean = &class_means[label];
        let dev: f64 = data
            .features
            .row(i)
            .iter()
            .zip(mean)
            .map(|(&v, &mu)| (v - mu) * (v - mu))
            .sum();
        within += prior * dev;
    }

    let mut between = 0.0;
    for (mean, &size) in class_means.iter().zip(&class_sizes) {
        let prior = size as f64 / m as f64;
        let dev: f64 = mean
            .iter()
            .zip(&grand_mean)
            .map(|(&mu, &g)| (mu - g) * (mu - g))
            .sum();
        between += prior * dev;
    }

    if within == 0.0 {
        return Err(Error::DegenerateSeparability);
    }
    Ok(between / within)
}

/// Fraction of points assigned to the right cluster under the best
/// one-to-one matching between predicted cluster ids and truth labels,
/// found by optimal assignment on the contingency table. Invariant under
/// relabeling of either side.
pub fn clustering_accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            context: "clustering_accuracy",
            expected: truth.len(),
            found: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::invalid("empty label arrays"));
    }

    let pred_ids = dense_ids(predicted);
    let truth_ids = dense_ids(truth);
    let kp = pred_ids.1;
    let kt = truth_ids.1;
    let k = kp.max(kt);

    // contingency table, padded square with zeros
    let mut table = vec![0i64; k * k];
    for (&p, &t) in pred_ids.0.iter().zip(&truth_ids.0) {
        table[p * k + t] += 1;
    }

    let matched = max_assignment_total(&table, k);
    Ok(matched as f64 / truth.len() as f64)
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut uniq: Vec<usize> = labels.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    let ids = labels
        .iter()
        .map(|l| uniq.binary_search(l).expect("label present"))
        .collect();
    (ids, uniq.len())
}

/// Maximum-total one-to-one assignment on a square `k x k` weight table,
/// via the O(k^3) Hungarian algorithm with potentials (exact in i64).
fn max_assignment_total(weights: &[i64], k: usize) -> i64 {
    let max_w = weights.iter().copied().max().unwrap_or(0);
    // convert to a min-cost problem with nonnegative costs
    let cost = |i: usize, j: usize| max_w - weights[i * k + j];

    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut assigned_row = vec![0usize; k + 1]; // assigned_row[col] = row, 1-based
    let mut way = vec![0usize; k + 1];

    for i in 1..=k {
        assigned_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0usize;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0i64;
    for j in 1..=k {
        if assigned_row[j] > 0 {
            total += weights[(assigned_row[j] - 1) * k + (j - 1)];
        }
    }
    total
}
