//! Experiment orchestration: sweeps over methods and target dimensions,
//! emitting [`ReportRecord`] rows.
//!
//! Every sweep cell derives its own seed from
//! `(master_seed, experiment tag, method tag, cell parameters)` and trial
//! `t` inside a cell from `(cell seed, t)`, so cells are isolated: adding
//! methods or reordering sweeps never changes other cells' numbers, and any
//! single row can be reproduced from its metadata alone. Wall-clock
//! measurements live only in the `wall_time_seconds` column; everything else
//! is deterministic under a fixed master seed.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builders::{self, BuilderSpec, Method};
use crate::clustering::{kmeans, KMeansConfig};
use crate::data_io::{generate_synthetic, load_libsvm, LabeledDataset, ReportRecord, SyntheticSpec};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, ProjectionMatrix};
use crate::metrics::{
    clustering_accuracy, estimate_preservation_probability, relative_error, row_nnz_counts,
    separability_j,
};
use crate::seed;

/// Experiment family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Row-occupancy variance of the sparse constructions.
    Stability,
    /// Class separability of projected data.
    Separability,
    /// Mean relative norm error as the target dimension grows.
    RelErrorVsD,
    /// Preservation probability as the target dimension grows, fixed epsilon.
    PVsD,
    /// Preservation probability as epsilon grows, fixed target dimension.
    PVsEps,
    /// k-means accuracy and timing over a compression-factor sweep.
    Kmeans,
}

impl ExperimentKind {
    fn tag(self) -> u64 {
        match self {
            ExperimentKind::Stability => 10,
            ExperimentKind::Separability => 11,
            ExperimentKind::RelErrorVsD => 12,
            ExperimentKind::PVsD => 13,
            ExperimentKind::PVsEps => 14,
            ExperimentKind::Kmeans => 15,
        }
    }
}

/// Where the experiment's data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    File(std::path::PathBuf),
}

impl DataSource {
    /// Materializes the dataset, optionally min-max scaling features.
    pub fn load(&self, scale_features: bool) -> Result<LabeledDataset> {
        let mut data = match self {
            DataSource::Synthetic(spec) => generate_synthetic(spec)?,
            DataSource::File(path) => load_libsvm(path)?,
        };
        if scale_features {
            data.min_max_scale();
        }
        Ok(data)
    }
}

/// Full description of one experiment run. Field names match the CLI flags;
/// the same structure can be supplied as a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Source dimension for data-free experiments (stability).
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub d_sweep: Vec<usize>,
    /// Compression factors `d/n` in `(0, 1]` for the k-means experiment.
    #[serde(default)]
    pub compression_sweep: Vec<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_sweep: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub data: Option<DataSource>,
    /// k-means restarts per cell.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Min-max scale features after loading.
    #[serde(default)]
    pub scale_features: bool,
}

fn default_methods() -> Vec<Method> {
    vec![Method::SSse, Method::Se]
}

fn default_trials() -> usize {
    1000
}

fn default_replicates() -> usize {
    20
}

fn default_max_iters() -> usize {
    100
}

fn default_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            methods: default_methods(),
            n: None,
            d_sweep: Vec::new(),
            compression_sweep: Vec::new(),
            epsilon: None,
            epsilon_sweep: Vec::new(),
            trials: default_trials(),
            master_seed: 0,
            data: None,
            replicates: default_replicates(),
            max_iters: default_max_iters(),
            tol: default_tol(),
            scale_features: false,
        }
    }

    fn require_trials(&self) -> Result<usize> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be positive"));
        }
        Ok(self.trials)
    }

    fn cell_seed(&self, method_tag: u64, parts: &[u64]) -> u64 {
        let mut key = vec![self.master_seed, self.experiment.tag(), method_tag];
        key.extend_from_slice(parts);
        seed::derive(&key)
    }
}

/// Dispatches on `cfg.experiment`.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    match cfg.experiment {
        ExperimentKind::Stability => run_stability(cfg),
        ExperimentKind::Separability => run_separability(cfg),
        ExperimentKind::RelErrorVsD | ExperimentKind::PVsD | ExperimentKind::PVsEps => {
            run_distance_experiments(cfg)
        }
        ExperimentKind::Kmeans => run_kmeans_experiment(cfg),
    }
}

fn base_record(method: &str, n: usize, d: usize, seed_value: u64, trials: usize) -> ReportRecord {
    ReportRecord {
        method: method.to_string(),
        n,
        d,
        compression: d as f64 / n as f64,
        epsilon: None,
        metric: String::new(),
        value: 0.0,
        stderr: None,
        trials: trials as u64,
        seed: seed_value,
        wall_time_seconds: None,
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    (mean, (var / count).sqrt())
}

fn check_d_sweep(d_sweep: &[usize], n: usize) -> Result<()> {
    match d_sweep.iter().find(|&&d| d == 0 || d > n) {
        Some(&bad) => Err(Error::invalid(format!(
            "target dimension {bad} outside [1, {n}]"
        ))),
        None => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

/// Builds `trials` matrices per `(method, d)` cell and reports the per-build
/// row-count variance (mean and spread across builds) next to the closed
/// forms. Requires the two sparse constructions.
pub fn run_stability(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let n = cfg
        .n
        .ok_or_else(|| Error::invalid("stability needs the source dimension n"))?;
    if cfg.d_sweep.is_empty() {
        return Err(Error::invalid("stability needs a d sweep"));
    }
    check_d_sweep(&cfg.d_sweep, n)?;
    let trials = cfg.require_trials()?;
    for required in [Method::SSse, Method::Se] {
        if !cfg.methods.contains(&required) {
            return Err(Error::invalid(format!(
                "stability compares the sparse constructions; add method {required}"
            )));
        }
    }
    if cfg
        .methods
        .iter()
        .any(|m| !matches!(m, Method::SSse | Method::Se))
    {
        return Err(Error::invalid(
            "stability is defined for the sparse constructions only",
        ));
    }

    let mut records = Vec::new();
    for &d in &cfg.d_sweep {
        for &method in &cfg.methods {
            let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64]);
            let variances: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|t| -> Result<f64> {
                    let spec = BuilderSpec::new(method, n, d, seed::derive(&[cell, t]));
                    let matrix = match method {
                        Method::SSse => builders::build_s_sse(&spec)?,
                        Method::Se => builders::build_se(&spec)?,
                        _ => unreachable!("validated above"),
                    };
                    Ok(row_nnz_counts(&matrix).empirical_var)
                })
                .collect::<Result<_>>()?;

            let (mean_var, stderr) = mean_and_stderr(&variances);
            let stats_template = BuilderSpec::new(method, n, d, cell);
            let theoretical = {
                let probe = match method {
                    Method::SSse => builders::build_s_sse(&stats_template)?,
                    Method::Se => builders::build_se(&stats_template)?,
                    _ => unreachable!(),
                };
                let stats = row_nnz_counts(&probe);
                match method {
                    Method::SSse => stats.theo_var_balanced,
                    _ => stats.theo_var_with_replacement,
                }
            };

            let mut rec = base_record(&method.to_string(), n, d, cell, trials);
            rec.metric = "row_count_variance".into();
            rec.value = mean_var;
            rec.stderr = Some(stderr);
            records.push(rec.clone());

            rec.metric = "row_count_variance_theoretical".into();
            rec.value = theoretical;
            rec.stderr = None;
            records.push(rec.clone());

            rec.metric = "row_count_mean".into();
            rec.value = n as f64 / d as f64;
            records.push(rec);
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Separability
// ---------------------------------------------------------------------------

/// Projects the labeled dataset `trials` times per `(method, d)` cell and
/// reports the mean and variance of the separability ratio, plus an
/// unprojected baseline row. Degenerate cells are recorded and skipped.
pub fn run_separability(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let source = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::invalid("separability needs a data source"))?;
    let data = source.load(cfg.scale_features)?;
    if data.class_count < 2 {
        return Err(Error::invalid("separability needs at least 2 classes"));
    }
    if cfg.d_sweep.is_empty() {
        return Err(Error::invalid("separability needs a d sweep"));
    }
    let trials = cfg.require_trials()?;
    let n = data.n_features();
    check_d_sweep(&cfg.d_sweep, n)?;

    let mut records = Vec::new();

    // baseline: unprojected data
    let baseline = separability_j(&data)?;
    let mut rec = base_record("none", n, n, cfg.master_seed, 1);
    rec.metric = "separability_j".into();
    rec.value = baseline;
    records.push(rec);

    for &d in &cfg.d_sweep {
        for &method in &cfg.methods {
            let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64]);
            let outcomes: Vec<Option<f64>> = (0..trials as u64)
                .into_par_iter()
                .map(|t| -> Result<Option<f64>> {
                    let spec = BuilderSpec::new(method, n, d, seed::derive(&[cell, t]));
                    let matrix = builders::build(&spec)?;
                    let projected = matrix.apply(&data.features)?;
                    let projected_set = LabeledDataset::new(projected, data.labels.clone())?;
                    match separability_j(&projected_set) {
                        Ok(j) => Ok(Some(j)),
                        Err(Error::DegenerateSeparability) => Ok(None),
                        Err(other) => Err(other),
                    }
                })
                .collect::<Result<_>>()?;

            let values: Vec<f64> = outcomes.iter().filter_map(|v| *v).collect();
            let degenerate = outcomes.len() - values.len();

            if !values.is_empty() {
                let count = values.len() as f64;
                let mean = values.iter().sum::<f64>() / count;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;

                let mut rec = base_record(&method.to_string(), n, d, cell, values.len());
                rec.metric = "separability_j_mean".into();
                rec.value = mean;
                rec.stderr = Some((var / count).sqrt());
                records.push(rec.clone());

                rec.metric = "separability_j_var".into();
                rec.value = var;
                rec.stderr = None;
                records.push(rec);
            }
            if degenerate > 0 {
                let mut rec = base_record(&method.to_string(), n, d, cell, trials);
                rec.metric = "separability_degenerate_trials".into();
                rec.value = degenerate as f64;
                records.push(rec);
            }
        }
    }
    Ok(records)
}

// ---------------------------------------------------------------------------
// Distance preservation
// ---------------------------------------------------------------------------

/// Mean relative error per `(method, d)`, or preservation probability per
/// `(method, d)` at fixed epsilon, or per `(method, epsilon)` at fixed `d`,
/// depending on `cfg.experiment`.
pub fn run_distance_experiments(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let source = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::invalid("distance experiments need a data source"))?;
    let data = source.load(cfg.scale_features)?;
    let vectors = &data.features;
    let n = vectors.n_cols();
    let trials = cfg.require_trials()?;
    check_d_sweep(&cfg.d_sweep, n)?;

    let mut records = Vec::new();
    match cfg.experiment {
        ExperimentKind::RelErrorVsD => {
            if cfg.d_sweep.is_empty() {
                return Err(Error::invalid("rel-error-vs-d needs a d sweep"));
            }
            for &d in &cfg.d_sweep {
                for &method in &cfg.methods {
                    let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64]);
                    let errors: Vec<f64> = (0..trials as u64)
                        .into_par_iter()
                        .map(|t| -> Result<f64> {
                            let spec = BuilderSpec::new(
                                method,
                                n,
                                d,
                                seed::derive(&[cell, seed::STREAM_TRIAL_BUILD, t]),
                            );
                            let matrix = builders::build(&spec)?;
                            let row = pick_row(vectors.n_rows(), cell, t);
                            relative_error(vectors.row(row), &matrix)
                        })
                        .collect::<Result<_>>()?;
                    let (mean, stderr) = mean_and_stderr(&errors);
                    let mut rec = base_record(&method.to_string(), n, d, cell, trials);
                    rec.metric = "relative_error_mean".into();
                    rec.value = mean;
                    rec.stderr = Some(stderr);
                    records.push(rec);
                }
            }
        }
        ExperimentKind::PVsD => {
            let epsilon = cfg
                .epsilon
                .ok_or_else(|| Error::invalid("p-vs-d needs a fixed epsilon"))?;
            if cfg.d_sweep.is_empty() {
                return Err(Error::invalid("p-vs-d needs a d sweep"));
            }
            for &d in &cfg.d_sweep {
                for &method in &cfg.methods {
                    let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64, epsilon.to_bits()]);
                    let template = BuilderSpec::new(method, n, d, cell);
                    let est =
                        estimate_preservation_probability(vectors, &template, epsilon, trials)?;
                    records.extend(preservation_records(&method, n, d, cell, epsilon, &est));
                }
            }
        }
        ExperimentKind::PVsEps => {
            if cfg.d_sweep.len() != 1 {
                return Err(Error::invalid("p-vs-eps needs exactly one d value"));
            }
            if cfg.epsilon_sweep.is_empty() {
                return Err(Error::invalid("p-vs-eps needs an epsilon sweep"));
            }
            let d = cfg.d_sweep[0];
            for &epsilon in &cfg.epsilon_sweep {
                for &method in &cfg.methods {
                    let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64, epsilon.to_bits()]);
                    let template = BuilderSpec::new(method, n, d, cell);
                    let est =
                        estimate_preservation_probability(vectors, &template, epsilon, trials)?;
                    records.extend(preservation_records(&method, n, d, cell, epsilon, &est));
                }
            }
        }
        other => {
            return Err(Error::invalid(format!(
                "not a distance experiment: {other:?}"
            )))
        }
    }
    Ok(records)
}

fn pick_row(rows: usize, cell: u64, trial: u64) -> usize {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed::derive(&[
        cell,
        seed::STREAM_TRIAL_PICK,
        trial,
    ]));
    rng.random_range(0..rows as u64) as usize
}

fn preservation_records(
    method: &Method,
    n: usize,
    d: usize,
    cell: u64,
    epsilon: f64,
    est: &crate::metrics::PreservationEstimate,
) -> Vec<ReportRecord> {
    let mut rec = base_record(&method.to_string(), n, d, cell, est.trials);
    rec.epsilon = Some(epsilon);
    rec.metric = "preservation_probability".into();
    rec.value = est.p_hat;
    rec.stderr = Some(est.standard_error());
    let mut err_rec = rec.clone();
    err_rec.metric = "relative_error_mean".into();
    err_rec.value = est.mean_rel_error;
    err_rec.stderr = None;
    vec![rec, err_rec]
}

// ---------------------------------------------------------------------------
// k-means pipeline
// ---------------------------------------------------------------------------

/// For each compression factor and method: builds the projection (timed),
/// projects the data (timed), clusters with seeded replicated k-means and
/// scores accuracy against the labels. The unprojected baseline shares the
/// same k-means seed, so factor 1 with the balanced construction reproduces
/// it exactly. Cell failures become `cell_failed` rows and the sweep
/// continues.
pub fn run_kmeans_experiment(cfg: &ExperimentConfig) -> Result<Vec<ReportRecord>> {
    let source = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::invalid("kmeans experiment needs a data source"))?;
    let data = source.load(cfg.scale_features)?;
    let n = data.n_features();
    if cfg.compression_sweep.is_empty() {
        return Err(Error::invalid("kmeans experiment needs compression factors"));
    }
    for &f in &cfg.compression_sweep {
        if !(f.is_finite() && f > 0.0 && f <= 1.0) {
            return Err(Error::invalid(format!(
                "compression factors must lie in (0, 1], got {f}"
            )));
        }
    }

    // one k-means seed shared by the baseline and every cell
    let kmeans_seed = seed::derive(&[cfg.master_seed, ExperimentKind::Kmeans.tag()]);
    let kmeans_cfg = KMeansConfig {
        k: data.class_count,
        replicates: cfg.replicates,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        seed: kmeans_seed,
    };

    let mut records = Vec::new();

    let started = Instant::now();
    let baseline = kmeans(&data.features, &kmeans_cfg)?;
    let baseline_secs = started.elapsed().as_secs_f64();
    let accuracy = clustering_accuracy(&baseline.assignments, &data.labels)?;
    let mut rec = base_record("none", n, n, kmeans_seed, 1);
    rec.metric = "clustering_accuracy".into();
    rec.value = accuracy;
    rec.wall_time_seconds = Some(baseline_secs);
    records.push(rec);

    for &factor in &cfg.compression_sweep {
        let d = ((factor * n as f64).round() as usize).clamp(1, n);
        for &method in &cfg.methods {
            let cell = cfg.cell_seed(method.tag(), &[n as u64, d as u64]);
            match run_kmeans_cell(&data, method, n, d, cell, &kmeans_cfg) {
                Ok(cell_records) => records.extend(cell_records),
                Err(err) => {
                    // record and continue the sweep
                    let mut rec = base_record(&method.to_string(), n, d, cell, 1);
                    rec.metric = "cell_failed".into();
                    rec.value = 1.0;
                    records.push(rec);
                    eprintln!("kmeans cell (method {method}, d {d}) failed: {err}");
                }
            }
        }
    }
    Ok(records)
}

fn run_kmeans_cell(
    data: &LabeledDataset,
    method: Method,
    n: usize,
    d: usize,
    cell: u64,
    kmeans_cfg: &KMeansConfig,
) -> Result<Vec<ReportRecord>> {
    let spec = BuilderSpec::new(method, n, d, seed::derive(&[cell, 0]));

    // warm-up build and projection, excluded from the timings
    let warm = builders::build(&spec)?;
    let _ = warm.apply(&data.features)?;

    let started = Instant::now();
    let matrix = builders::build(&spec)?;
    let build_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let projected = matrix.apply(&data.features)?;
    let project_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let result = kmeans(&projected, kmeans_cfg)?;
    let kmeans_secs = started.elapsed().as_secs_f64();
    let accuracy = clustering_accuracy(&result.assignments, &data.labels)?;

    let mut out = Vec::with_capacity(3);
    let mut rec = base_record(&method.to_string(), n, d, cell, 1);
    rec.metric = "clustering_accuracy".into();
    rec.value = accuracy;
    rec.wall_time_seconds = Some(kmeans_secs);
    out.push(rec.clone());

    rec.metric = "build_nnz".into();
    rec.value = matrix.nnz() as f64;
    rec.wall_time_seconds = Some(build_secs);
    out.push(rec.clone());

    rec.metric = "projection_cells".into();
    rec.value = (projected.n_rows() * projected.n_cols()) as f64;
    rec.wall_time_seconds = Some(project_secs);
    out.push(rec);
    Ok(out)
}

/// Projects a dataset once with a given method, preserving labels. Used by
/// the CLI `project` subcommand.
pub fn project_dataset(
    data: &LabeledDataset,
    method: Method,
    d: usize,
    kappa: Option<f64>,
    seed_value: u64,
) -> Result<(LabeledDataset, ProjectionMatrix)> {
    let mut spec = BuilderSpec::new(method, data.n_features(), d, seed_value);
    spec.kappa = kappa;
    let matrix = builders::build(&spec)?;
    let projected = matrix.apply(&data.features)?;
    Ok((
        LabeledDataset::new(projected, data.labels.clone())?,
        matrix,
    ))
}

/// Builds the evaluation matrix for distance experiments directly from a
/// dense matrix (no labels needed).
pub fn unlabeled(features: DenseMatrix) -> Result<LabeledDataset> {
    let rows = features.n_rows();
    LabeledDataset::new(features, vec![0; rows])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stability_cfg(n: usize, d: usize, trials: usize, seed_value: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Stability);
        cfg.n = Some(n);
        cfg.d_sweep = vec![d];
        cfg.trials = trials;
        cfg.master_seed = seed_value;
        cfg
    }

    #[test]
    fn stability_balanced_variance_is_closed_form() {
        let records = run_stability(&stability_cfg(78, 20, 200, 7)).unwrap();
        let ssse_var: Vec<&ReportRecord> = records
            .iter()
            .filter(|r| r.method == "s-sse" && r.metric.starts_with("row_count_variance"))
            .collect();
        assert_eq!(ssse_var.len(), 2);
        for r in ssse_var {
            assert!((r.value - 0.09).abs() < 1e-12, "{}: {}", r.metric, r.value);
        }
        let se_mean = records
            .iter()
            .find(|r| r.method == "se" && r.metric == "row_count_variance")
            .unwrap();
        assert!((se_mean.value - 3.705).abs() < 0.15 * 3.705);
    }

    #[test]
    fn stability_d1_has_zero_variance() {
        let records = run_stability(&stability_cfg(13, 1, 50, 3)).unwrap();
        for r in records
            .iter()
            .filter(|r| r.metric.starts_with("row_count_variance"))
        {
            assert_eq!(r.value, 0.0, "{} {}", r.method, r.metric);
        }
    }

    #[test]
    fn stability_half_remainder_hits_max_variance() {
        // q = d/2 maximizes the balanced closed form at 1/4
        let records = run_stability(&stability_cfg(30, 4, 50, 11)).unwrap();
        let r = records
            .iter()
            .find(|r| r.method == "s-sse" && r.metric == "row_count_variance")
            .unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn stability_rejects_dense_methods_and_missing_pair() {
        let mut cfg = stability_cfg(20, 4, 10, 0);
        cfg.methods = vec![Method::SSse];
        assert!(run_stability(&cfg).is_err());
        cfg.methods = vec![Method::SSse, Method::Se, Method::De];
        assert!(run_stability(&cfg).is_err());
    }

    #[test]
    fn sweeps_reject_out_of_range_dimensions() {
        assert!(run_stability(&stability_cfg(20, 21, 10, 0)).is_err());
        assert!(run_stability(&stability_cfg(20, 0, 10, 0)).is_err());
        let mut cfg = gaussian_cfg(ExperimentKind::Separability);
        cfg.d_sweep = vec![41]; // data has 40 features
        cfg.trials = 5;
        assert!(run_separability(&cfg).is_err());
    }

    fn gaussian_cfg(kind: ExperimentKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.data = Some(DataSource::Synthetic(SyntheticSpec::gaussian_classes(
            200,
            40,
            vec![0.0, 2.0, 4.0, 6.0],
            0.5,
            5,
        )));
        cfg
    }

    #[test]
    fn separability_baseline_and_cells_present() {
        let mut cfg = gaussian_cfg(ExperimentKind::Separability);
        cfg.d_sweep = vec![10, 40];
        cfg.trials = 30;
        let records = run_separability(&cfg).unwrap();
        assert!(records.iter().any(|r| r.method == "none"));
        // full-dimension balanced projection is a signed permutation, so the
        // mean matches the baseline and the spread collapses
        let baseline = records.iter().find(|r| r.method == "none").unwrap().value;
        let full = records
            .iter()
            .find(|r| r.method == "s-sse" && r.d == 40 && r.metric == "separability_j_mean")
            .unwrap();
        assert!((full.value - baseline).abs() < 1e-9 * baseline.abs());
        let var = records
            .iter()
            .find(|r| r.method == "s-sse" && r.d == 40 && r.metric == "separability_j_var")
            .unwrap();
        assert!(var.value < 1e-18);
    }

    #[test]
    fn degenerate_projection_trials_become_failure_rows() {
        // both classes deviate along (1,1); a d=1 sparse projection with
        // opposite column signs collapses every within-class deviation, so
        // roughly half the trials are degenerate and must be recorded while
        // the rest still produce a mean row
        let rows = vec![
            vec![1.0, 1.0],
            vec![-1.0, -1.0],
            vec![5.0, 5.0],
            vec![3.0, 3.0],
        ];
        let features = DenseMatrix::from_rows(&rows).unwrap();
        let data = LabeledDataset::new(features, vec![0, 0, 1, 1]).unwrap();
        let dir = tempfile_dir();
        let path = dir.join("degenerate.libsvm");
        {
            let file = std::fs::File::create(&path).unwrap();
            crate::data_io::write_libsvm(&data, file).unwrap();
        }

        let mut cfg = ExperimentConfig::new(ExperimentKind::Separability);
        cfg.data = Some(DataSource::File(path));
        cfg.d_sweep = vec![1];
        cfg.trials = 40;
        cfg.master_seed = 9;
        cfg.methods = vec![Method::Se];
        let records = run_separability(&cfg).unwrap();
        let degenerate = records
            .iter()
            .find(|r| r.metric == "separability_degenerate_trials")
            .expect("degenerate trials recorded");
        assert!(degenerate.value > 0.0);
        let mean_row = records
            .iter()
            .find(|r| r.method == "se" && r.metric == "separability_j_mean")
            .expect("surviving trials still aggregated");
        assert!(mean_row.trials < 40);
        std::fs::remove_dir_all(dir).ok();
    }

    fn tempfile_dir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "sparseproj-test-{}-{:x}",
            std::process::id(),
            seed::derive(&[line!() as u64])
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn rel_error_vs_d_decreases() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RelErrorVsD);
        cfg.data = Some(DataSource::Synthetic(SyntheticSpec::uniform01(50, 400, 2)));
        cfg.d_sweep = vec![20, 200];
        cfg.trials = 100;
        let records = run_distance_experiments(&cfg).unwrap();
        let err_at = |method: &str, d: usize| {
            records
                .iter()
                .find(|r| r.method == method && r.d == d && r.metric == "relative_error_mean")
                .unwrap()
                .value
        };
        assert!(err_at("s-sse", 200) < err_at("s-sse", 20));
        assert!(err_at("se", 200) < err_at("se", 20));
    }

    #[test]
    fn p_vs_eps_rises_to_one() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::PVsEps);
        cfg.data = Some(DataSource::Synthetic(SyntheticSpec::uniform01(40, 200, 3)));
        cfg.d_sweep = vec![80];
        cfg.epsilon_sweep = vec![0.05, 0.5];
        cfg.trials = 400;
        let records = run_distance_experiments(&cfg).unwrap();
        let p_at = |eps: f64| {
            records
                .iter()
                .find(|r| {
                    r.method == "s-sse"
                        && r.metric == "preservation_probability"
                        && r.epsilon == Some(eps)
                })
                .unwrap()
                .value
        };
        assert!(p_at(0.5) >= p_at(0.05));
        assert!(p_at(0.5) > 0.99);
    }

    #[test]
    fn kmeans_factor_one_matches_baseline_exactly() {
        let mut cfg = gaussian_cfg(ExperimentKind::Kmeans);
        cfg.compression_sweep = vec![0.5, 1.0];
        cfg.replicates = 5;
        let records = run_kmeans_experiment(&cfg).unwrap();
        let baseline = records
            .iter()
            .find(|r| r.method == "none" && r.metric == "clustering_accuracy")
            .unwrap()
            .value;
        let full = records
            .iter()
            .find(|r| {
                r.method == "s-sse" && r.d == 40 && r.metric == "clustering_accuracy"
            })
            .unwrap()
            .value;
        assert_eq!(baseline, full);
        // every accuracy lies in [0,1] and each cell carries three rows
        for r in records.iter().filter(|r| r.metric == "clustering_accuracy") {
            assert!((0.0..=1.0).contains(&r.value));
        }
        let ssse_rows = records
            .iter()
            .filter(|r| r.method == "s-sse" && r.d == 20)
            .count();
        assert_eq!(ssse_rows, 3);
    }

    #[test]
    fn adding_a_method_never_changes_other_cells() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::RelErrorVsD);
        cfg.data = Some(DataSource::Synthetic(SyntheticSpec::uniform01(30, 80, 1)));
        cfg.d_sweep = vec![8, 40];
        cfg.trials = 50;
        cfg.master_seed = 77;
        cfg.methods = vec![Method::SSse];
        let narrow = run_distance_experiments(&cfg).unwrap();
        cfg.methods = vec![Method::SSse, Method::Se, Method::De];
        let wide = run_distance_experiments(&cfg).unwrap();
        for record in &narrow {
            assert!(
                wide.iter().any(|r| r == record),
                "cell {}/{} changed when methods were added",
                record.method,
                record.d
            );
        }
    }

    #[test]
    fn identical_configs_give_identical_records_modulo_wall_time() {
        let mut cfg = gaussian_cfg(ExperimentKind::Separability);
        cfg.d_sweep = vec![8, 16];
        cfg.trials = 20;
        let strip = |mut records: Vec<ReportRecord>| {
            for r in &mut records {
                r.wall_time_seconds = None;
            }
            records
        };
        let a = strip(run_separability(&cfg).unwrap());
        let b = strip(run_separability(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn kmeans_rejects_bad_factors() {
        let mut cfg = gaussian_cfg(ExperimentKind::Kmeans);
        cfg.compression_sweep = vec![0.0];
        assert!(run_kmeans_experiment(&cfg).is_err());
        cfg.compression_sweep = vec![1.5];
        assert!(run_kmeans_experiment(&cfg).is_err());
    }
}
