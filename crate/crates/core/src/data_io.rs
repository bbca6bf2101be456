//! Dataset ingestion (LIBSVM text format), synthetic data generation, and
//! experiment-report serialization (CSV and JSON).

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::seed::{self, STREAM_DATA_ROW};

/// Dense feature matrix plus contiguous integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DenseMatrix,
    /// One label per sample, in `[0, class_count)`.
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl LabeledDataset {
    /// Validates label shape and contiguity (every id in `0..class_count`
    /// must occur at least once).
    pub fn new(features: DenseMatrix, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::ShapeMismatch {
                context: "LabeledDataset labels",
                expected: features.n_rows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::invalid("dataset must contain at least one sample"));
        }
        let class_count = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut seen = vec![false; class_count];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::invalid("class ids must be contiguous from 0"));
        }
        Ok(Self {
            features,
            labels,
            class_count,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Optional per-feature min-max scaling to `[0, 1]`; constant features
    /// become zero. Off by default everywhere.
    pub fn min_max_scale(&mut self) {
        let m = self.features.n_rows();
        let n = self.features.n_cols();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for i in 0..m {
            for (j, &v) in self.features.row(i).iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        for i in 0..m {
            let row = self.features.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                let span = hi[j] - lo[j];
                *v = if span > 0.0 { (*v - lo[j]) / span } else { 0.0 };
            }
        }
    }
}

// ---------------------------------------------------------------------------
// LIBSVM text format
// ---------------------------------------------------------------------------

/// Parses LIBSVM text: one sample per line, `label index:value ...` with
/// 1-based strictly ascending indices. The feature count is the maximum
/// index seen; unseen entries are zero. Labels are remapped to `0..c-1`
/// preserving their sorted original order.
pub fn parse_libsvm<R: Read>(reader: R) -> Result<LabeledDataset> {
    parse_libsvm_with_dim(reader, None)
}

/// [`parse_libsvm`] with a declared feature count that overrides the
/// maximum index seen (it must not be smaller).
pub fn parse_libsvm_with_dim<R: Read>(
    reader: R,
    declared_dim: Option<usize>,
) -> Result<LabeledDataset> {
    let reader = BufReader::new(reader);
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        let mut tokens = line.split_whitespace();
        let label_token = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, "empty line"))?;
        let label: f64 = label_token
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad label '{label_token}'")))?;
        if !label.is_finite() {
            return Err(Error::parse(line_no, "label must be finite"));
        }

        let mut entries: Vec<(usize, f64)> = Vec::new();
        let mut prev_index = 0usize;
        for token in tokens {
            let (idx_str, val_str) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("bad token '{token}'")))?;
            let index: usize = idx_str
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad index '{idx_str}'")))?;
            if index == 0 {
                return Err(Error::parse(line_no, "indices are 1-based; found 0"));
            }
            if index == prev_index {
                return Err(Error::parse(line_no, format!("duplicate index {index}")));
            }
            if index < prev_index {
                return Err(Error::parse(
                    line_no,
                    format!("non-ascending index {index} after {prev_index}"),
                ));
            }
            let value: f64 = val_str
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad value '{val_str}'")))?;
            if !value.is_finite() {
                return Err(Error::parse(line_no, "feature values must be finite"));
            }
            prev_index = index;
            entries.push((index, value));
        }
        max_index = max_index.max(prev_index);
        raw_labels.push(label);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::parse(1, "empty input"));
    }
    let n = match declared_dim {
        Some(dim) if dim < max_index => {
            return Err(Error::invalid(format!(
                "declared dimension {dim} is smaller than max index {max_index}"
            )))
        }
        Some(dim) => dim,
        None => max_index,
    };
    if n == 0 {
        return Err(Error::parse(1, "no feature indices present"));
    }

    let mut values = vec![0.0; rows.len() * n];
    for (i, entries) in rows.iter().enumerate() {
        for &(index, value) in entries {
            values[i * n + (index - 1)] = value;
        }
    }
    let features = DenseMatrix::from_vec(rows.len(), n, values)?;

    // remap labels to 0..c-1 by sorted original value
    let mut uniq = raw_labels.clone();
    uniq.sort_by(|a, b| a.partial_cmp(b).expect("labels are finite"));
    uniq.dedup();
    let labels = raw_labels
        .iter()
        .map(|l| {
            uniq.binary_search_by(|probe| probe.partial_cmp(l).expect("labels are finite"))
                .expect("label present")
        })
        .collect();

    LabeledDataset::new(features, labels)
}

/// Reads a LIBSVM file from disk.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path)?;
    parse_libsvm(file)
}

/// Writes a dataset in LIBSVM text form: remapped labels, nonzero entries
/// only, 1-based ascending indices. When no sample has a nonzero in the last
/// column, an explicit `n:0` entry is added to the first line so the feature
/// count survives a round trip.
pub fn write_libsvm<W: Write>(dataset: &LabeledDataset, mut writer: W) -> Result<()> {
    let n = dataset.n_features();
    let width_pinned = (0..dataset.n_samples()).any(|i| dataset.features.get(i, n - 1) != 0.0);
    for i in 0..dataset.n_samples() {
        let mut line = String::new();
        write!(line, "{}", dataset.labels[i]).expect("string write");
        for (j, &v) in dataset.features.row(i).iter().enumerate() {
            if v != 0.0 {
                write!(line, " {}:{}", j + 1, v).expect("string write");
            }
        }
        if i == 0 && !width_pinned {
            write!(line, " {n}:0").expect("string write");
        }
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Synthetic dataset family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticKind {
    /// i.i.d. uniform `[0, 1)` entries, single dummy class.
    Uniform01,
    /// i.i.d. standard normal entries, single dummy class.
    StdNormal,
    /// Equal-split classes with feature mean `class_means[i]` and shared
    /// standard deviation `class_std`.
    GaussianClasses,
}

/// Recipe for a synthetic dataset. Generation is per-row seeded, so output
/// is identical no matter how rows are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub m: usize,
    pub n: usize,
    #[serde(default)]
    pub class_means: Vec<f64>,
    /// Per-feature standard deviation for [`SyntheticKind::GaussianClasses`].
    #[serde(default = "default_class_std")]
    pub class_std: f64,
    pub seed: u64,
}

fn default_class_std() -> f64 {
    1.0
}

impl SyntheticSpec {
    pub fn uniform01(m: usize, n: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::Uniform01,
            m,
            n,
            class_means: Vec::new(),
            class_std: default_class_std(),
            seed,
        }
    }

    pub fn std_normal(m: usize, n: usize, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::StdNormal,
            m,
            n,
            class_means: Vec::new(),
            class_std: default_class_std(),
            seed,
        }
    }

    pub fn gaussian_classes(m: usize, n: usize, means: Vec<f64>, std: f64, seed: u64) -> Self {
        Self {
            kind: SyntheticKind::GaussianClasses,
            m,
            n,
            class_means: means,
            class_std: std,
            seed,
        }
    }
}

/// Generates a dataset from a spec. Rows are split across classes as evenly
/// as possible (earlier classes take the remainder).
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::invalid("dataset dimensions must be positive"));
    }
    let class_of_row: Box<dyn Fn(usize) -> usize> = match spec.kind {
        SyntheticKind::Uniform01 | SyntheticKind::StdNormal => Box::new(|_| 0),
        SyntheticKind::GaussianClasses => {
            let classes = spec.class_means.len();
            if classes == 0 {
                return Err(Error::invalid("class_means must be nonempty"));
            }
            if spec.class_means.iter().any(|m| !m.is_finite()) {
                return Err(Error::invalid("class means must be finite"));
            }
            if !(spec.class_std.is_finite() && spec.class_std > 0.0) {
                return Err(Error::invalid("class_std must be positive"));
            }
            if spec.m < classes {
                return Err(Error::invalid("need at least one sample per class"));
            }
            let base = spec.m / classes;
            let rem = spec.m % classes;
            let cut = rem * (base + 1);
            Box::new(move |i| {
                if i < cut {
                    i / (base + 1)
                } else {
                    rem + (i - cut) / base
                }
            })
        }
    };

    let normals: Vec<Normal<f64>> = if spec.kind == SyntheticKind::GaussianClasses {
        spec.class_means
            .iter()
            .map(|&mu| Normal::new(mu, spec.class_std).expect("validated std"))
            .collect()
    } else {
        Vec::new()
    };

    let mut values = Vec::with_capacity(spec.m * spec.n);
    let mut labels = Vec::with_capacity(spec.m);
    for i in 0..spec.m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(&[
            spec.seed,
            STREAM_DATA_ROW,
            i as u64,
        ]));
        let class = class_of_row(i);
        labels.push(class);
        match spec.kind {
            SyntheticKind::Uniform01 => {
                values.extend((0..spec.n).map(|_| rng.random::<f64>()));
            }
            SyntheticKind::StdNormal => {
                values.extend((0..spec.n).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
            }
            SyntheticKind::GaussianClasses => {
                let normal = &normals[class];
                values.extend((0..spec.n).map(|_| normal.sample(&mut rng)));
            }
        }
    }
    LabeledDataset::new(DenseMatrix::from_vec(spec.m, spec.n, values)?, labels)
}

// ---------------------------------------------------------------------------
// Experiment reports
// ---------------------------------------------------------------------------

/// One measurement in an experiment report. Wall times live only in
/// `wall_time_seconds`; every other field is deterministic under a fixed
/// seed, so reports can be byte-compared with that column dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub method: String,
    pub n: usize,
    pub d: usize,
    /// `d / n`.
    pub compression: f64,
    pub epsilon: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub trials: u64,
    pub seed: u64,
    pub wall_time_seconds: Option<f64>,
}

/// Report serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

pub const REPORT_HEADER: &str =
    "method,n,d,compression,epsilon,metric,value,stderr,trials,seed,wall_time_seconds";

/// Formats a float with 17 significant digits so it parses back exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("record field {name} is not finite")))
    }
}

fn validate_record(record: &ReportRecord) -> Result<()> {
    check_finite("value", record.value)?;
    check_finite("compression", record.compression)?;
    if let Some(e) = record.epsilon {
        check_finite("epsilon", e)?;
    }
    if let Some(s) = record.stderr {
        check_finite("stderr", s)?;
    }
    if let Some(w) = record.wall_time_seconds {
        check_finite("wall_time_seconds", w)?;
    }
    Ok(())
}

fn sort_records(records: &[ReportRecord]) -> Vec<&ReportRecord> {
    let mut sorted: Vec<&ReportRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.method.as_str(), a.d, a.epsilon.unwrap_or(f64::NEG_INFINITY))
            .partial_cmp(&(b.method.as_str(), b.d, b.epsilon.unwrap_or(f64::NEG_INFINITY)))
            .expect("finite keys")
            .then_with(|| a.metric.cmp(&b.metric))
            .then(a.n.cmp(&b.n))
    });
    sorted
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn json_escape(field: &str) -> String {
    let mut out = String::with_capacity(field.len() + 2);
    for ch in field.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                write!(out, "\\u{:04x}", c as u32).expect("string write");
            }
            c => out.push(c),
        }
    }
    out
}

/// Serializes records sorted by `(method, d, epsilon)`. CSV carries a header
/// row and RFC 4180 quoting; JSON is an array of flat objects. Floats are
/// written with 17 significant digits (round-trippable); wall times with
/// microsecond resolution.
pub fn write_report<W: Write>(
    records: &[ReportRecord],
    format: ReportFormat,
    mut writer: W,
) -> Result<()> {
    for record in records {
        validate_record(record)?;
    }
    let sorted = sort_records(records);
    match format {
        ReportFormat::Csv => {
            writeln!(writer, "{REPORT_HEADER}")?;
            for r in sorted {
                writeln!(
                    writer,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    csv_escape(&r.method),
                    r.n,
                    r.d,
                    fmt_f64(r.compression),
                    r.epsilon.map(fmt_f64).unwrap_or_default(),
                    csv_escape(&r.metric),
                    fmt_f64(r.value),
                    r.stderr.map(fmt_f64).unwrap_or_default(),
                    r.trials,
                    r.seed,
                    r.wall_time_seconds
                        .map(|w| format!("{w:.6}"))
                        .unwrap_or_default(),
                )?;
            }
        }
        ReportFormat::Json => {
            writeln!(writer, "[")?;
            for (i, r) in sorted.iter().enumerate() {
                let eps = r.epsilon.map(fmt_f64).unwrap_or_else(|| "null".into());
                let stderr = r.stderr.map(fmt_f64).unwrap_or_else(|| "null".into());
                let wall = r
                    .wall_time_seconds
                    .map(|w| format!("{w:.6}"))
                    .unwrap_or_else(|| "null".into());
                let comma = if i + 1 == sorted.len() { "" } else { "," };
                writeln!(
                    writer,
                    "  {{\"method\":\"{}\",\"n\":{},\"d\":{},\"compression\":{},\"epsilon\":{},\"metric\":\"{}\",\"value\":{},\"stderr\":{},\"trials\":{},\"seed\":{},\"wall_time_seconds\":{}}}{}",
                    json_escape(&r.method),
                    r.n,
                    r.d,
                    fmt_f64(r.compression),
                    eps,
                    json_escape(&r.metric),
                    fmt_f64(r.value),
                    stderr,
                    r.trials,
                    r.seed,
                    wall,
                    comma,
                )?;
            }
            writeln!(writer, "]")?;
        }
    }
    Ok(())
}

/// Parses a CSV report written by [`write_report`].
pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRecord>> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty report"))?
        .1?;
    if header.trim_end() != REPORT_HEADER {
        return Err(Error::parse(1, "unexpected report header"));
    }
    let mut records = Vec::new();
    for (line_no, line) in lines {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_csv_line(&line, line_no)?;
        if fields.len() != 11 {
            return Err(Error::parse(
                line_no,
                format!("expected 11 fields, found {}", fields.len()),
            ));
        }
        let parse_f64 = |s: &str, name: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(line_no, format!("bad {name} '{s}'")))
        };
        let opt_f64 = |s: &str, name: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, name).map(Some)
            }
        };
        records.push(ReportRecord {
            method: fields[0].clone(),
            n: fields[1]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad n"))?,
            d: fields[2]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad d"))?,
            compression: parse_f64(&fields[3], "compression")?,
            epsilon: opt_f64(&fields[4], "epsilon")?,
            metric: fields[5].clone(),
            value: parse_f64(&fields[6], "value")?,
            stderr: opt_f64(&fields[7], "stderr")?,
            trials: fields[8]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad trials"))?,
            seed: fields[9]
                .parse()
                .map_err(|_| Error::parse(line_no, "bad seed"))?,
            wall_time_seconds: opt_f64(&fields[10], "wall_time_seconds")?,
        });
    }
    Ok(records)
}

fn split_csv_line(line: &str, line_no: usize) -> Result<Vec<String>> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut chars = line.trim_end_matches(['\r', '\n']).chars().peekable();
    let mut quoted = false;
    while let Some(ch) = chars.next() {
        if quoted {
            match ch {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    current.push('"');
                }
                '"' => quoted = false,
                c => current.push(c),
            }
        } else {
            match ch {
                '"' if current.is_empty() => quoted = true,
                ',' => fields.push(std::mem::take(&mut current)),
                c => current.push(c),
            }
        }
    }
    if quoted {
        return Err(Error::parse(line_no, "unterminated quoted field"));
    }
    fields.push(current);
    Ok(fields)
}
