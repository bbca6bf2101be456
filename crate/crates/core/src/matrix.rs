//! Dense sample matrices, one-nonzero-per-column sparse projections, and the
//! projection kernels.
//!
//! A [`SparseProjection`] stores one `(row, sign)` pair per column, so the
//! one-nonzero-per-column structure is guaranteed by construction and the
//! projection kernel is a single pass over the input entries: `O(nnz(X))`
//! additions and subtractions, no multiplications besides the optional final
//! scale.

use crate::error::{Error, Result};

/// Row-major `m x n` matrix of finite `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from a row-major buffer, validating shape and finiteness.
    pub fn from_vec(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::ShapeMismatch {
                context: "DenseMatrix::from_vec",
                expected: n_rows * n_cols,
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::ShapeMismatch {
                    context: "DenseMatrix::from_rows",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_vec(n_rows, n_cols, values)
    }

    /// All-zero matrix. Used internally for projection outputs.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.values[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterator over row slices.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols.max(1))
    }
}

/// `d x n` projection with exactly one `+1`/`-1` entry per column.
///
/// Column `j` holds `sign[j]` in row `target_row[j]`; the effective matrix is
/// `scale` times that sign pattern, with `scale` applied once per output
/// entry at projection time.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    rows: usize,
    cols: usize,
    target_row: Vec<usize>,
    sign: Vec<i8>,
    scale: f64,
}

impl SparseProjection {
    /// Validates the one-nonzero-per-column invariants and builds the projection.
    pub fn new(
        rows: usize,
        cols: usize,
        target_row: Vec<usize>,
        sign: Vec<i8>,
        scale: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        if target_row.len() != cols {
            return Err(Error::ShapeMismatch {
                context: "SparseProjection target_row",
                expected: cols,
                found: target_row.len(),
            });
        }
        if sign.len() != cols {
            return Err(Error::ShapeMismatch {
                context: "SparseProjection sign",
                expected: cols,
                found: sign.len(),
            });
        }
        if let Some(&bad) = target_row.iter().find(|&&t| t >= rows) {
            return Err(Error::invalid(format!(
                "target row {bad} out of range for {rows} rows"
            )));
        }
        if sign.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::invalid("signs must be +1 or -1"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("scale must be positive and finite"));
        }
        Ok(Self {
            rows,
            cols,
            target_row,
            sign,
            scale,
        })
    }

    /// Output dimension `d`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Input dimension `n`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn target_row(&self) -> &[usize] {
        &self.target_row
    }

    pub fn sign(&self) -> &[i8] {
        &self.sign
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Applies the projection to one input vector of length `n`.
    pub fn project_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch {
                context: "SparseProjection::project_vector",
                expected: self.cols,
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        accumulate_sparse(x, &self.target_row, &self.sign, &mut out);
        if self.scale != 1.0 {
            for v in &mut out {
                *v *= self.scale;
            }
        }
        Ok(out)
    }
}

/// Fully materialized `d x n` projection.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseProjection {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    scale: f64,
}

impl DenseProjection {
    /// Validates shape, finiteness and scale, then builds the projection.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, scale: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: "DenseProjection entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("scale must be positive and finite"));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            scale,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major `d x n` entry buffer, without the scale factor.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Applies the projection to one input vector of length `n`.
    pub fn project_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::ShapeMismatch {
                context: "DenseProjection::project_vector",
                expected: self.cols,
                found: x.len(),
            });
        }
        let out = (0..self.rows)
            .map(|t| {
                let dot: f64 = self.row(t).iter().zip(x).map(|(r, v)| r * v).sum();
                dot * self.scale
            })
            .collect();
        Ok(out)
    }
}

/// Either projection family behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionMatrix {
    Sparse(SparseProjection),
    Dense(DenseProjection),
}

impl ProjectionMatrix {
    /// Input dimension `n`.
    pub fn input_dim(&self) -> usize {
        match self {
            ProjectionMatrix::Sparse(r) => r.cols(),
            ProjectionMatrix::Dense(r) => r.cols(),
        }
    }

    /// Output dimension `d`.
    pub fn output_dim(&self) -> usize {
        match self {
            ProjectionMatrix::Sparse(r) => r.rows(),
            ProjectionMatrix::Dense(r) => r.rows(),
        }
    }

    /// Number of stored nonzero entries.
    pub fn nnz(&self) -> usize {
        match self {
            ProjectionMatrix::Sparse(r) => r.cols(),
            ProjectionMatrix::Dense(r) => r.entries().iter().filter(|&&v| v != 0.0).count(),
        }
    }

    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            ProjectionMatrix::Sparse(r) => apply_sparse(x, r),
            ProjectionMatrix::Dense(r) => apply_dense(x, r),
        }
    }

    pub fn project_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ProjectionMatrix::Sparse(r) => r.project_vector(x),
            ProjectionMatrix::Dense(r) => r.project_vector(x),
        }
    }
}

// Gathers x into out by signed addition, in ascending column order.
fn accumulate_sparse(x: &[f64], target_row: &[usize], sign: &[i8], out: &mut [f64]) {
    for ((&value, &t), &s) in x.iter().zip(target_row).zip(sign) {
        if s > 0 {
            out[t] += value;
        } else {
            out[t] -= value;
        }
    }
}

/// Projects every row of `x` through a sparse projection: the output is
/// `m x d` with `out[i][t] = scale * sum of sign[j]*x[i][j]` over the columns
/// `j` mapped to row `t`. One pass over the `m x n` input.
pub fn apply_sparse(x: &DenseMatrix, r: &SparseProjection) -> Result<DenseMatrix> {
    if x.n_cols() != r.cols() {
        return Err(Error::ShapeMismatch {
            context: "apply_sparse",
            expected: r.cols(),
            found: x.n_cols(),
        });
    }
    let mut out = DenseMatrix::zeros(x.n_rows(), r.rows());
    for i in 0..x.n_rows() {
        let input = x.row(i);
        let output = out.row_mut(i);
        accumulate_sparse(input, &r.target_row, &r.sign, output);
        if r.scale != 1.0 {
            for v in output {
                *v *= r.scale;
            }
        }
    }
    Ok(out)
}

/// Projects every row of `x` through a dense projection: plain `X * R^T`,
/// times the scale factor.
pub fn apply_dense(x: &DenseMatrix, r: &DenseProjection) -> Result<DenseMatrix> {
    if x.n_cols() != r.cols() {
        return Err(Error::ShapeMismatch {
            context: "apply_dense",
            expected: r.cols(),
            found: x.n_cols(),
        });
    }
    let mut out = DenseMatrix::zeros(x.n_rows(), r.rows());
    for i in 0..x.n_rows() {
        let input = x.row(i);
        let output = out.row_mut(i);
        for (t, slot) in output.iter_mut().enumerate() {
            let dot: f64 = r.row(t).iter().zip(input).map(|(rv, xv)| rv * xv).sum();
            *slot = dot * r.scale;
        }
    }
    Ok(out)
}

/// Materializes a sparse projection as a dense one: `sign[j]` at
/// `(target_row[j], j)`, zeros elsewhere, with the scale factor carried over
/// so both application paths multiply by it identically at projection time.
pub fn to_dense(r: &SparseProjection) -> DenseProjection {
    let mut entries = vec![0.0; r.rows() * r.cols()];
    for (j, (&t, &s)) in r.target_row.iter().zip(&r.sign).enumerate() {
        entries[t * r.cols() + j] = f64::from(s);
    }
    DenseProjection {
        rows: r.rows,
        cols: r.cols,
        entries,
        scale: r.scale,
    }
}

/// Euclidean norm of a vector.
pub fn l2_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
