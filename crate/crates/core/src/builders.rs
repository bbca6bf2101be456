//! Seeded constructors for the four projection families.
//!
//! - [`build_s_sse`]: one signed nonzero per column with balanced row
//!   occupancy. The n column labels form a multiset in which every row
//!   appears either `floor(n/d)` or `floor(n/d)+1` times (exactly `n mod d`
//!   rows get the larger count), shuffled into uniformly random order.
//! - [`build_se`]: count-sketch structure; each column's row label is drawn
//!   uniformly with replacement.
//! - [`build_de`]: dense `+1/-1` matrix, scaled by `1/sqrt(d)`.
//! - [`build_achlioptas_sparse`]: entries `+sqrt(kappa)`/`-sqrt(kappa)` with
//!   probability `1/(2*kappa)` each, zero otherwise, scaled by `1/sqrt(d)`.
//!
//! All builders are pure functions of their spec. Row positions come from
//! the seed's position stream and signs from its independent sign stream
//! (see [`crate::seed`]), so equal specs give bit-identical matrices on any
//! platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{DenseProjection, ProjectionMatrix, SparseProjection};
use crate::seed::{self, STREAM_POSITION, STREAM_SIGN};

/// Projection family identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Balanced sparse projection (one nonzero per column, even rows).
    SSse,
    /// Count-sketch style sparse projection (rows drawn with replacement).
    Se,
    /// Dense `+1/-1` projection.
    De,
    /// Achlioptas-style sparse projection with `+/-sqrt(kappa)` entries.
    AchlioptasSparse,
}

impl Method {
    /// All supported methods, in catalogue order.
    pub const ALL: [Method; 4] = [Method::SSse, Method::Se, Method::De, Method::AchlioptasSparse];

    /// Stable numeric tag used in seed derivation.
    pub fn tag(self) -> u64 {
        match self {
            Method::SSse => 1,
            Method::Se => 2,
            Method::De => 3,
            Method::AchlioptasSparse => 4,
        }
    }

    /// Parses the CLI/report spelling.
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "s-sse" => Ok(Method::SSse),
            "se" => Ok(Method::Se),
            "de" => Ok(Method::De),
            "achlioptas" | "achlioptas-sparse" => Ok(Method::AchlioptasSparse),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::SSse => "s-sse",
            Method::Se => "se",
            Method::De => "de",
            Method::AchlioptasSparse => "achlioptas",
        };
        f.write_str(name)
    }
}

/// Everything needed to build one projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuilderSpec {
    pub method: Method,
    /// Source dimension `n`.
    pub n: usize,
    /// Target dimension `d`.
    pub d: usize,
    /// Sparsity parameter for [`Method::AchlioptasSparse`]; defaults to 3.
    #[serde(default)]
    pub kappa: Option<f64>,
    pub seed: u64,
}

impl BuilderSpec {
    pub fn new(method: Method, n: usize, d: usize, seed: u64) -> Self {
        Self {
            method,
            n,
            d,
            kappa: None,
            seed,
        }
    }

    fn check_dims(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("projection dimensions must be positive"));
        }
        Ok(())
    }

    fn position_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed::mix(self.seed, STREAM_POSITION))
    }

    fn sign_rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed::mix(self.seed, STREAM_SIGN))
    }
}

fn expect_method(spec: &BuilderSpec, method: Method) -> Result<()> {
    if spec.method != method {
        return Err(Error::invalid(format!(
            "spec method is {}, expected {}",
            spec.method, method
        )));
    }
    Ok(())
}

fn draw_signs(rng: &mut ChaCha8Rng, count: usize) -> Vec<i8> {
    (0..count).map(|_| if rng.random() { 1 } else { -1 }).collect()
}

/// Builds the balanced sparse projection.
///
/// Requires `1 <= d <= n`. A uniformly random set of `q = n mod d` rows
/// receives `floor(n/d) + 1` column labels, every other row `floor(n/d)`;
/// the resulting length-`n` label multiset is put into uniformly random
/// order by an unbiased in-place shuffle. Signs are independent fair `+1/-1`.
pub fn build_s_sse(spec: &BuilderSpec) -> Result<SparseProjection> {
    expect_method(spec, Method::SSse)?;
    spec.check_dims()?;
    if spec.d > spec.n {
        return Err(Error::invalid(format!(
            "balanced construction needs d <= n, got d={} n={}",
            spec.d, spec.n
        )));
    }
    let (n, d) = (spec.n, spec.d);
    let r = n / d;
    let q = n % d;

    let mut rng = spec.position_rng();

    // Uniform q-subset of rows via a partial Fisher-Yates pass.
    let mut rows: Vec<usize> = (0..d).collect();
    for i in 0..q {
        let j = i + rng.random_range(0..(d - i) as u64) as usize;
        rows.swap(i, j);
    }
    let mut count = vec![r; d];
    for &row in &rows[..q] {
        count[row] += 1;
    }

    let mut target_row = Vec::with_capacity(n);
    for (row, &c) in count.iter().enumerate() {
        target_row.extend(std::iter::repeat_n(row, c));
    }
    // Unbiased Fisher-Yates shuffle of the balanced multiset.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=(i as u64)) as usize;
        target_row.swap(i, j);
    }

    let sign = draw_signs(&mut spec.sign_rng(), n);
    SparseProjection::new(d, n, target_row, sign, 1.0)
}

/// Builds the count-sketch style sparse projection: each column's row label
/// is uniform on `[0, d)`, drawn with replacement.
pub fn build_se(spec: &BuilderSpec) -> Result<SparseProjection> {
    expect_method(spec, Method::Se)?;
    spec.check_dims()?;
    let mut rng = spec.position_rng();
    let target_row = (0..spec.n)
        .map(|_| rng.random_range(0..spec.d as u64) as usize)
        .collect();
    let sign = draw_signs(&mut spec.sign_rng(), spec.n);
    SparseProjection::new(spec.d, spec.n, target_row, sign, 1.0)
}

/// Builds the dense projection: all `d*n` entries independent fair `+1/-1`,
/// with an overall `1/sqrt(d)` scale so squared norms are preserved in
/// expectation.
pub fn build_de(spec: &BuilderSpec) -> Result<DenseProjection> {
    expect_method(spec, Method::De)?;
    spec.check_dims()?;
    let mut rng = spec.sign_rng();
    let entries = (0..spec.d * spec.n)
        .map(|_| if rng.random() { 1.0 } else { -1.0 })
        .collect();
    DenseProjection::new(spec.d, spec.n, entries, 1.0 / (spec.d as f64).sqrt())
}

/// Builds the Achlioptas-style sparse projection. Each entry is
/// `+sqrt(kappa)` with probability `1/(2*kappa)`, `-sqrt(kappa)` with the
/// same probability, and zero otherwise, so entries have mean 0 and variance
/// 1; the overall scale is `1/sqrt(d)`. Stored densely since column sparsity
/// is not structural here. Requires `kappa >= 3`.
pub fn build_achlioptas_sparse(spec: &BuilderSpec) -> Result<DenseProjection> {
    expect_method(spec, Method::AchlioptasSparse)?;
    spec.check_dims()?;
    let kappa = spec.kappa.unwrap_or(3.0);
    if !(kappa.is_finite() && kappa >= 3.0) {
        return Err(Error::invalid(format!("kappa must be >= 3, got {kappa}")));
    }
    let root = kappa.sqrt();
    let nonzero_prob = 1.0 / kappa;
    let mut pos_rng = spec.position_rng();
    let mut sign_rng = spec.sign_rng();
    let entries = (0..spec.d * spec.n)
        .map(|_| {
            let occupied = pos_rng.random::<f64>() < nonzero_prob;
            let sign: f64 = if sign_rng.random() { 1.0 } else { -1.0 };
            if occupied {
                sign * root
            } else {
                0.0
            }
        })
        .collect();
    DenseProjection::new(spec.d, spec.n, entries, 1.0 / (spec.d as f64).sqrt())
}

/// Dispatches to the family named in the spec.
pub fn build(spec: &BuilderSpec) -> Result<ProjectionMatrix> {
    match spec.method {
        Method::SSse => build_s_sse(spec).map(ProjectionMatrix::Sparse),
        Method::Se => build_se(spec).map(ProjectionMatrix::Sparse),
        Method::De => build_de(spec).map(ProjectionMatrix::Dense),
        Method::AchlioptasSparse => build_achlioptas_sparse(spec).map(ProjectionMatrix::Dense),
    }
}
