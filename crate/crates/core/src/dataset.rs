//! Core domain types: datasets, effect matrices, kinship matrices, and
//! solver configuration.
//!
//! All matrices are dense `f64`; indexing is semantic (row = sample,
//! column = variable or response). Types are immutable after construction
//! and safe to share across threads.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A regression dataset: `n × p` explanatory matrix `X`, `n × k` response
/// matrix `Y`, identifier lists for every axis, and (for synthetic data)
/// the ground-truth effects.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub sample_ids: Vec<String>,
    pub variable_ids: Vec<String>,
    pub response_ids: Vec<String>,
    pub truth: Option<EffectMatrix>,
}

impl DataSet {
    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_variables(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_responses(&self) -> usize {
        self.y.ncols()
    }
}

/// A `p × k` matrix of effect sizes.
///
/// Exact zeros are produced by proximal shrinkage, never by post-hoc
/// thresholding, so [`EffectMatrix::support`] is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectMatrix {
    pub beta: Array2<f64>,
    pub variable_ids: Vec<String>,
    pub response_ids: Vec<String>,
}

impl EffectMatrix {
    pub fn new(beta: Array2<f64>, variable_ids: Vec<String>, response_ids: Vec<String>) -> Result<Self> {
        if variable_ids.len() != beta.nrows() {
            return Err(Error::dim("EffectMatrix.variable_ids", beta.nrows(), variable_ids.len()));
        }
        if response_ids.len() != beta.ncols() {
            return Err(Error::dim("EffectMatrix.response_ids", beta.ncols(), response_ids.len()));
        }
        Ok(EffectMatrix { beta, variable_ids, response_ids })
    }

    /// Entries with exactly nonzero values, as `(variable, response)` pairs.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ((j, c), v) in self.beta.indexed_iter() {
            if *v != 0.0 {
                out.push((j, c));
            }
        }
        out
    }
}

/// Symmetric positive semi-definite `n × n` sample covariance.
#[derive(Debug, Clone)]
pub struct KinshipMatrix {
    k: Array2<f64>,
}

impl KinshipMatrix {
    /// Wraps a matrix after checking squareness and symmetry
    /// (relative tolerance 1e-10). Positive semi-definiteness is enforced
    /// where the spectrum is actually computed, in the null-model fit.
    pub fn new(k: Array2<f64>) -> Result<Self> {
        let (r, c) = k.dim();
        if r != c {
            return Err(Error::dim("KinshipMatrix", format!("{r}x{r}"), format!("{r}x{c}")));
        }
        if r == 0 {
            return Err(Error::EmptyData("KinshipMatrix has zero rows".into()));
        }
        let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        for i in 0..r {
            for j in (i + 1)..r {
                if (k[[i, j]] - k[[j, i]]).abs() > 1e-10 * scale {
                    return Err(Error::InvalidConfig(format!(
                        "kinship matrix is not symmetric at ({i}, {j}): {} vs {}",
                        k[[i, j]],
                        k[[j, i]]
                    )));
                }
            }
        }
        for ((i, j), v) in k.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { field: "KinshipMatrix".into(), row: i, col: j });
            }
        }
        Ok(KinshipMatrix { k })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.k.nrows()
    }
}

/// Solver tuning knobs shared by every fitting routine.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Penalty strength λ ≥ 0.
    pub lambda: f64,
    /// Smoothing parameter μ > 0 for the internal-group surrogate.
    pub mu: f64,
    pub max_iter: usize,
    /// Relative objective-change stopping tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.mu.is_nan() || self.mu <= 0.0 {
            return Err(Error::InvalidConfig(format!("mu must be > 0, got {}", self.mu)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { lambda: 1.0, mu: 1e-4, max_iter: 1000, tol: 1e-6, seed: 0 }
    }
}

fn find_non_finite(name: &str, m: &Array2<f64>) -> Result<()> {
    for ((i, j), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { field: name.into(), row: i, col: j });
        }
    }
    Ok(())
}

/// Checks every [`DataSet`] invariant; errors name the offending field.
pub fn validate_dataset(ds: &DataSet) -> Result<()> {
    let (n, p) = ds.x.dim();
    let (ny, k) = ds.y.dim();
    if n != ny {
        return Err(Error::dim("DataSet rows (X vs Y)", n, ny));
    }
    if n < 2 {
        return Err(Error::EmptyData(format!("DataSet.X needs at least 2 rows, got {n}")));
    }
    if p < 1 {
        return Err(Error::EmptyData("DataSet.X has no columns".into()));
    }
    if k < 1 {
        return Err(Error::EmptyData("DataSet.Y has no columns".into()));
    }
    find_non_finite("DataSet.X", &ds.x)?;
    find_non_finite("DataSet.Y", &ds.y)?;
    if ds.sample_ids.len() != n {
        return Err(Error::dim("DataSet.sample_ids", n, ds.sample_ids.len()));
    }
    if ds.variable_ids.len() != p {
        return Err(Error::dim("DataSet.variable_ids", p, ds.variable_ids.len()));
    }
    if ds.response_ids.len() != k {
        return Err(Error::dim("DataSet.response_ids", k, ds.response_ids.len()));
    }
    if let Some(truth) = &ds.truth {
        if truth.beta.dim() != (p, k) {
            return Err(Error::dim("DataSet.truth", format!("{p}x{k}"), format!("{}x{}", truth.beta.nrows(), truth.beta.ncols())));
        }
        find_non_finite("DataSet.truth", &truth.beta)?;
    }
    Ok(())
}

/// Sequential identifiers like `s00000`, `v00001`.
pub fn default_ids(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i:05}")).collect()
}
