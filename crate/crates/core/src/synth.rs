//! Synthetic benchmark generator: confounded explanatory data drawn around
//! group centroids, tree-structured ground-truth effects, and responses
//! with group-correlated noise.
//!
//! Effect construction: the active rows (a `density` fraction of the `p`
//! rows, chosen uniformly) are split across the right spine of a balanced
//! binary partition of the `k` response columns. A row assigned to spine
//! depth `t` is nonzero on the suffix block `[a_t, k)` with value
//! `base_effect·2^t`, plus an anchor entry at column 0 held at
//! `base_effect` (the shared "general" feature). Depth-0 rows are therefore
//! fully active; deeper rows cover narrower, righter, larger-valued blocks;
//! row supports form a nested chain.

use ndarray::{Array2, ArrayView2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{default_ids, DataSet, EffectMatrix};
use crate::error::{Error, Result};

// Sub-step stream ids; each generator op owns one stream of the seed so
// that running ops independently or through `generate` gives identical
// output.
const STREAM_BETA: u64 = 1;
const STREAM_X: u64 = 2;
const STREAM_RESPONSES: u64 = 3;

/// Generator configuration. Defaults follow the standard benchmark setting
/// (n=1000, p=5000, k=50, m=10, density=0.05, σ_e²=0.001, σ_y²=1,
/// σ_ε²=0.05).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Samples.
    pub n: usize,
    /// Explanatory variables.
    pub p: usize,
    /// Responses.
    pub k: usize,
    /// Number of source distributions (groups).
    pub m: usize,
    /// Fraction of active (nonzero) effect rows, in (0, 1].
    pub density: f64,
    /// Variance of explanatory variables around their centroid.
    pub sigma_e2: f64,
    /// Magnitude of the group-structured response covariance.
    pub sigma_y2: f64,
    /// Entrywise response noise variance.
    pub sigma_eps2: f64,
    /// Base magnitude of nonzero effects.
    pub base_effect: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 1000,
            p: 5000,
            k: 50,
            m: 10,
            density: 0.05,
            sigma_e2: 0.001,
            sigma_y2: 1.0,
            sigma_eps2: 0.05,
            base_effect: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidConfig("n and p must be positive".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!("k must be >= 2 for a tree structure, got {}", self.k)));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("m must be positive".into()));
        }
        if self.density.is_nan() || self.density <= 0.0 || self.density > 1.0 {
            return Err(Error::InvalidConfig(format!("density must lie in (0, 1], got {}", self.density)));
        }
        if (self.density * self.p as f64).round() < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "density·p must be at least 1, got {}",
                self.density * self.p as f64
            )));
        }
        for (name, v) in [
            ("sigma_e2", self.sigma_e2),
            ("sigma_y2", self.sigma_y2),
            ("sigma_eps2", self.sigma_eps2),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.base_effect.is_nan() || self.base_effect <= 0.0 {
            return Err(Error::InvalidConfig(format!("base_effect must be > 0, got {}", self.base_effect)));
        }
        Ok(())
    }
}

/// A generated dataset plus everything needed to score methods against it.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    /// Dataset with `truth` populated.
    pub dataset: DataSet,
    /// `m × p` centroid matrix `C`.
    pub centroids: Array2<f64>,
    /// Group label of each sample, in `[0, m)`.
    pub group_labels: Vec<usize>,
    /// `n × n` ground-truth sample covariance `S C Cᵀ Sᵀ`.
    pub kinship_truth: Array2<f64>,
}

/// Left endpoints of the right-spine suffix blocks `[a_t, k)` of a balanced
/// binary partition of `[0, k)`; `a_0 = 0`, each level keeps the right half
/// (left child takes the ceiling) until the block has a single column.
pub(crate) fn spine_starts(k: usize) -> Vec<usize> {
    let mut starts = vec![0usize];
    let (mut a, b) = (0usize, k);
    while b - a > 1 {
        let mid = a + (b - a).div_ceil(2);
        starts.push(mid);
        a = mid;
    }
    starts
}

/// Active-row counts per spine depth: proportional to `2^t` by largest
/// remainder, with at least one row at depth 0 (the fully-active "general"
/// rows) and, when possible, at least one at the deepest level.
fn depth_quotas(n_active: usize, levels: usize) -> Vec<usize> {
    let weights: Vec<f64> = (0..levels).map(|t| (2.0f64).powi(t as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut quotas: Vec<usize> =
        weights.iter().map(|w| ((w / total) * n_active as f64).floor() as usize).collect();
    let mut assigned: usize = quotas.iter().sum();
    // Largest remainders take the leftover rows.
    let mut rema: Vec<(usize, f64)> = weights
        .iter()
        .enumerate()
        .map(|(t, w)| (t, (w / total) * n_active as f64 - quotas[t] as f64))
        .collect();
    rema.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut i = 0;
    while assigned < n_active {
        quotas[rema[i % rema.len()].0] += 1;
        assigned += 1;
        i += 1;
    }
    let steal_from = |quotas: &mut Vec<usize>, skip: usize| {
        let donor = (0..quotas.len())
            .filter(|&t| t != skip)
            .max_by_key(|&t| quotas[t])
            .expect("at least two levels");
        if quotas[donor] > 0 {
            quotas[donor] -= 1;
            true
        } else {
            false
        }
    };
    if quotas[0] == 0 && steal_from(&mut quotas, 0) {
        quotas[0] += 1;
    }
    let deepest = levels - 1;
    if levels > 1 && quotas[deepest] == 0 && n_active >= 2 && steal_from(&mut quotas, deepest) {
        quotas[deepest] += 1;
    }
    quotas
}

/// Builds the ground-truth effect matrix.
pub fn generate_beta(cfg: &SynthConfig) -> Result<EffectMatrix> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_BETA);

    let n_active = (cfg.density * cfg.p as f64).round() as usize;
    let active: Vec<usize> = rand::seq::index::sample(&mut rng, cfg.p, n_active).into_vec();
    let starts = spine_starts(cfg.k);
    let quotas = depth_quotas(n_active, starts.len());

    let mut beta = Array2::zeros((cfg.p, cfg.k));
    let mut row_iter = active.into_iter();
    for (t, (&a, &q)) in starts.iter().zip(&quotas).enumerate() {
        let value = cfg.base_effect * (2.0f64).powi(t as i32);
        for _ in 0..q {
            let j = row_iter.next().expect("quotas sum to n_active");
            beta[[j, 0]] = cfg.base_effect; // anchor: the shared general feature
            for c in a..cfg.k {
                beta[[j, c]] = value;
            }
        }
    }
    EffectMatrix::new(beta, default_ids("v", cfg.p), default_ids("r", cfg.k))
}

/// Draws centroids and samples: `x_i ~ N(c_{g_i}, σ_e² I)` with cyclic
/// group assignment `g_i = i mod m`.
pub fn generate_x(cfg: &SynthConfig) -> Result<(Array2<f64>, Array2<f64>, Vec<usize>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_X);

    let centroids = Array2::from_shape_fn((cfg.m, cfg.p), |_| rng.sample::<f64, _>(StandardNormal));
    let labels: Vec<usize> = (0..cfg.n).map(|i| i % cfg.m).collect();
    let sigma_e = cfg.sigma_e2.sqrt();
    let mut x = Array2::zeros((cfg.n, cfg.p));
    for i in 0..cfg.n {
        let c = centroids.row(labels[i]);
        for j in 0..cfg.p {
            let noise: f64 = rng.sample(StandardNormal);
            x[[i, j]] = c[j] + sigma_e * noise;
        }
    }
    Ok((x, centroids, labels))
}

/// Draws responses `Y` column by column: `r = Xβ + ε` with entrywise
/// `ε ~ N(0, σ_ε²)`, then `y_c = r_c + σ_y·(S C) z_c` with `z_c ~ N(0, I_p)`,
/// so each column has covariance `σ_y²·S C Cᵀ Sᵀ` around `r_c`.
pub fn generate_responses(
    cfg: &SynthConfig,
    x: ArrayView2<'_, f64>,
    centroids: ArrayView2<'_, f64>,
    labels: &[usize],
    beta: &EffectMatrix,
) -> Result<Array2<f64>> {
    cfg.validate()?;
    let (n, p) = x.dim();
    if beta.beta.dim() != (p, cfg.k) {
        return Err(Error::dim(
            "generate_responses beta",
            format!("{p}x{}", cfg.k),
            format!("{}x{}", beta.beta.nrows(), beta.beta.ncols()),
        ));
    }
    if labels.len() != n {
        return Err(Error::dim("generate_responses labels", n, labels.len()));
    }
    if centroids.ncols() != p {
        return Err(Error::dim("generate_responses centroids", p, centroids.ncols()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(STREAM_RESPONSES);

    let mut y = x.dot(&beta.beta);
    let sigma_eps = cfg.sigma_eps2.sqrt();
    if sigma_eps > 0.0 {
        for v in y.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *v += sigma_eps * e;
        }
    }
    let sigma_y = cfg.sigma_y2.sqrt();
    if sigma_y > 0.0 {
        // Structured noise per column: σ_y · C[g_i, :] · z_c.
        for c in 0..cfg.k {
            let z: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let mut per_group = vec![0.0f64; centroids.nrows()];
            for (g, pg) in per_group.iter_mut().enumerate() {
                let mut acc = 0.0;
                for j in 0..p {
                    acc += centroids[[g, j]] * z[j];
                }
                *pg = acc;
            }
            for i in 0..n {
                y[[i, c]] += sigma_y * per_group[labels[i]];
            }
        }
    }
    Ok(y)
}

/// Runs the full generator pipeline.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let beta = generate_beta(cfg)?;
    let (x, centroids, labels) = generate_x(cfg)?;
    let y = generate_responses(cfg, x.view(), centroids.view(), &labels, &beta)?;

    let cct = centroids.dot(&centroids.t());
    let kinship_truth = Array2::from_shape_fn((cfg.n, cfg.n), |(i, j)| cct[[labels[i], labels[j]]]);

    let dataset = DataSet {
        x,
        y,
        sample_ids: default_ids("s", cfg.n),
        variable_ids: default_ids("v", cfg.p),
        response_ids: default_ids("r", cfg.k),
        truth: Some(beta),
    };
    Ok(SynthOutput { dataset, centroids, group_labels: labels, kinship_truth })
}
