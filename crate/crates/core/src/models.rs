//! Method pipelines: lasso, tree-lasso, LMM-lasso, and the tree-guided
//! sparse linear mixed model, all behind one `fit` entry point.
//!
//! Pipeline composition per method:
//!
//! - `lasso`: solve on (X, Y) with the all-leaf (flat) penalty.
//! - `tree_lasso`: cluster the responses, solve on (X, Y).
//! - `lmm_lasso`: kinship → null model → rotate, flat penalty on (X̃, Ỹ).
//! - `tgslmm`: kinship → null model → rotate, response tree on the
//!   unrotated Y (a config flag switches to post-rotation clustering),
//!   solve on (X̃, Ỹ).
//!
//! X and Y are centered column-wise before fitting (the model carries no
//! intercept). λ is selected from a descending grid by held-out one-fifth
//! validation MSE; the split is derived from the solver seed, so fits are
//! deterministic.

use ndarray::{Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{validate_dataset, DataSet, EffectMatrix, KinshipMatrix, SolverConfig};
use crate::error::{Error, Result};
use crate::kinship::{fit_null_model, kinship_from_x, rotate, NullModelFit};
use crate::solver::{solve_tree_lasso, SolveResult};
use crate::tree::{cluster_responses, compute_weights, ResponseTree};

/// Salt mixed into the solver seed for the validation split, so the split
/// differs from any stream the generators use.
const SPLIT_SALT: u64 = 0x7653_4c4d_4d53_504c;

/// The four methods under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Lasso,
    TreeLasso,
    LmmLasso,
    Tgslmm,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Lasso => "lasso",
            MethodKind::TreeLasso => "tree-lasso",
            MethodKind::LmmLasso => "lmm-lasso",
            MethodKind::Tgslmm => "tgslmm",
        }
    }

    pub fn parse(name: &str) -> Option<MethodKind> {
        match name {
            "lasso" => Some(MethodKind::Lasso),
            "tree-lasso" | "tree_lasso" => Some(MethodKind::TreeLasso),
            "lmm-lasso" | "lmm_lasso" => Some(MethodKind::LmmLasso),
            "tgslmm" => Some(MethodKind::Tgslmm),
            _ => None,
        }
    }

    pub fn uses_tree(self) -> bool {
        matches!(self, MethodKind::TreeLasso | MethodKind::Tgslmm)
    }

    pub fn uses_lmm(self) -> bool {
        matches!(self, MethodKind::LmmLasso | MethodKind::Tgslmm)
    }

    pub const ALL: [MethodKind; 4] =
        [MethodKind::Lasso, MethodKind::TreeLasso, MethodKind::LmmLasso, MethodKind::Tgslmm];
}

/// Candidate λ values: either given explicitly or derived from the design
/// matrices the solver will actually see (so the grid tracks any rotation
/// rescaling).
#[derive(Debug, Clone)]
pub enum LambdaGrid {
    /// Strictly descending positive values.
    Explicit(Vec<f64>),
    /// Geometric grid of `points` values from `λ_max = ‖XᵀY‖_∞` down by the
    /// total factor `ratio`.
    Auto { points: usize, ratio: f64 },
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto { points: 20, ratio: 100.0 }
    }
}

/// A fully-specified fit request.
#[derive(Debug, Clone)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub solver_cfg: SolverConfig,
    /// Dendrogram cut for tree methods, in `[0, 1]`.
    pub tree_cut: f64,
    pub lambda_grid: LambdaGrid,
    /// Replace `solver_cfg.mu` with [`auto_mu`] computed on the design.
    pub auto_mu: bool,
    /// Cluster on rotated responses instead of raw ones (tgslmm only).
    pub rotate_before_clustering: bool,
}

impl MethodSpec {
    pub fn new(kind: MethodKind, solver_cfg: SolverConfig, lambda_grid: LambdaGrid) -> Self {
        MethodSpec {
            kind,
            solver_cfg,
            tree_cut: 0.9,
            lambda_grid,
            auto_mu: true,
            rotate_before_clustering: false,
        }
    }

    /// A spec that runs a single explicit λ with the exact solver config
    /// given (no grid search, no μ substitution).
    pub fn pinned(kind: MethodKind, solver_cfg: SolverConfig) -> Self {
        let lambda = solver_cfg.lambda;
        MethodSpec {
            kind,
            solver_cfg,
            tree_cut: 0.9,
            lambda_grid: LambdaGrid::Explicit(vec![lambda]),
            auto_mu: false,
            rotate_before_clustering: false,
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.lambda_grid {
            LambdaGrid::Explicit(grid) => {
                if grid.is_empty() {
                    return Err(Error::InvalidConfig("lambda grid must be non-empty".into()));
                }
                for w in grid.windows(2) {
                    if w[0].is_nan() || w[1].is_nan() || w[0] <= w[1] {
                        return Err(Error::InvalidConfig(format!(
                            "lambda grid must be strictly descending, got {} then {}",
                            w[0], w[1]
                        )));
                    }
                }
                if !grid.iter().all(|&l| l > 0.0 && l.is_finite()) {
                    return Err(Error::InvalidConfig("lambda grid entries must be positive".into()));
                }
            }
            LambdaGrid::Auto { points, ratio } => {
                if *points == 0 {
                    return Err(Error::InvalidConfig("lambda grid needs at least one point".into()));
                }
                if ratio.is_nan() || *ratio <= 1.0 {
                    return Err(Error::InvalidConfig(format!("lambda grid ratio must exceed 1, got {ratio}")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.tree_cut) {
            return Err(Error::InvalidConfig(format!("tree_cut must lie in [0, 1], got {}", self.tree_cut)));
        }
        Ok(())
    }
}

/// Optional user-supplied inputs that bypass estimation steps.
#[derive(Debug, Clone, Copy, Default)]
pub struct FitOverrides<'a> {
    pub kinship: Option<&'a KinshipMatrix>,
    pub tree: Option<&'a ResponseTree>,
}

/// Everything a fit produced besides the effect estimate.
#[derive(Debug, Clone)]
pub struct FitDiagnostics {
    pub method: MethodKind,
    pub chosen_lambda: f64,
    pub mu: f64,
    /// Null-model ratio δ; LMM methods only.
    pub delta: Option<f64>,
    pub sigma_g2: Option<f64>,
    pub null_loglik: Option<f64>,
    /// `(λ, validation MSE)` for every grid point tried.
    pub validation_mse: Vec<(f64, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    /// The response hierarchy the final solve used.
    pub tree: ResponseTree,
}

#[derive(Debug, Clone)]
pub struct FitOutput {
    pub beta: EffectMatrix,
    pub diagnostics: FitDiagnostics,
}

/// Centers each column to mean zero.
fn center_columns(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for mut col in out.columns_mut() {
        let mean = col.sum() / col.len() as f64;
        col.mapv_inplace(|v| v - mean);
    }
    out
}

/// Geometric λ grid: `points` values from `λ_max = ‖XᵀY‖_∞` down by the
/// given total `ratio`.
pub fn default_lambda_grid(
    xd: ArrayView2<'_, f64>,
    yd: ArrayView2<'_, f64>,
    points: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidConfig("lambda grid needs at least one point".into()));
    }
    if ratio.is_nan() || ratio <= 1.0 {
        return Err(Error::InvalidConfig(format!("lambda grid ratio must exceed 1, got {ratio}")));
    }
    let xty = xd.t().dot(&yd);
    let lambda_max = xty.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateResponses("X'Y is identically zero; no usable lambda scale".into()));
    }
    if points == 1 {
        return Ok(vec![lambda_max]);
    }
    let step = ratio.powf(-1.0 / (points - 1) as f64);
    let mut grid = Vec::with_capacity(points);
    let mut lambda = lambda_max;
    for _ in 0..points {
        grid.push(lambda);
        lambda *= step;
    }
    Ok(grid)
}

/// Default smoothing level: 1e-4 of the objective scale at β = 0, divided
/// across the internal groups. Smaller μ tightens the surrogate but the
/// smoothed-gradient Lipschitz constant grows as λ²/μ, so this keeps the
/// solver usable across a λ_max-anchored grid.
pub fn auto_mu(yd: ArrayView2<'_, f64>, tree: &ResponseTree) -> f64 {
    let obj0 = 0.5 * yd.iter().map(|v| v * v).sum::<f64>();
    let internal_groups = tree
        .nodes
        .iter()
        .filter(|n| !n.is_leaf() && n.weight.unwrap_or(1.0) > 0.0)
        .count()
        .max(1);
    let mu = 1e-4 * obj0 / internal_groups as f64;
    if mu.is_finite() && mu > 0.0 {
        mu
    } else {
        1e-8
    }
}

fn gather_rows(m: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    m.select(Axis(0), rows)
}

/// Fits one method on one dataset.
pub fn fit(ds: &DataSet, spec: &MethodSpec, overrides: FitOverrides<'_>) -> Result<FitOutput> {
    validate_dataset(ds)?;
    spec.validate()?;
    spec.solver_cfg.validate()?;
    let n = ds.x.nrows();
    let k = ds.y.ncols();

    let xc = center_columns(ds.x.view());
    let yc = center_columns(ds.y.view());

    // LMM stage: estimate or accept K, fit the null model, whiten.
    let null_fit: Option<NullModelFit> = if spec.kind.uses_lmm() {
        let kin = match overrides.kinship {
            Some(k) => {
                if k.n() != n {
                    return Err(Error::dim("kinship override rows", n, k.n()));
                }
                k.clone()
            }
            None => kinship_from_x(xc.view())?,
        };
        Some(fit_null_model(&kin, yc.view())?)
    } else {
        None
    };

    let (xd, yd) = match &null_fit {
        Some(fit) => {
            let rot = rotate(fit, xc.view(), yc.view())?;
            (rot.x_tilde, rot.y_tilde)
        }
        None => (xc, yc),
    };

    // Response hierarchy. Tree methods cluster the raw (unrotated) responses
    // unless the caller opts into post-rotation clustering.
    let tree: ResponseTree = match overrides.tree {
        Some(t) => {
            if t.k != k {
                return Err(Error::dim("tree override responses", k, t.k));
            }
            let t = t.clone();
            if t.weights_computed() { t } else { compute_weights(t)? }
        }
        None if spec.kind.uses_tree() => {
            if spec.rotate_before_clustering {
                cluster_responses(yd.view(), spec.tree_cut)?
            } else {
                cluster_responses(center_columns(ds.y.view()).view(), spec.tree_cut)?
            }
        }
        None => ResponseTree::all_leaves(k)?,
    };

    let lambda_grid = match &spec.lambda_grid {
        LambdaGrid::Explicit(grid) => grid.clone(),
        LambdaGrid::Auto { points, ratio } => default_lambda_grid(xd.view(), yd.view(), *points, *ratio)?,
    };
    let mu = if spec.auto_mu { auto_mu(yd.view(), &tree) } else { spec.solver_cfg.mu };
    let base_cfg = SolverConfig { mu, ..spec.solver_cfg.clone() };

    // λ selection by held-out one-fifth validation MSE (skipped for a
    // singleton grid).
    let mut validation_mse = Vec::new();
    let chosen_lambda = if lambda_grid.len() == 1 {
        lambda_grid[0]
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.solver_cfg.seed ^ SPLIT_SALT);
        order.shuffle(&mut rng);
        let n_val = (n / 5).max(1);
        let (val_rows, train_rows) = order.split_at(n_val);
        let mut val_rows = val_rows.to_vec();
        let mut train_rows = train_rows.to_vec();
        val_rows.sort_unstable();
        train_rows.sort_unstable();
        let x_train = gather_rows(&xd, &train_rows);
        let y_train = gather_rows(&yd, &train_rows);
        let x_val = gather_rows(&xd, &val_rows);
        let y_val = gather_rows(&yd, &val_rows);

        let mut best = (lambda_grid[0], f64::INFINITY);
        for &lambda in &lambda_grid {
            let cfg = SolverConfig { lambda, ..base_cfg.clone() };
            let res = solve_tree_lasso(x_train.view(), y_train.view(), &tree, &cfg)?;
            let resid = &x_val.dot(&res.beta) - &y_val;
            let mse = resid.iter().map(|v| v * v).sum::<f64>() / resid.len() as f64;
            validation_mse.push((lambda, mse));
            if mse < best.1 {
                best = (lambda, mse);
            }
        }
        best.0
    };

    let final_cfg = SolverConfig { lambda: chosen_lambda, ..base_cfg.clone() };
    let SolveResult { beta, objective_trace, iterations, converged } =
        solve_tree_lasso(xd.view(), yd.view(), &tree, &final_cfg)?;

    let beta = EffectMatrix::new(beta, ds.variable_ids.clone(), ds.response_ids.clone())?;
    let diagnostics = FitDiagnostics {
        method: spec.kind,
        chosen_lambda,
        mu,
        delta: null_fit.as_ref().map(|f| f.delta),
        sigma_g2: null_fit.as_ref().map(|f| f.sigma_g2),
        null_loglik: null_fit.as_ref().map(|f| f.loglik),
        validation_mse,
        iterations,
        converged,
        objective_trace,
        tree,
    };
    Ok(FitOutput { beta, diagnostics })
}

/// Fixed-effect prediction `Xβ` (no random-effect term).
pub fn predict(ds: &DataSet, beta: &EffectMatrix) -> Result<Array2<f64>> {
    if beta.beta.nrows() != ds.x.ncols() {
        return Err(Error::dim("predict variables", ds.x.ncols(), beta.beta.nrows()));
    }
    if beta.beta.ncols() != ds.y.ncols() {
        return Err(Error::dim("predict responses", ds.y.ncols(), beta.beta.ncols()));
    }
    Ok(ds.x.dot(&beta.beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::default_ids;
    use crate::synth::{generate, SynthConfig};
    use ndarray::array;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
    }

    fn toy_dataset(n: usize, p: usize, k: usize, seed: u64) -> DataSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = randn(n, p, &mut rng);
        let mut beta = Array2::zeros((p, k));
        for j in 0..p.min(3) {
            for c in 0..k {
                beta[[j, c]] = 1.0 + j as f64;
            }
        }
        let y = x.dot(&beta) + randn(n, k, &mut rng) * 0.1;
        DataSet {
            x,
            y,
            sample_ids: default_ids("s", n),
            variable_ids: default_ids("v", p),
            response_ids: default_ids("r", k),
            truth: None,
        }
    }

    fn quick_cfg(seed: u64) -> SolverConfig {
        SolverConfig { lambda: 1.0, mu: 1e-4, max_iter: 2000, tol: 1e-10, seed }
    }

    #[test]
    fn predict_trivial_cases() {
        let ds = toy_dataset(5, 2, 2, 1);
        let zero = EffectMatrix::new(Array2::zeros((2, 2)), default_ids("v", 2), default_ids("r", 2)).unwrap();
        let out = predict(&ds, &zero).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));

        let ds1 = DataSet {
            x: array![[1.0], [2.0], [3.0]],
            y: array![[0.0], [0.0], [0.0]],
            sample_ids: default_ids("s", 3),
            variable_ids: default_ids("v", 1),
            response_ids: default_ids("r", 1),
            truth: None,
        };
        let two = EffectMatrix::new(array![[2.0]], default_ids("v", 1), default_ids("r", 1)).unwrap();
        let out = predict(&ds1, &two).unwrap();
        assert_eq!(out, array![[2.0], [4.0], [6.0]]);
    }

    #[test]
    fn noiseless_synthetic_prediction_is_exact() {
        let cfg = SynthConfig {
            n: 20,
            p: 30,
            k: 4,
            m: 2,
            density: 0.2,
            sigma_e2: 0.001,
            sigma_y2: 0.0,
            sigma_eps2: 0.0,
            base_effect: 0.5,
            seed: 3,
        };
        let out = generate(&cfg).unwrap();
        let pred = predict(&out.dataset, out.dataset.truth.as_ref().unwrap()).unwrap();
        assert_eq!(pred, out.dataset.y);
    }

    #[test]
    fn lambda_grid_is_geometric_and_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = randn(20, 5, &mut rng);
        let y = randn(20, 2, &mut rng);
        let grid = default_lambda_grid(x.view(), y.view(), 20, 100.0).unwrap();
        assert_eq!(grid.len(), 20);
        let lambda_max = x.t().dot(&y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((grid[0] - lambda_max).abs() < 1e-12);
        assert!((grid.last().unwrap() - lambda_max / 100.0).abs() < 1e-9);
        for w in grid.windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let ds = toy_dataset(30, 10, 3, 4);
        let spec =
            MethodSpec::new(MethodKind::Tgslmm, quick_cfg(9), LambdaGrid::Explicit(vec![2.0, 1.0, 0.5]));
        let a = fit(&ds, &spec, FitOverrides::default()).unwrap();
        let b = fit(&ds, &spec, FitOverrides::default()).unwrap();
        assert_eq!(a.beta.beta, b.beta.beta);
        assert_eq!(a.diagnostics.chosen_lambda, b.diagnostics.chosen_lambda);
    }

    #[test]
    fn lasso_diagnostics_carry_no_delta() {
        let ds = toy_dataset(20, 6, 2, 5);
        let spec = MethodSpec::new(MethodKind::Lasso, quick_cfg(1), LambdaGrid::Explicit(vec![1.0]));
        let out = fit(&ds, &spec, FitOverrides::default()).unwrap();
        assert!(out.diagnostics.delta.is_none());
        assert!(out.diagnostics.sigma_g2.is_none());

        let spec = MethodSpec::new(MethodKind::LmmLasso, quick_cfg(1), LambdaGrid::Explicit(vec![1.0]));
        let out = fit(&ds, &spec, FitOverrides::default()).unwrap();
        assert!(out.diagnostics.delta.is_some());
    }

    #[test]
    fn identity_kinship_tgslmm_matches_tree_lasso() {
        // With K = I the rotation is a uniform rescale by (1+δ)^{-1/2}, so a
        // tgslmm fit at λ/(1+δ), μ/(1+δ) solves the same problem as a
        // tree-lasso fit at λ, μ: identical support, near-perfect correlation.
        let cfg = SynthConfig {
            n: 50,
            p: 40,
            k: 8,
            m: 1,
            density: 0.2,
            sigma_e2: 1.0,
            sigma_y2: 0.0,
            sigma_eps2: 0.2,
            base_effect: 0.8,
            seed: 11,
        };
        let out = generate(&cfg).unwrap();
        let identity = KinshipMatrix::new(Array2::eye(cfg.n)).unwrap();

        // δ the pipeline will fit (the likelihood is flat; the grid decides).
        let yc = center_columns(out.dataset.y.view());
        let xc = center_columns(out.dataset.x.view());
        let delta = fit_null_model(&identity, yc.view()).unwrap().delta;
        let scale = 1.0 + delta;
        let lambda = xc.t().dot(&yc).iter().fold(0.0f64, |m, v| m.max(v.abs())) / 20.0;
        let mu = 1e-6;

        let tl_cfg = SolverConfig { lambda, mu, max_iter: 20_000, tol: 1e-13, seed: 7 };
        let tg_cfg =
            SolverConfig { lambda: lambda / scale, mu: mu / scale, max_iter: 20_000, tol: 1e-13, seed: 7 };
        let tg = fit(
            &out.dataset,
            &MethodSpec::pinned(MethodKind::Tgslmm, tg_cfg),
            FitOverrides { kinship: Some(&identity), tree: None },
        )
        .unwrap();
        let tl = fit(
            &out.dataset,
            &MethodSpec::pinned(MethodKind::TreeLasso, tl_cfg),
            FitOverrides::default(),
        )
        .unwrap();

        assert_eq!(tg.beta.support(), tl.beta.support());
        let a = &tg.beta.beta;
        let b = &tl.beta.beta;
        let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(na > 0.0 && nb > 0.0, "both fits must be nonzero");
        let corr = dot / (na * nb);
        assert!(corr > 0.999, "correlation {corr}");
    }

    #[test]
    fn degenerate_tgslmm_reduces_to_lasso() {
        // All-leaf tree override + identity kinship: the tgslmm pipeline is
        // the lasso pipeline up to the uniform (1+δ) rescale, so a fit at
        // λ/(1+δ) reproduces the lasso fit at λ.
        let ds = toy_dataset(40, 12, 3, 21);
        let identity = KinshipMatrix::new(Array2::eye(40)).unwrap();
        let flat = ResponseTree::all_leaves(3).unwrap();
        let yc = center_columns(ds.y.view());
        let delta = fit_null_model(&identity, yc.view()).unwrap().delta;
        let lambda = 2.0;

        let lasso_cfg = SolverConfig { lambda, mu: 1e-4, max_iter: 30_000, tol: 1e-13, seed: 4 };
        let tg_cfg = SolverConfig { lambda: lambda / (1.0 + delta), ..lasso_cfg.clone() };
        let lasso_fit = fit(
            &ds,
            &MethodSpec::pinned(MethodKind::Lasso, lasso_cfg),
            FitOverrides::default(),
        )
        .unwrap();
        let tg_fit = fit(
            &ds,
            &MethodSpec::pinned(MethodKind::Tgslmm, tg_cfg),
            FitOverrides { kinship: Some(&identity), tree: Some(&flat) },
        )
        .unwrap();

        assert_eq!(tg_fit.beta.support(), lasso_fit.beta.support());
        // Both minimize the same lasso objective on centered data.
        let xc = center_columns(ds.x.view());
        let o_lasso =
            crate::solver::objective(xc.view(), yc.view(), &flat, lambda, lasso_fit.beta.beta.view())
                .unwrap();
        let o_tg =
            crate::solver::objective(xc.view(), yc.view(), &flat, lambda, tg_fit.beta.beta.view())
                .unwrap();
        assert!((o_lasso - o_tg).abs() <= 1e-6 * o_lasso.abs(), "lasso {o_lasso} vs tgslmm {o_tg}");
    }

    #[test]
    fn lasso_support_invariant_under_response_permutation() {
        let ds = toy_dataset(40, 12, 4, 6);
        let perm = [2usize, 0, 3, 1];
        let mut permuted = ds.clone();
        let mut y = Array2::zeros(ds.y.dim());
        for (new_c, &old_c) in perm.iter().enumerate() {
            y.column_mut(new_c).assign(&ds.y.column(old_c));
        }
        permuted.y = y;

        let spec =
            MethodSpec::new(MethodKind::Lasso, quick_cfg(3), LambdaGrid::Explicit(vec![3.0, 1.5, 0.75]));
        let base = fit(&ds, &spec, FitOverrides::default()).unwrap();
        let perm_fit = fit(&permuted, &spec, FitOverrides::default()).unwrap();

        let mut base_support = base.beta.support();
        let mut mapped: Vec<(usize, usize)> = perm_fit
            .beta
            .support()
            .into_iter()
            .map(|(j, new_c)| (j, perm[new_c]))
            .collect();
        base_support.sort_unstable();
        mapped.sort_unstable();
        assert_eq!(base_support, mapped);
    }

    #[test]
    fn support_invariant_under_simultaneous_scaling() {
        // (X·c, λ·c) leaves the lasso-degenerate support unchanged, also
        // through the LMM path (column standardization absorbs the scale).
        let ds = toy_dataset(30, 8, 2, 8);
        let c = 3.7;
        let mut scaled = ds.clone();
        scaled.x *= c;

        for kind in [MethodKind::Lasso, MethodKind::LmmLasso, MethodKind::Tgslmm] {
            let spec = MethodSpec::new(kind, quick_cfg(5), LambdaGrid::Explicit(vec![1.2]));
            let spec_scaled = MethodSpec::new(kind, quick_cfg(5), LambdaGrid::Explicit(vec![1.2 * c]));
            let base = fit(&ds, &spec, FitOverrides::default()).unwrap();
            let scaled_fit = fit(&scaled, &spec_scaled, FitOverrides::default()).unwrap();
            assert_eq!(base.beta.support(), scaled_fit.beta.support(), "method {kind:?}");
        }
    }

    #[test]
    fn predict_rejects_mismatched_shapes() {
        let ds = toy_dataset(6, 3, 2, 1);
        let wrong_vars =
            EffectMatrix::new(Array2::zeros((4, 2)), default_ids("v", 4), default_ids("r", 2)).unwrap();
        assert!(matches!(predict(&ds, &wrong_vars), Err(Error::DimensionMismatch { .. })));
        let wrong_resp =
            EffectMatrix::new(Array2::zeros((3, 5)), default_ids("v", 3), default_ids("r", 5)).unwrap();
        assert!(matches!(predict(&ds, &wrong_resp), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn auto_mu_is_positive_and_scales() {
        let tree = ResponseTree::all_leaves(3).unwrap();
        let y = Array2::from_elem((10, 3), 2.0);
        let mu = auto_mu(y.view(), &tree);
        assert!(mu > 0.0);
        let mu_bigger = auto_mu((&y * 2.0).view(), &tree);
        assert!((mu_bigger / mu - 4.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let ds = toy_dataset(10, 4, 2, 9);
        let spec =
            MethodSpec::new(MethodKind::Lasso, quick_cfg(0), LambdaGrid::Explicit(vec![1.0, 2.0]));
        assert!(matches!(fit(&ds, &spec, FitOverrides::default()), Err(Error::InvalidConfig(_))));
        let spec = MethodSpec::new(MethodKind::Lasso, quick_cfg(0), LambdaGrid::Explicit(vec![]));
        assert!(fit(&ds, &spec, FitOverrides::default()).is_err());
    }

    #[test]
    fn auto_grid_fit_runs_and_selects_inside_grid() {
        let ds = toy_dataset(40, 10, 3, 12);
        let spec = MethodSpec::new(
            MethodKind::TreeLasso,
            quick_cfg(2),
            LambdaGrid::Auto { points: 6, ratio: 50.0 },
        );
        let out = fit(&ds, &spec, FitOverrides::default()).unwrap();
        assert_eq!(out.diagnostics.validation_mse.len(), 6);
        assert!(out
            .diagnostics
            .validation_mse
            .iter()
            .any(|&(l, _)| l == out.diagnostics.chosen_lambda));
    }
}
