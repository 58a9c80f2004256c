//! Confounder covariance estimation, null-model variance components, and
//! the whitening rotation.
//!
//! The null model treats each response column as
//! `y ~ N(0, σ_g²(K + δI))` with a single δ shared across columns. With
//! the spectral decomposition `K = U diag(d) Uᵀ` and rotated responses
//! `Y' = Uᵀ Y`, the profiled log-likelihood needs only the per-row sums of
//! `Y'²`, so the one-dimensional search over δ is cheap: for fixed δ the
//! variance scale has the closed form
//! `σ_g²(δ) = Σ_{c,i} Y'[i,c]² / (d_i + δ) / (n·k)`.

use ndarray::{Array1, Array2, ArrayView2};

use crate::dataset::KinshipMatrix;
use crate::error::{Error, Result};

/// Search grid bounds for δ (log-spaced, then refined).
pub const DELTA_MIN: f64 = 1e-5;
pub const DELTA_MAX: f64 = 1e5;
const DELTA_GRID_POINTS: usize = 100;
/// Eigenvalues below `RANK_TOL · max` are clamped to zero; `K` estimated
/// from standardized data is rank-deficient whenever `p < n` or rows repeat.
const RANK_TOL: f64 = 1e-10;

/// Spectral decomposition of `K` together with the fitted variance
/// components of the null model.
#[derive(Debug, Clone)]
pub struct NullModelFit {
    /// Orthonormal eigenvectors, columns matching `eigvals`.
    pub u: Array2<f64>,
    /// Eigenvalues in descending order, clamped to be nonnegative.
    pub eigvals: Array1<f64>,
    /// Fitted noise-to-signal ratio δ = σ_ε²/σ_g².
    pub delta: f64,
    /// Fitted signal variance σ_g².
    pub sigma_g2: f64,
    /// Maximized null log-likelihood.
    pub loglik: f64,
}

impl NullModelFit {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    /// Residual variance σ_ε² = δ·σ_g².
    pub fn sigma_e2(&self) -> f64 {
        self.delta * self.sigma_g2
    }
}

/// Data mapped to the isotropic-noise coordinates of a [`NullModelFit`].
#[derive(Debug, Clone)]
pub struct RotatedData {
    pub x_tilde: Array2<f64>,
    pub y_tilde: Array2<f64>,
    /// δ of the fit that produced the rotation.
    pub delta: f64,
    /// σ_g² of the fit that produced the rotation.
    pub sigma_g2: f64,
}

/// Realized-relationship estimate `K = X_s X_sᵀ / p`, where `X_s` has each
/// column standardized to mean 0 and variance 1 (constant columns are left
/// as zeros).
pub fn kinship_from_x(x: ArrayView2<'_, f64>) -> Result<KinshipMatrix> {
    let (n, p) = x.dim();
    if n == 0 || p == 0 {
        return Err(Error::EmptyData(format!("kinship_from_x needs a nonempty X, got {n}x{p}")));
    }
    for ((i, j), v) in x.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { field: "X".into(), row: i, col: j });
        }
    }
    let mut xs = x.to_owned();
    for mut col in xs.columns_mut() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
        let var = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
        if var > 0.0 {
            let inv_sd = 1.0 / var.sqrt();
            col.mapv_inplace(|v| v * inv_sd);
        } else {
            col.fill(0.0);
        }
    }
    let mut k = xs.dot(&xs.t());
    k /= p as f64;
    // Exact symmetry: gemm output can differ across the diagonal in the
    // last bits.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (k[[i, j]] + k[[j, i]]);
            k[[i, j]] = avg;
            k[[j, i]] = avg;
        }
    }
    KinshipMatrix::new(k)
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
pub(crate) fn sym_eigen_desc(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let n = m.nrows();
    let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = dm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, order[j])]);
    if vals.iter().any(|v| !v.is_finite()) || vecs.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite eigendecomposition output".into()));
    }
    Ok((vecs, vals))
}

/// Profiled log-likelihood at δ plus the closed-form σ_g²(δ).
///
/// `row_sq[i] = Σ_c Y'[i,c]²` collapses the response dimension.
fn profile(delta: f64, eigvals: &Array1<f64>, row_sq: &Array1<f64>, n: usize, k: usize) -> (f64, f64) {
    let nk = (n * k) as f64;
    let mut quad = 0.0;
    let mut logdet = 0.0;
    for (&d, &s) in eigvals.iter().zip(row_sq.iter()) {
        let dv = d + delta;
        quad += s / dv;
        logdet += dv.ln();
    }
    let sigma_g2 = quad / nk;
    if sigma_g2 <= 0.0 || !sigma_g2.is_finite() {
        return (f64::NEG_INFINITY, sigma_g2);
    }
    let ll = -0.5 * (nk * (2.0 * std::f64::consts::PI * sigma_g2).ln() + k as f64 * logdet + nk);
    (ll, sigma_g2)
}

/// Fits (δ, σ_g²) of the null model by maximum likelihood.
///
/// δ is profiled on a 100-point log grid over `[1e-5, 1e5]` and refined by
/// golden-section search (in log δ) to relative width 1e-6 inside the best
/// bracketing interval. Deterministic: no randomness is involved.
pub fn fit_null_model(k: &KinshipMatrix, y: ArrayView2<'_, f64>) -> Result<NullModelFit> {
    let n = k.n();
    let (ny, kk) = y.dim();
    if ny != n {
        return Err(Error::dim("fit_null_model rows (K vs Y)", n, ny));
    }
    if kk == 0 {
        return Err(Error::EmptyData("fit_null_model needs at least one response".into()));
    }
    let first = y[[0, 0]];
    if y.iter().all(|&v| v == first) {
        return Err(Error::DegenerateResponses(
            "all response entries are equal; sigma_g2 closed form is 0".into(),
        ));
    }

    let (u, mut eigvals) = sym_eigen_desc(k.matrix())?;
    let max_ev = eigvals.iter().fold(0.0f64, |m, &v| m.max(v));
    if eigvals.iter().any(|&v| v < -1e-8 * max_ev.max(1e-300)) {
        return Err(Error::EigenFailure(format!(
            "kinship matrix is not positive semi-definite (min eigenvalue {:.3e}, max {:.3e})",
            eigvals.iter().cloned().fold(f64::INFINITY, f64::min),
            max_ev
        )));
    }
    eigvals.mapv_inplace(|v| if v < RANK_TOL * max_ev { 0.0 } else { v });

    let yp = u.t().dot(&y);
    let row_sq = Array1::from_iter(yp.rows().into_iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()));

    let ll_of = |delta: f64| profile(delta, &eigvals, &row_sq, n, kk).0;

    // Grid scan; strict comparison keeps the lowest grid point among ties.
    let log_min = DELTA_MIN.ln();
    let log_max = DELTA_MAX.ln();
    let mut best_idx = 0;
    let mut best_ll = f64::NEG_INFINITY;
    let grid: Vec<f64> = (0..DELTA_GRID_POINTS)
        .map(|i| (log_min + (log_max - log_min) * i as f64 / (DELTA_GRID_POINTS - 1) as f64).exp())
        .collect();
    for (i, &delta) in grid.iter().enumerate() {
        let ll = ll_of(delta);
        if ll > best_ll {
            best_ll = ll;
            best_idx = i;
        }
    }
    if best_ll == f64::NEG_INFINITY {
        return Err(Error::DegenerateResponses("null-model likelihood is degenerate on the whole grid".into()));
    }

    // Golden-section refinement in log δ within the bracketing interval.
    let mut lo = grid[best_idx.saturating_sub(1)].ln();
    let mut hi = grid[(best_idx + 1).min(DELTA_GRID_POINTS - 1)].ln();
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut m1 = hi - inv_phi * (hi - lo);
    let mut m2 = lo + inv_phi * (hi - lo);
    let mut f1 = ll_of(m1.exp());
    let mut f2 = ll_of(m2.exp());
    while (hi - lo).abs() > 1e-6 {
        if f1 >= f2 {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - inv_phi * (hi - lo);
            f1 = ll_of(m1.exp());
        } else {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + inv_phi * (hi - lo);
            f2 = ll_of(m2.exp());
        }
    }
    let refined = (0.5 * (lo + hi)).exp();
    let (refined_ll, _) = profile(refined, &eigvals, &row_sq, n, kk);
    let delta = if refined_ll > best_ll { refined } else { grid[best_idx] };
    let (loglik, sigma_g2) = profile(delta, &eigvals, &row_sq, n, kk);
    if sigma_g2 <= 0.0 || !sigma_g2.is_finite() {
        return Err(Error::DegenerateResponses(format!("sigma_g2 closed form returned {sigma_g2}")));
    }

    Ok(NullModelFit { u, eigvals, delta, sigma_g2, loglik })
}

/// Applies the whitening rotation `(diag(d) + δI)^{-1/2} Uᵀ` to `X` and `Y`.
pub fn rotate(fit: &NullModelFit, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<RotatedData> {
    let n = fit.n();
    if x.nrows() != n {
        return Err(Error::dim("rotate rows (fit vs X)", n, x.nrows()));
    }
    if y.nrows() != n {
        return Err(Error::dim("rotate rows (fit vs Y)", n, y.nrows()));
    }
    let scale = Array1::from_iter(fit.eigvals.iter().map(|&d| 1.0 / (d + fit.delta).sqrt()));
    let mut x_tilde = fit.u.t().dot(&x);
    let mut y_tilde = fit.u.t().dot(&y);
    for (i, &s) in scale.iter().enumerate() {
        x_tilde.row_mut(i).mapv_inplace(|v| v * s);
        y_tilde.row_mut(i).mapv_inplace(|v| v * s);
    }
    Ok(RotatedData { x_tilde, y_tilde, delta: fit.delta, sigma_g2: fit.sigma_g2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    pub(crate) fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
    }

    /// Dense-algebra oracle for the null log-likelihood: explicit solve and
    /// log-determinant of σ_g²(K + δI), no spectral shortcut.
    fn direct_loglik(k: &Array2<f64>, y: &Array2<f64>, delta: f64, sigma_g2: f64) -> f64 {
        let n = k.nrows();
        let cols = y.ncols();
        let mut cov = k * sigma_g2;
        for i in 0..n {
            cov[[i, i]] += sigma_g2 * delta;
        }
        let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| cov[[i, j]]);
        let chol = dm.clone().cholesky().expect("covariance must be PD");
        let logdet = 2.0 * (0..n).map(|i| chol.l()[(i, i)].ln()).sum::<f64>();
        let mut ll = 0.0;
        for c in 0..cols {
            let yc = nalgebra::DVector::from_iterator(n, y.column(c).iter().cloned());
            let sol = chol.solve(&yc);
            let quad = yc.dot(&sol);
            ll += -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad);
        }
        ll
    }

    #[test]
    fn kinship_of_two_point_column() {
        let x = array![[1.0], [-1.0]];
        let k = kinship_from_x(x.view()).unwrap();
        let expect = array![[1.0, -1.0], [-1.0, 1.0]];
        for (a, b) in k.matrix().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_rows_have_identical_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = randn(5, 8, &mut rng);
        let dup = x.row(2).to_owned();
        x.row_mut(4).assign(&dup);
        let k = kinship_from_x(x.view()).unwrap();
        let m = k.matrix();
        assert!((m[[2, 2]] - m[[2, 4]]).abs() < 1e-10);
        assert!((m[[2, 2]] - m[[4, 4]]).abs() < 1e-10);
    }

    #[test]
    fn constant_column_is_ignored() {
        let x = array![[1.0, 5.0], [-1.0, 5.0]];
        let k = kinship_from_x(x.view()).unwrap();
        // The constant column contributes zeros; K = XsXs^T / 2.
        let expect = array![[0.5, -0.5], [-0.5, 0.5]];
        for (a, b) in k.matrix().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eigen_of_identity_is_exactly_identity() {
        // The identity-kinship degeneracy paths rely on this: rotation with
        // K = I is a pure rescale, not an arbitrary orthonormal mix.
        let (u, d) = sym_eigen_desc(&Array2::eye(6)).unwrap();
        for ((i, j), v) in u.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert_eq!(*v, expect);
        }
        assert!(d.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn eigen_reconstructs_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = randn(12, 20, &mut rng);
        let k = kinship_from_x(x.view()).unwrap();
        let (u, d) = sym_eigen_desc(k.matrix()).unwrap();
        // Orthonormality.
        let utu = u.t().dot(&u);
        for ((i, j), v) in utu.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-8);
        }
        // Reconstruction to 1e-6 relative Frobenius.
        let mut ud = u.clone();
        for (mut col, &dv) in ud.columns_mut().into_iter().zip(d.iter()) {
            col.mapv_inplace(|v| v * dv);
        }
        let recon = ud.dot(&u.t());
        let num: f64 = (&recon - k.matrix()).iter().map(|v| v * v).sum::<f64>().sqrt();
        let den: f64 = k.matrix().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num <= 1e-6 * den);
        // Descending order.
        for w in d.as_slice().unwrap().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn identity_kinship_marginal_variance() {
        // With K = I only σ_g²(1+δ) is identifiable: the profiled likelihood
        // is flat in δ (any grid point is a maximizer), but the implied
        // marginal variance must match the empirical variance of Y.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400;
        let kk = 4;
        let y = randn(n, kk, &mut rng) * 1.7;
        let k = KinshipMatrix::new(Array2::eye(n)).unwrap();
        let fit = fit_null_model(&k, y.view()).unwrap();
        assert!(fit.delta >= DELTA_MIN && fit.delta <= DELTA_MAX);
        let marginal = fit.sigma_g2 * (1.0 + fit.delta);
        let empirical = y.iter().map(|v| v * v).sum::<f64>() / (n * kk) as f64;
        let tol = empirical / ((n * kk) as f64).sqrt();
        assert!(
            (marginal - empirical).abs() <= 3.0 * tol,
            "marginal {marginal} vs empirical {empirical}"
        );
    }

    #[test]
    fn closed_form_sigma_matches_hand_case() {
        // k=1, n=3, eigvals (4,1,0), Y' = (2,1,1), δ=1:
        // σ_g² = (4/5 + 1/2 + 1/1)/3.
        let eigvals = array![4.0, 1.0, 0.0];
        let row_sq = array![4.0, 1.0, 1.0];
        let (_, sigma) = profile(1.0, &eigvals, &row_sq, 3, 1);
        let expect = (4.0 / 5.0 + 0.5 + 1.0) / 3.0;
        assert!((sigma - expect).abs() < 1e-15);
    }

    #[test]
    fn sigma_closed_form_is_stationary() {
        // Finite-difference ∂ℓ/∂σ_g² at the profiled value must vanish.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = randn(30, 40, &mut rng);
        let k = kinship_from_x(x.view()).unwrap();
        let y = randn(30, 3, &mut rng);
        let fit = fit_null_model(&k, y.view()).unwrap();

        let ll_at = |sg2: f64| {
            let nk = (30 * 3) as f64;
            let yp = fit.u.t().dot(&y);
            let mut quad = 0.0;
            let mut logdet = 0.0;
            for (i, &d) in fit.eigvals.iter().enumerate() {
                let dv = d + fit.delta;
                quad += yp.row(i).iter().map(|v| v * v).sum::<f64>() / dv;
                logdet += dv.ln();
            }
            -0.5 * (nk * (2.0 * std::f64::consts::PI * sg2).ln() + 3.0 * logdet + quad / sg2)
        };
        let h = fit.sigma_g2 * 1e-6;
        let deriv = (ll_at(fit.sigma_g2 + h) - ll_at(fit.sigma_g2 - h)) / (2.0 * h);
        assert!(deriv.abs() < 1e-6 * fit.loglik.abs(), "derivative {deriv}");
    }

    #[test]
    fn spectral_likelihood_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [10usize, 25, 50] {
            let x = randn(n, n + 5, &mut rng);
            let k = kinship_from_x(x.view()).unwrap();
            let y = randn(n, 2, &mut rng);
            let fit = fit_null_model(&k, y.view()).unwrap();
            let direct = direct_loglik(k.matrix(), &y, fit.delta, fit.sigma_g2);
            assert!(
                (fit.loglik - direct).abs() <= 1e-6 * direct.abs(),
                "n={n}: spectral {} vs direct {}",
                fit.loglik,
                direct
            );
        }
    }

    #[test]
    fn delta_recovery_monte_carlo() {
        // y ~ N(0, 2K + 1·I): true σ_g² = 2, δ = 0.5. Averaged over 5 seeds
        // the recovered δ must land in [0.35, 0.65].
        let n = 500;
        let kk = 10;
        let mut deltas = Vec::new();
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let a = randn(n, n, &mut rng);
            let k_raw = a.dot(&a.t()) / n as f64;
            let mut k_sym = k_raw.clone();
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = 0.5 * (k_raw[[i, j]] + k_raw[[j, i]]);
                    k_sym[[i, j]] = avg;
                    k_sym[[j, i]] = avg;
                }
            }
            let mut cov = &k_sym * 2.0;
            for i in 0..n {
                cov[[i, i]] += 1.0;
            }
            let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| cov[[i, j]]);
            let chol = dm.cholesky().unwrap();
            let l = chol.l();
            let z = randn(n, kk, &mut rng);
            let mut y = Array2::zeros((n, kk));
            for c in 0..kk {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += l[(i, j)] * z[[j, c]];
                    }
                    y[[i, c]] = acc;
                }
            }
            let kin = KinshipMatrix::new(k_sym).unwrap();
            let fit = fit_null_model(&kin, y.view()).unwrap();
            deltas.push(fit.delta);
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        assert!((0.35..=0.65).contains(&mean), "mean recovered delta {mean} ({deltas:?})");
    }

    #[test]
    fn rotation_identity_kinship_scales_by_sqrt_half() {
        let n = 6;
        let fit = NullModelFit {
            u: Array2::eye(n),
            eigvals: Array1::ones(n),
            delta: 1.0,
            sigma_g2: 1.0,
            loglik: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = randn(n, 3, &mut rng);
        let y = randn(n, 2, &mut rng);
        let rot = rotate(&fit, x.view(), y.view()).unwrap();
        for (a, b) in rot.x_tilde.iter().zip(x.iter()) {
            assert!((a - b / 2.0f64.sqrt()).abs() < 1e-12);
        }
        for (a, b) in rot.y_tilde.iter().zip(y.iter()) {
            assert!((a - b / 2.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_inverse_construction_gives_identity_columns() {
        // Rotating U·diag(sqrt(d+δ)) recovers the identity.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let x = randn(n, n + 2, &mut rng);
        let k = kinship_from_x(x.view()).unwrap();
        let (u, d) = sym_eigen_desc(k.matrix()).unwrap();
        let delta = 0.7;
        let mut m = u.clone();
        for (mut col, &dv) in m.columns_mut().into_iter().zip(d.iter()) {
            col.mapv_inplace(|v| v * (dv + delta).sqrt());
        }
        let fit = NullModelFit { u, eigvals: d, delta, sigma_g2: 1.0, loglik: 0.0 };
        let rot = rotate(&fit, m.view(), m.view()).unwrap();
        for ((i, j), v) in rot.x_tilde.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-8, "({i},{j}): {v}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = randn(20, 30, &mut rng);
        let k = kinship_from_x(x.view()).unwrap();
        let y = randn(20, 3, &mut rng);
        let f1 = fit_null_model(&k, y.view()).unwrap();
        let f2 = fit_null_model(&k, y.view()).unwrap();
        assert_eq!(f1.delta, f2.delta);
        assert_eq!(f1.sigma_g2, f2.sigma_g2);
        assert_eq!(f1.loglik, f2.loglik);
    }

    #[test]
    fn constant_responses_are_degenerate() {
        let k = KinshipMatrix::new(Array2::eye(4)).unwrap();
        let y = Array2::from_elem((4, 2), 3.5);
        assert!(matches!(
            fit_null_model(&k, y.view()),
            Err(Error::DegenerateResponses(_))
        ));
    }

    #[test]
    fn indefinite_kinship_is_an_eigen_failure() {
        let k = KinshipMatrix::new(array![[1.0, 0.0], [0.0, -1.0]]).unwrap();
        let y = array![[1.0, 2.0], [0.5, -0.3]];
        assert!(matches!(fit_null_model(&k, y.view()), Err(Error::EigenFailure(_))));
    }

    #[test]
    fn empty_x_is_rejected() {
        let x = Array2::<f64>::zeros((0, 3));
        assert!(matches!(kinship_from_x(x.view()), Err(Error::EmptyData(_))));
        let x = Array2::<f64>::zeros((3, 0));
        assert!(matches!(kinship_from_x(x.view()), Err(Error::EmptyData(_))));
    }

    #[test]
    fn rotate_rejects_mismatched_rows() {
        let fit = NullModelFit {
            u: Array2::eye(4),
            eigvals: Array1::ones(4),
            delta: 1.0,
            sigma_g2: 1.0,
            loglik: 0.0,
        };
        let x = Array2::zeros((5, 2));
        let y = Array2::zeros((4, 2));
        assert!(matches!(
            rotate(&fit, x.view(), y.view()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn whitening_reduces_covariance_to_isotropic() {
        // Data drawn with covariance σ_g²(K + δI); after rotation the
        // empirical covariance of 200 replicate columns must be σ_g²·I with
        // off-diagonal RMS < 0.1·σ_g².
        let n = 500;
        let reps = 200;
        let sigma_g2 = 1.8;
        let delta = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = randn(n, 600, &mut rng);
        let kin = kinship_from_x(x.view()).unwrap();
        let (u, d) = sym_eigen_desc(kin.matrix()).unwrap();

        // Sample y = U diag(sqrt(σ_g²(d+δ))) z so covariance is exact.
        let mut y = Array2::zeros((n, reps));
        let z = randn(n, reps, &mut rng);
        let mut scaled = u.clone();
        for (mut col, &dv) in scaled.columns_mut().into_iter().zip(d.iter()) {
            col.mapv_inplace(|v| v * (sigma_g2 * (dv.max(0.0) + delta)).sqrt());
        }
        y.assign(&scaled.dot(&z));

        let fit = NullModelFit { u, eigvals: d.mapv(|v| v.max(0.0)), delta, sigma_g2, loglik: 0.0 };
        let rot = rotate(&fit, x.view(), y.view()).unwrap();
        let cov = rot.y_tilde.dot(&rot.y_tilde.t()) / reps as f64;
        let mut off_sq = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off_sq += cov[[i, j]] * cov[[i, j]];
                    count += 1;
                }
            }
        }
        let rms = (off_sq / count as f64).sqrt();
        assert!(rms < 0.1 * sigma_g2, "off-diagonal RMS {rms} vs limit {}", 0.1 * sigma_g2);
    }
}
