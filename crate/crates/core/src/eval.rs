//! Scoring of estimated effect matrices against ground truth: ROC and PR
//! curves by threshold sweep on `|β̂|`, plus squared-error metrics.
//!
//! Selection is treated as binary classification over all `p·k` entries:
//! an entry is predicted active when its absolute estimated effect exceeds
//! the threshold, and truly active when the ground-truth entry is nonzero.
//! Tied `|β̂|` values are processed as a single threshold step, which makes
//! the trapezoidal ROC area coincide with the tie-corrected Mann-Whitney
//! statistic.

use ndarray::ArrayView2;

use crate::dataset::EffectMatrix;
use crate::error::{Error, Result};

/// ROC/PR curves and areas for one estimate-versus-truth comparison.
#[derive(Debug, Clone)]
pub struct Curves {
    /// `(fpr, tpr)` points from `(0,0)` to `(1,1)`.
    pub roc_points: Vec<(f64, f64)>,
    /// `(recall, precision)` points, one per threshold step.
    pub pr_points: Vec<(f64, f64)>,
    /// Thresholds matching the sweep steps (descending `|β̂|`).
    pub thresholds: Vec<f64>,
    pub auc_roc: f64,
    pub auc_pr: f64,
}

/// Full evaluation of one method on one dataset.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub roc_points: Vec<(f64, f64)>,
    pub pr_points: Vec<(f64, f64)>,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub beta_mse: f64,
    /// Mean squared prediction error; `None` when no predictions were made.
    pub pred_mse: Option<f64>,
    pub method: String,
    pub seed: u64,
}

fn check_same_shape(estimate: &EffectMatrix, truth: &EffectMatrix) -> Result<()> {
    if estimate.beta.dim() != truth.beta.dim() {
        return Err(Error::dim(
            "eval shapes (estimate vs truth)",
            format!("{}x{}", truth.beta.nrows(), truth.beta.ncols()),
            format!("{}x{}", estimate.beta.nrows(), estimate.beta.ncols()),
        ));
    }
    Ok(())
}

fn sweep(scored: &mut [(f64, bool)]) -> Result<Curves> {
    let positives = scored.iter().filter(|(_, t)| *t).count();
    let negatives = scored.len() - positives;
    if positives == 0 {
        return Err(Error::DegenerateTruth("no nonzero entries in truth".into()));
    }
    if negatives == 0 {
        return Err(Error::DegenerateTruth("no zero entries in truth".into()));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut roc = vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let (mut prev_fpr, mut prev_tpr) = (0.0f64, 0.0f64);

    let mut i = 0;
    while i < scored.len() {
        let score = scored[i].0;
        // Consume the whole tie group at this threshold.
        while i < scored.len() && scored[i].0 == score {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / positives as f64;
        let fpr = fp as f64 / negatives as f64;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        roc.push((fpr, tpr));
        pr.push((tpr, tp as f64 / (tp + fp) as f64));
        thresholds.push(score);
        prev_fpr = fpr;
        prev_tpr = tpr;
    }

    let mut auc_pr = 0.0;
    let mut prev = (0.0f64, pr[0].1);
    for &(recall, precision) in &pr {
        auc_pr += (recall - prev.0) * (precision + prev.1) / 2.0;
        prev = (recall, precision);
    }

    Ok(Curves { roc_points: roc, pr_points: pr, thresholds, auc_roc: auc, auc_pr })
}

/// Threshold sweep over all `p·k` entries pooled together.
pub fn roc_curve(estimate: &EffectMatrix, truth: &EffectMatrix) -> Result<Curves> {
    check_same_shape(estimate, truth)?;
    let mut scored: Vec<(f64, bool)> = estimate
        .beta
        .iter()
        .zip(truth.beta.iter())
        .map(|(e, t)| (e.abs(), *t != 0.0))
        .collect();
    sweep(&mut scored)
}

/// Per-response AUCs (the per-trait protocol); columns whose truth is all
/// zero or all nonzero yield `None`.
pub fn per_response_auc(estimate: &EffectMatrix, truth: &EffectMatrix) -> Result<Vec<Option<f64>>> {
    check_same_shape(estimate, truth)?;
    let mut out = Vec::with_capacity(truth.beta.ncols());
    for c in 0..truth.beta.ncols() {
        let mut scored: Vec<(f64, bool)> = estimate
            .beta
            .column(c)
            .iter()
            .zip(truth.beta.column(c).iter())
            .map(|(e, t)| (e.abs(), *t != 0.0))
            .collect();
        match sweep(&mut scored) {
            Ok(curves) => out.push(Some(curves.auc_roc)),
            Err(Error::DegenerateTruth(_)) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// `(1/(p·k)) Σ (β̂ − β)²`.
pub fn beta_mse(estimate: &EffectMatrix, truth: &EffectMatrix) -> Result<f64> {
    check_same_shape(estimate, truth)?;
    let n = estimate.beta.len() as f64;
    let sum: f64 = estimate
        .beta
        .iter()
        .zip(truth.beta.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// Mean squared entrywise difference between predicted and observed
/// responses.
pub fn pred_mse(y_hat: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    if y_hat.dim() != y.dim() {
        return Err(Error::dim(
            "pred_mse shapes",
            format!("{}x{}", y.nrows(), y.ncols()),
            format!("{}x{}", y_hat.nrows(), y_hat.ncols()),
        ));
    }
    let n = y.len() as f64;
    let sum: f64 = y_hat.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sum / n)
}

/// Builds a full report for one method run.
pub fn evaluate(
    estimate: &EffectMatrix,
    truth: &EffectMatrix,
    predictions: Option<(ArrayView2<'_, f64>, ArrayView2<'_, f64>)>,
    method: &str,
    seed: u64,
) -> Result<EvalReport> {
    let curves = roc_curve(estimate, truth)?;
    let beta = beta_mse(estimate, truth)?;
    let pred = match predictions {
        Some((y_hat, y)) => Some(pred_mse(y_hat, y)?),
        None => None,
    };
    Ok(EvalReport {
        roc_points: curves.roc_points,
        pr_points: curves.pr_points,
        auc_roc: curves.auc_roc,
        auc_pr: curves.auc_pr,
        beta_mse: beta,
        pred_mse: pred,
        method: method.to_string(),
        seed,
    })
}
