//! `eval`: score an estimated effect matrix against ground truth.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tgslmm_core::eval::{evaluate, per_response_auc, roc_curve, Curves, EvalReport};
use tgslmm_core::EffectMatrix;

use crate::error::CliResult;
use crate::io::{write_curve, write_json};
use crate::manifest::ManifestBuilder;

pub const REPORT_FILE: &str = "report.json";
pub const ROC_FILE: &str = "roc.csv";
pub const PR_FILE: &str = "pr.csv";

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub estimate: PathBuf,
    pub truth: PathBuf,
    pub out: PathBuf,
    pub per_response: bool,
    pub dataset: Option<PathBuf>,
    pub method_label: String,
    pub seed: u64,
}

#[derive(Serialize, serde::Deserialize)]
pub struct ReportJson {
    pub method: String,
    pub seed: u64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub beta_mse: f64,
    pub pred_mse: Option<f64>,
    pub roc_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_response_auc: Option<Vec<Option<f64>>>,
}

/// Writes `report.json`, `roc.csv`, `pr.csv`; returns the paths.
pub fn write_eval_outputs(
    out_dir: &Path,
    report: &EvalReport,
    curves: &Curves,
    per_response: Option<Vec<Option<f64>>>,
) -> CliResult<Vec<PathBuf>> {
    let report_path = out_dir.join(REPORT_FILE);
    write_json(
        &report_path,
        &ReportJson {
            method: report.method.clone(),
            seed: report.seed,
            auc_roc: report.auc_roc,
            auc_pr: report.auc_pr,
            beta_mse: report.beta_mse,
            pred_mse: report.pred_mse,
            roc_points: report.roc_points.len(),
            per_response_auc: per_response,
        },
    )?;

    let roc_path = out_dir.join(ROC_FILE);
    let mut rows = vec![vec![f64::INFINITY, 0.0, 0.0]];
    for (i, &(fpr, tpr)) in curves.roc_points.iter().skip(1).enumerate() {
        rows.push(vec![curves.thresholds[i], fpr, tpr]);
    }
    write_curve(&roc_path, &["threshold", "fpr", "tpr"], &rows)?;

    let pr_path = out_dir.join(PR_FILE);
    let rows: Vec<Vec<f64>> = curves
        .pr_points
        .iter()
        .enumerate()
        .map(|(i, &(recall, precision))| vec![curves.thresholds[i], recall, precision])
        .collect();
    write_curve(&pr_path, &["threshold", "recall", "precision"], &rows)?;

    Ok(vec![report_path, roc_path, pr_path])
}

/// Report, curves, and optional per-response AUCs from one evaluation.
pub type Evaluation = (EvalReport, Curves, Option<Vec<Option<f64>>>);

/// Core of the eval command, reusable by the benchmark harness.
pub fn evaluate_effects(
    estimate: &EffectMatrix,
    truth: &EffectMatrix,
    predictions: Option<(ndarray::ArrayView2<'_, f64>, ndarray::ArrayView2<'_, f64>)>,
    method: &str,
    seed: u64,
    per_response: bool,
) -> CliResult<Evaluation> {
    let report = evaluate(estimate, truth, predictions, method, seed)?;
    let curves = roc_curve(estimate, truth)?;
    let per_resp = if per_response { Some(per_response_auc(estimate, truth)?) } else { None };
    Ok((report, curves, per_resp))
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("eval");
    manifest.input(&args.estimate)?;
    manifest.input(&args.truth)?;
    manifest.config_entry("per_response", args.per_response);
    manifest.config_entry("method", &args.method_label);
    manifest.config_entry("seed", args.seed);

    let estimate = super::load_effects(&args.estimate)?;
    let truth = super::load_effects(&args.truth)?;

    let dataset = match &args.dataset {
        Some(dir) => Some(super::load_dataset(dir)?),
        None => None,
    };
    let predictions = match &dataset {
        Some(ds) => Some(tgslmm_core::predict(ds, &estimate)?),
        None => None,
    };
    let prediction_views = match (&dataset, &predictions) {
        (Some(ds), Some(pred)) => Some((pred.view(), ds.y.view())),
        _ => None,
    };

    let (report, curves, per_resp) = evaluate_effects(
        &estimate,
        &truth,
        prediction_views,
        &args.method_label,
        args.seed,
        args.per_response,
    )?;

    let outputs = write_eval_outputs(&args.out, &report, &curves, per_resp)?;
    for path in &outputs {
        manifest.output(path);
    }
    manifest.write(&args.out)
}
