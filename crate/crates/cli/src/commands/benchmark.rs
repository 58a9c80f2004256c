//! `benchmark`: sweep configurations × seeds × methods through
//! simulate → fit → eval, then aggregate mean AUCs and mean ROC curves.
//!
//! Every `(configuration, seed)` pair owns a data directory and every
//! `(configuration, seed, method)` a run directory; a run whose manifest
//! exists is skipped, so interrupted sweeps resume where they stopped.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tgslmm_core::models::{fit, FitOverrides, MethodKind};

use crate::config::{snapshot_solver, synth_config, RawConfig, SolverSettings};
use crate::error::{CliError, CliResult};
use crate::io::write_table;
use crate::manifest::{manifest_exists, ManifestBuilder};

use super::eval::{evaluate_effects, write_eval_outputs, ReportJson, REPORT_FILE, ROC_FILE};
use super::fit::{method_spec, write_fit_outputs};

pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MEAN_ROC_FILE: &str = "mean_roc.csv";
/// Fixed FPR grid for vertical ROC averaging.
const FPR_GRID_POINTS: usize = 101;
const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Keys a sweep is allowed to vary.
const SWEEPABLE: [&str; 9] =
    ["n", "p", "k", "m", "d", "sigma_e2", "sigma_y2", "sigma_eps2", "base_effect"];

#[derive(Debug, Clone)]
pub struct BenchmarkPlan {
    /// `(label, generator config)` pairs, in deterministic order.
    pub configurations: Vec<(String, RawConfig)>,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodKind>,
    pub settings: SolverSettings,
}

impl BenchmarkPlan {
    pub fn from_config(raw: &RawConfig) -> CliResult<Self> {
        let mut base = RawConfig::empty();
        let mut sweeps: Vec<(String, Vec<String>)> = Vec::new();
        for key in raw.keys() {
            if let Some(param) = key.strip_prefix("sweep.") {
                if !SWEEPABLE.contains(&param) {
                    return Err(CliError::Usage(format!("cannot sweep over {param:?}")));
                }
                sweeps.push((param.to_string(), raw.list(key).unwrap_or_default()));
            } else if key != "methods" && key != "seeds" {
                base.set(key, raw.get(key).unwrap().to_string());
            }
        }

        let mut configurations = Vec::new();
        if sweeps.is_empty() {
            configurations.push(("default".to_string(), base.clone()));
        } else {
            for (param, values) in &sweeps {
                if values.is_empty() {
                    return Err(CliError::Usage(format!("sweep.{param} has no values")));
                }
                for value in values {
                    let mut cfg = base.clone();
                    cfg.set(param, value.clone());
                    configurations.push((format!("{param}={value}"), cfg));
                }
            }
        }
        // Each configuration must parse up front.
        for (label, cfg) in &configurations {
            synth_config(cfg)
                .map_err(|e| CliError::Usage(format!("configuration {label}: {e}")))?;
        }

        let methods = match raw.list("methods") {
            Some(names) => {
                let mut methods = Vec::new();
                for name in names {
                    methods.push(
                        MethodKind::parse(&name)
                            .ok_or_else(|| CliError::Usage(format!("unknown method {name:?}")))?,
                    );
                }
                methods
            }
            None => MethodKind::ALL.to_vec(),
        };
        let seeds = match raw.list("seeds") {
            Some(items) => {
                let mut seeds = Vec::new();
                for item in items {
                    seeds.push(
                        item.parse::<u64>()
                            .map_err(|_| CliError::Usage(format!("bad seed {item:?}")))?,
                    );
                }
                seeds
            }
            None => DEFAULT_SEEDS.to_vec(),
        };
        let settings = SolverSettings::from_config(raw)?;
        Ok(BenchmarkPlan { configurations, seeds, methods, settings })
    }
}

fn unit_dir(out_dir: &Path, label: &str, seed: u64) -> PathBuf {
    out_dir.join("runs").join(label).join(format!("seed_{seed}"))
}

/// Runs one `(configuration, seed)` unit: simulate (or reuse) the dataset,
/// then fit and evaluate every method that has no manifest yet.
fn run_unit(
    out_dir: &Path,
    label: &str,
    cfg_raw: &RawConfig,
    seed: u64,
    methods: &[MethodKind],
    settings: &SolverSettings,
) -> CliResult<()> {
    let unit = unit_dir(out_dir, label, seed);
    let data_dir = unit.join("data");
    if !manifest_exists(&data_dir) {
        let mut merged = cfg_raw.clone();
        merged.set("seed", seed.to_string());
        super::simulate::run_raw(&merged, &data_dir, None, None)?;
    }
    let ds = super::load_dataset(&data_dir)?;
    let truth = ds
        .truth
        .clone()
        .ok_or_else(|| CliError::Data(format!("{}: benchmark data has no truth", data_dir.display())))?;

    for &kind in methods {
        let run_dir = unit.join(kind.name());
        if manifest_exists(&run_dir) {
            continue;
        }
        let mut run_settings = settings.clone();
        run_settings.seed = seed;
        let spec = method_spec(kind, &run_settings);
        let mut manifest = ManifestBuilder::new("benchmark-run");
        manifest.config(snapshot_solver(&run_settings));
        manifest.config_entry("configuration", label);
        manifest.config_entry("method", kind.name());
        manifest.config_entry("seed", seed);
        for file in [super::X_FILE, super::Y_FILE, super::TRUTH_FILE] {
            manifest.input(&data_dir.join(file))?;
        }

        let output = fit(&ds, &spec, FitOverrides::default())?;
        let mut outputs = write_fit_outputs(&run_dir, &ds, &output)?;

        let predictions = tgslmm_core::predict(&ds, &output.beta)?;
        let (report, curves, _) = evaluate_effects(
            &output.beta,
            &truth,
            Some((predictions.view(), ds.y.view())),
            kind.name(),
            seed,
            false,
        )?;
        outputs.extend(write_eval_outputs(&run_dir, &report, &curves, None)?);
        for path in &outputs {
            manifest.output(path);
        }
        manifest.write(&run_dir)?;
    }
    Ok(())
}

/// TPR at a given FPR by linear interpolation; vertical segments collapse
/// to their highest TPR.
fn tpr_at(points: &[(f64, f64)], fpr: f64) -> f64 {
    let mut collapsed: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &(f, t) in points {
        match collapsed.last_mut() {
            Some((lf, lt)) if *lf == f => *lt = lt.max(t),
            _ => collapsed.push((f, t)),
        }
    }
    if fpr <= collapsed[0].0 {
        return collapsed[0].1;
    }
    for w in collapsed.windows(2) {
        let (f0, t0) = w[0];
        let (f1, t1) = w[1];
        if fpr <= f1 {
            if f1 == f0 {
                return t1;
            }
            return t0 + (t1 - t0) * (fpr - f0) / (f1 - f0);
        }
    }
    collapsed.last().map(|&(_, t)| t).unwrap_or(1.0)
}

fn read_roc_points(path: &Path) -> CliResult<Vec<(f64, f64)>> {
    let raw = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(raw.as_slice());
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let fpr: f64 = record[1]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad fpr {:?}", path.display(), &record[1])))?;
        let tpr: f64 = record[2]
            .parse()
            .map_err(|_| CliError::Data(format!("{}: bad tpr {:?}", path.display(), &record[2])))?;
        points.push((fpr, tpr));
    }
    if points.is_empty() {
        return Err(CliError::Data(format!("{}: empty ROC curve", path.display())));
    }
    Ok(points)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn aggregate(out_dir: &Path, plan: &BenchmarkPlan) -> CliResult<()> {
    let mut summary_rows: Vec<Vec<String>> = Vec::new();
    let mut roc_rows: Vec<Vec<String>> = Vec::new();
    for (label, _) in &plan.configurations {
        for &kind in &plan.methods {
            let mut aucs = Vec::new();
            let mut auc_prs = Vec::new();
            let mut beta_mses = Vec::new();
            let mut pred_mses = Vec::new();
            let mut tprs_per_seed: Vec<Vec<f64>> = Vec::new();
            for &seed in &plan.seeds {
                let run_dir = unit_dir(out_dir, label, seed).join(kind.name());
                let report_path = run_dir.join(REPORT_FILE);
                let raw = fs::read_to_string(&report_path).map_err(|e| CliError::io(&report_path, e))?;
                let report: ReportJson = serde_json::from_str(&raw)?;
                aucs.push(report.auc_roc);
                auc_prs.push(report.auc_pr);
                beta_mses.push(report.beta_mse);
                if let Some(p) = report.pred_mse {
                    pred_mses.push(p);
                }
                let points = read_roc_points(&run_dir.join(ROC_FILE))?;
                tprs_per_seed.push(
                    (0..FPR_GRID_POINTS)
                        .map(|i| tpr_at(&points, i as f64 / (FPR_GRID_POINTS - 1) as f64))
                        .collect(),
                );
            }
            summary_rows.push(vec![
                label.clone(),
                kind.name().to_string(),
                plan.seeds.len().to_string(),
                format!("{}", mean(&aucs)),
                format!("{}", mean(&auc_prs)),
                format!("{}", mean(&beta_mses)),
                if pred_mses.is_empty() { String::new() } else { format!("{}", mean(&pred_mses)) },
            ]);
            for i in 0..FPR_GRID_POINTS {
                let fpr = i as f64 / (FPR_GRID_POINTS - 1) as f64;
                let column: Vec<f64> = tprs_per_seed.iter().map(|t| t[i]).collect();
                roc_rows.push(vec![
                    label.clone(),
                    kind.name().to_string(),
                    format!("{fpr}"),
                    format!("{}", mean(&column)),
                ]);
            }
        }
    }
    write_table(
        &out_dir.join(AGGREGATE_FILE),
        &["configuration", "method", "seeds", "mean_auc_roc", "mean_auc_pr", "mean_beta_mse", "mean_pred_mse"],
        &summary_rows,
    )?;
    write_table(
        &out_dir.join(MEAN_ROC_FILE),
        &["configuration", "method", "fpr", "mean_tpr"],
        &roc_rows,
    )
}

pub fn run(config_path: &Path, out_dir: &Path) -> CliResult<()> {
    if let Ok(threads) = std::env::var("TGSLMM_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }
    let raw = RawConfig::from_file(config_path)?;
    let plan = BenchmarkPlan::from_config(&raw)?;

    let mut manifest = ManifestBuilder::new("benchmark");
    manifest.input(config_path)?;
    let mut snapshot = BTreeMap::new();
    for key in raw.keys() {
        snapshot.insert(key.to_string(), raw.get(key).unwrap().to_string());
    }
    manifest.config(snapshot);

    let units: Vec<(&str, &RawConfig, u64)> = plan
        .configurations
        .iter()
        .flat_map(|(label, cfg)| plan.seeds.iter().map(move |&s| (label.as_str(), cfg, s)))
        .collect();
    units
        .par_iter()
        .try_for_each(|&(label, cfg, seed)| {
            run_unit(out_dir, label, cfg, seed, &plan.methods, &plan.settings)
        })?;

    aggregate(out_dir, &plan)?;
    manifest.output(&out_dir.join(AGGREGATE_FILE));
    manifest.output(&out_dir.join(MEAN_ROC_FILE));
    manifest.write(out_dir)
}
