//! `fit`: estimate effects on a dataset bundle with one of the four
//! methods.

use std::path::{Path, PathBuf};

use serde::Serialize;
use tgslmm_core::models::{fit, FitOverrides, LambdaGrid, MethodKind, MethodSpec};
use tgslmm_core::{DataSet, FitOutput, KinshipMatrix};

use crate::config::{snapshot_solver, RawConfig, SolverSettings};
use crate::error::{CliError, CliResult};
use crate::io::{read_matrix, write_json, write_matrix};
use crate::manifest::ManifestBuilder;
use crate::treefile::{load_tree, save_tree};

pub const BETA_FILE: &str = "beta_hat.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const TREE_FILE: &str = "tree.json";

/// Flag-level arguments; every `Option` falls back to the config-file value
/// and then to the default.
#[derive(Debug, Clone, Default)]
pub struct FitArgs {
    pub dataset: PathBuf,
    pub method: String,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
    pub lambda_grid: Option<String>,
    pub lambda_points: Option<usize>,
    pub lambda_ratio: Option<f64>,
    pub mu: Option<f64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub tree_cut: Option<f64>,
    pub cluster_rotated: bool,
    pub tree_file: Option<PathBuf>,
    pub kinship_file: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidationPoint {
    lambda: f64,
    mse: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    method: String,
    chosen_lambda: f64,
    mu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma_g2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    null_loglik: Option<f64>,
    iterations: usize,
    converged: bool,
    validation: Vec<ValidationPoint>,
    objective_trace: Vec<f64>,
}

pub fn settings_from(args_config: Option<&Path>, args: &FitArgs) -> CliResult<SolverSettings> {
    let raw = match args_config {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::empty(),
    };
    let mut settings = SolverSettings::from_config(&raw)?;
    if let Some(grid) = &args.lambda_grid {
        let mut parsed = Vec::new();
        for item in grid.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            parsed.push(
                item.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("--lambda-grid: cannot parse {item:?}")))?,
            );
        }
        settings.lambda_grid = LambdaGrid::Explicit(parsed);
    } else if args.lambda_points.is_some() || args.lambda_ratio.is_some() {
        let (mut points, mut ratio) = match settings.lambda_grid {
            LambdaGrid::Auto { points, ratio } => (points, ratio),
            _ => (20, 100.0),
        };
        if let Some(p) = args.lambda_points {
            points = p;
        }
        if let Some(r) = args.lambda_ratio {
            ratio = r;
        }
        settings.lambda_grid = LambdaGrid::Auto { points, ratio };
    }
    if let Some(mu) = args.mu {
        settings.mu = Some(mu);
    }
    if let Some(max_iter) = args.max_iter {
        settings.max_iter = max_iter;
    }
    if let Some(tol) = args.tol {
        settings.tol = tol;
    }
    if let Some(seed) = args.seed {
        settings.seed = seed;
    }
    if let Some(cut) = args.tree_cut {
        settings.tree_cut = cut;
    }
    if args.cluster_rotated {
        settings.cluster_rotated = true;
    }
    Ok(settings)
}

pub fn method_spec(kind: MethodKind, settings: &SolverSettings) -> MethodSpec {
    let mut spec = MethodSpec::new(kind, settings.solver_config(), settings.lambda_grid.clone());
    spec.tree_cut = settings.tree_cut;
    spec.auto_mu = settings.mu.is_none();
    spec.rotate_before_clustering = settings.cluster_rotated;
    spec
}

pub fn load_kinship(path: &Path, n: usize) -> CliResult<KinshipMatrix> {
    let (k, rows, cols) = read_matrix(path)?;
    if rows.len() != n || cols.len() != n {
        return Err(CliError::Data(format!(
            "{}: kinship must be {n}x{n}, found {}x{}",
            path.display(),
            rows.len(),
            cols.len()
        )));
    }
    KinshipMatrix::new(k).map_err(CliError::from)
}

/// Writes `beta_hat.csv`, `diagnostics.json`, and `tree.json` for a fit.
pub fn write_fit_outputs(out_dir: &Path, ds: &DataSet, output: &FitOutput) -> CliResult<Vec<PathBuf>> {
    let beta_path = out_dir.join(BETA_FILE);
    write_matrix(
        &beta_path,
        &output.beta.beta,
        &output.beta.variable_ids,
        &output.beta.response_ids,
        "id",
    )?;
    let diag = &output.diagnostics;
    let diag_path = out_dir.join(DIAGNOSTICS_FILE);
    write_json(
        &diag_path,
        &Diagnostics {
            method: diag.method.name().to_string(),
            chosen_lambda: diag.chosen_lambda,
            mu: diag.mu,
            delta: diag.delta,
            sigma_g2: diag.sigma_g2,
            null_loglik: diag.null_loglik,
            iterations: diag.iterations,
            converged: diag.converged,
            validation: diag
                .validation_mse
                .iter()
                .map(|&(lambda, mse)| ValidationPoint { lambda, mse })
                .collect(),
            objective_trace: diag.objective_trace.clone(),
        },
    )?;
    let tree_path = out_dir.join(TREE_FILE);
    save_tree(&tree_path, &diag.tree, &ds.response_ids)?;
    Ok(vec![beta_path, diag_path, tree_path])
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let kind = MethodKind::parse(&args.method)
        .ok_or_else(|| CliError::Usage(format!("unknown method {:?}", args.method)))?;
    let settings = settings_from(args.config.as_deref(), args)?;

    let mut manifest = ManifestBuilder::new("fit");
    manifest.config(snapshot_solver(&settings));
    manifest.config_entry("method", kind.name());
    manifest.config_entry("dataset", args.dataset.display());
    for input in [&args.config, &args.tree_file, &args.kinship_file].into_iter().flatten() {
        manifest.input(input)?;
    }
    for file in [super::X_FILE, super::Y_FILE] {
        manifest.input(&args.dataset.join(file))?;
    }

    let ds = super::load_dataset(&args.dataset)?;
    let tree_override = match &args.tree_file {
        Some(path) => Some(load_tree(path, &ds.response_ids)?),
        None => None,
    };
    let kinship_override = match &args.kinship_file {
        Some(path) => Some(load_kinship(path, ds.n_samples())?),
        None => None,
    };

    let spec = method_spec(kind, &settings);
    let output = fit(
        &ds,
        &spec,
        FitOverrides { kinship: kinship_override.as_ref(), tree: tree_override.as_ref() },
    )?;

    let outputs = write_fit_outputs(&args.out, &ds, &output)?;
    for path in &outputs {
        manifest.output(path);
    }
    manifest.write(&args.out)
}
