//! Command-line front end for the tree-guided sparse linear mixed model
//! toolkit: `simulate`, `fit`, `eval`, and `benchmark`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod treefile;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::commands::eval::EvalArgs;
use crate::commands::fit::FitArgs;
use crate::error::CliResult;

#[derive(Parser)]
#[command(
    name = "tgslmm",
    version,
    about = "Tree-guided sparse linear mixed models: simulate, fit, evaluate, benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset bundle (X.csv, Y.csv, beta_truth.csv,
    /// labels.csv, centroids.csv, meta.json).
    Simulate {
        /// key=value config file; missing keys use the default setting.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for the bundle.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit one method on a dataset bundle.
    Fit {
        /// Dataset bundle directory (from `simulate`, or hand-assembled).
        #[arg(long)]
        dataset: PathBuf,
        /// One of: lasso, tree-lasso, lmm-lasso, tgslmm.
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: PathBuf,
        /// key=value config file with solver settings (flags win).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Explicit comma-separated descending λ grid.
        #[arg(long)]
        lambda_grid: Option<String>,
        /// Points in the automatic geometric λ grid.
        #[arg(long)]
        lambda_points: Option<usize>,
        /// Total decay ratio of the automatic λ grid.
        #[arg(long)]
        lambda_ratio: Option<f64>,
        /// Smoothing parameter; defaults to an automatic scale.
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Dendrogram cut in [0, 1] for tree methods.
        #[arg(long)]
        tree_cut: Option<f64>,
        /// Cluster responses after rotation instead of before.
        #[arg(long)]
        cluster_rotated: bool,
        /// Tree JSON file overriding response clustering.
        #[arg(long)]
        tree_file: Option<PathBuf>,
        /// Kinship CSV (n×n) overriding the realized-relationship estimate.
        #[arg(long)]
        kinship_file: Option<PathBuf>,
    },
    /// Score an estimated effect matrix against ground truth.
    Eval {
        /// Estimated effects CSV (e.g. beta_hat.csv).
        #[arg(long)]
        estimate: PathBuf,
        /// Ground-truth effects CSV (e.g. beta_truth.csv).
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also report one ROC AUC per response column.
        #[arg(long)]
        per_response: bool,
        /// Dataset bundle for prediction error (optional).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Method name recorded in the report.
        #[arg(long, default_value = "estimate")]
        method_label: String,
        /// Seed recorded in the report.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sweep configurations × seeds × methods: simulate, fit, evaluate,
    /// aggregate. Honors TGSLMM_THREADS for the worker pool.
    Benchmark {
        /// key=value config with sweeps, methods, seeds, solver settings.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            commands::simulate::run(config.as_deref(), &out, seed)
        }
        Command::Fit {
            dataset,
            method,
            out,
            config,
            lambda_grid,
            lambda_points,
            lambda_ratio,
            mu,
            max_iter,
            tol,
            seed,
            tree_cut,
            cluster_rotated,
            tree_file,
            kinship_file,
        } => commands::fit::run(&FitArgs {
            dataset,
            method,
            out,
            config,
            lambda_grid,
            lambda_points,
            lambda_ratio,
            mu,
            max_iter,
            tol,
            seed,
            tree_cut,
            cluster_rotated,
            tree_file,
            kinship_file,
        }),
        Command::Eval { estimate, truth, out, per_response, dataset, method_label, seed } => {
            commands::eval::run(&EvalArgs {
                estimate,
                truth,
                out,
                per_response,
                dataset,
                method_label,
                seed,
            })
        }
        Command::Benchmark { config, out } => commands::benchmark::run(&config, &out),
    }
}

/// Parses arguments and runs; returns the process exit code
/// (0 success, 1 usage error, 2 data error).
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{err}");
            return 0;
        }
        Err(err) => {
            eprint!("{err}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.exit_code()
        }
    }
}
