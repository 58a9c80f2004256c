pub mod benchmark;
pub mod eval;
pub mod fit;
pub mod simulate;

use std::path::Path;

use tgslmm_core::dataset::validate_dataset;
use tgslmm_core::{DataSet, EffectMatrix};

use crate::error::{CliError, CliResult};
use crate::io::read_matrix;

pub const X_FILE: &str = "X.csv";
pub const Y_FILE: &str = "Y.csv";
pub const TRUTH_FILE: &str = "beta_truth.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const CENTROIDS_FILE: &str = "centroids.csv";
pub const META_FILE: &str = "meta.json";

/// Loads a dataset bundle directory (as written by `simulate`). The truth
/// matrix is attached when present.
pub fn load_dataset(dir: &Path) -> CliResult<DataSet> {
    let (x, sample_ids, variable_ids) = read_matrix(&dir.join(X_FILE))?;
    let (y, y_rows, response_ids) = read_matrix(&dir.join(Y_FILE))?;
    if y_rows != sample_ids {
        return Err(CliError::Data(format!(
            "{}: Y.csv row ids do not match X.csv row ids",
            dir.display()
        )));
    }
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.is_file() {
        let (beta, rows, cols) = read_matrix(&truth_path)?;
        if rows != variable_ids || cols != response_ids {
            return Err(CliError::Data(format!(
                "{}: beta_truth.csv ids do not match X.csv/Y.csv",
                dir.display()
            )));
        }
        Some(EffectMatrix::new(beta, rows, cols).map_err(CliError::from)?)
    } else {
        None
    };
    let ds = DataSet { x, y, sample_ids, variable_ids, response_ids, truth };
    validate_dataset(&ds)?;
    Ok(ds)
}

/// Loads an effect matrix file (row ids = variables, column ids = responses).
pub fn load_effects(path: &Path) -> CliResult<EffectMatrix> {
    let (beta, rows, cols) = read_matrix(path)?;
    EffectMatrix::new(beta, rows, cols).map_err(CliError::from)
}
