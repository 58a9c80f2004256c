//! `simulate`: generate a synthetic dataset bundle.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use tgslmm_core::dataset::default_ids;
use tgslmm_core::synth::generate;

use crate::config::{snapshot_synth, synth_config, RawConfig};
use crate::error::CliResult;
use crate::io::{write_json, write_labels, write_matrix};
use crate::manifest::ManifestBuilder;

use super::{CENTROIDS_FILE, LABELS_FILE, META_FILE, TRUTH_FILE, X_FILE, Y_FILE};

#[derive(Serialize)]
struct Meta {
    command: String,
    config: BTreeMap<String, String>,
}

pub fn run(config_path: Option<&Path>, out_dir: &Path, seed_override: Option<u64>) -> CliResult<()> {
    let raw = match config_path {
        Some(path) => RawConfig::from_file(path)?,
        None => RawConfig::empty(),
    };
    run_raw(&raw, out_dir, seed_override, config_path)
}

/// Simulation entry used both by the CLI surface and the benchmark harness.
pub fn run_raw(
    raw: &RawConfig,
    out_dir: &Path,
    seed_override: Option<u64>,
    config_input: Option<&Path>,
) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("simulate");
    if let Some(path) = config_input {
        manifest.input(path)?;
    }
    let mut cfg = synth_config(raw)?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let snapshot = snapshot_synth(&cfg);
    manifest.config(snapshot.clone());

    let out = generate(&cfg)?;
    let ds = &out.dataset;

    let x_path = out_dir.join(X_FILE);
    write_matrix(&x_path, &ds.x, &ds.sample_ids, &ds.variable_ids, "id")?;
    let y_path = out_dir.join(Y_FILE);
    write_matrix(&y_path, &ds.y, &ds.sample_ids, &ds.response_ids, "id")?;
    let truth_path = out_dir.join(TRUTH_FILE);
    let truth = ds.truth.as_ref().expect("generator always sets truth");
    write_matrix(&truth_path, &truth.beta, &truth.variable_ids, &truth.response_ids, "id")?;
    let labels_path = out_dir.join(LABELS_FILE);
    write_labels(&labels_path, &ds.sample_ids, &out.group_labels)?;
    let centroids_path = out_dir.join(CENTROIDS_FILE);
    let centroid_ids = default_ids("g", cfg.m);
    write_matrix(&centroids_path, &out.centroids, &centroid_ids, &ds.variable_ids, "id")?;
    let meta_path = out_dir.join(META_FILE);
    write_json(&meta_path, &Meta { command: "simulate".into(), config: snapshot })?;

    for path in [&x_path, &y_path, &truth_path, &labels_path, &centroids_path, &meta_path] {
        manifest.output(path);
    }
    manifest.write(out_dir)
}
