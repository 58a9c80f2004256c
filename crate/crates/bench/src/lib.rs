//! Shared instance builders for the criterion benchmarks.

use ndarray::Array2;
use tgslmm_core::synth::{generate, SynthConfig, SynthOutput};
use tgslmm_core::{cluster_responses, ResponseTree};

/// Desk-scale confounded instance (n=250, p=500, k=50).
pub fn desk_instance(seed: u64) -> SynthOutput {
    let cfg = SynthConfig { n: 250, p: 500, k: 50, seed, ..SynthConfig::default() };
    generate(&cfg).expect("valid config")
}

/// Small instance for per-iteration paths.
pub fn small_instance(seed: u64) -> SynthOutput {
    let cfg = SynthConfig {
        n: 100,
        p: 80,
        k: 12,
        m: 4,
        density: 0.1,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg).expect("valid config")
}

/// Response tree clustered from an instance's responses.
pub fn clustered_tree(y: &Array2<f64>, cut: f64) -> ResponseTree {
    cluster_responses(y.view(), cut).expect("clusterable responses")
}
