//! Flat `key=value` configuration files and the resolved-parameter
//! snapshots recorded in `meta.json` and manifests.
//!
//! Keys mirror the benchmark parameter names (`n`, `p`, `k`, `m`, `d`,
//! `sigma_e2`, `sigma_y2`, `sigma_eps2`) plus generator and solver knobs.
//! Lines are `key = value`; `#` starts a comment.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use tgslmm_core::models::LambdaGrid;
use tgslmm_core::{SolverConfig, SynthConfig};

use crate::error::{CliError, CliResult};

/// Parsed key-value pairs with typed accessors; remembers which keys were
/// consumed so unknown keys can be rejected.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pairs: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn empty() -> Self {
        RawConfig::default()
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut pairs = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value, got {line:?}", no + 1))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(format!("line {}: empty key", no + 1));
            }
            if pairs.insert(key.clone(), value).is_some() {
                return Err(format!("line {}: duplicate key {key:?}", no + 1));
            }
        }
        Ok(RawConfig { pairs })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.pairs.insert(key.to_string(), value);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    fn typed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.typed(key)?.unwrap_or(default))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.typed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.typed(key)?.unwrap_or(default))
    }

    pub fn f64_opt(&self, key: &str) -> CliResult<Option<f64>> {
        self.typed(key)
    }

    pub fn list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key)
            .map(|raw| raw.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }
}

/// Builds the generator config; missing keys fall back to the defaults.
pub fn synth_config(raw: &RawConfig) -> CliResult<SynthConfig> {
    let d = SynthConfig::default();
    let cfg = SynthConfig {
        n: raw.usize_or("n", d.n)?,
        p: raw.usize_or("p", d.p)?,
        k: raw.usize_or("k", d.k)?,
        m: raw.usize_or("m", d.m)?,
        density: raw.f64_or("d", d.density)?,
        sigma_e2: raw.f64_or("sigma_e2", d.sigma_e2)?,
        sigma_y2: raw.f64_or("sigma_y2", d.sigma_y2)?,
        sigma_eps2: raw.f64_or("sigma_eps2", d.sigma_eps2)?,
        base_effect: raw.f64_or("base_effect", d.base_effect)?,
        seed: raw.u64_or("seed", d.seed)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Solver and selection knobs shared by `fit` and `benchmark`.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub max_iter: usize,
    pub tol: f64,
    /// Explicit smoothing level; `None` selects the automatic scale.
    pub mu: Option<f64>,
    pub seed: u64,
    pub tree_cut: f64,
    pub lambda_grid: LambdaGrid,
    pub cluster_rotated: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iter: 1000,
            tol: 1e-5,
            mu: None,
            seed: 0,
            tree_cut: 0.9,
            lambda_grid: LambdaGrid::default(),
            cluster_rotated: false,
        }
    }
}

impl SolverSettings {
    pub fn from_config(raw: &RawConfig) -> CliResult<Self> {
        let d = SolverSettings::default();
        let lambda_grid = match raw.list("lambda_grid") {
            Some(items) => {
                let mut grid = Vec::with_capacity(items.len());
                for item in items {
                    grid.push(item.parse::<f64>().map_err(|_| {
                        CliError::Usage(format!("config key lambda_grid: cannot parse {item:?}"))
                    })?);
                }
                LambdaGrid::Explicit(grid)
            }
            None => LambdaGrid::Auto {
                points: raw.usize_or("lambda_points", 20)?,
                ratio: raw.f64_or("lambda_ratio", 100.0)?,
            },
        };
        Ok(SolverSettings {
            max_iter: raw.usize_or("max_iter", d.max_iter)?,
            tol: raw.f64_or("tol", d.tol)?,
            mu: raw.f64_opt("mu")?,
            seed: raw.u64_or("seed", d.seed)?,
            tree_cut: raw.f64_or("tree_cut", d.tree_cut)?,
            lambda_grid,
            cluster_rotated: raw.get("cluster_rotated").map(|v| v == "true" || v == "1").unwrap_or(false),
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            lambda: 1.0,
            mu: self.mu.unwrap_or(1e-4),
            max_iter: self.max_iter,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

/// Fully-resolved parameter map recorded in `meta.json` and in manifests;
/// sorted keys make serialization deterministic.
pub fn snapshot_synth(cfg: &SynthConfig) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("n".into(), cfg.n.to_string());
    map.insert("p".into(), cfg.p.to_string());
    map.insert("k".into(), cfg.k.to_string());
    map.insert("m".into(), cfg.m.to_string());
    map.insert("d".into(), format!("{}", cfg.density));
    map.insert("sigma_e2".into(), format!("{}", cfg.sigma_e2));
    map.insert("sigma_y2".into(), format!("{}", cfg.sigma_y2));
    map.insert("sigma_eps2".into(), format!("{}", cfg.sigma_eps2));
    map.insert("base_effect".into(), format!("{}", cfg.base_effect));
    map.insert("seed".into(), cfg.seed.to_string());
    map
}

pub fn snapshot_solver(settings: &SolverSettings) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("max_iter".into(), settings.max_iter.to_string());
    map.insert("tol".into(), format!("{}", settings.tol));
    map.insert(
        "mu".into(),
        settings.mu.map(|m| format!("{m}")).unwrap_or_else(|| "auto".into()),
    );
    map.insert("seed".into(), settings.seed.to_string());
    map.insert("tree_cut".into(), format!("{}", settings.tree_cut));
    match &settings.lambda_grid {
        LambdaGrid::Explicit(grid) => {
            let joined: Vec<String> = grid.iter().map(|v| format!("{v}")).collect();
            map.insert("lambda_grid".into(), joined.join(","));
        }
        LambdaGrid::Auto { points, ratio } => {
            map.insert("lambda_points".into(), points.to_string());
            map.insert("lambda_ratio".into(), format!("{ratio}"));
        }
    }
    map.insert("cluster_rotated".into(), settings.cluster_rotated.to_string());
    map
}
