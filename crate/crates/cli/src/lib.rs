//! Configuration-driven experiment runner around `nlcomp-core`.
//!
//! Each command reads an [`ExperimentConfig`], writes plot-ready CSV files
//! into an output directory and returns a [`RunSummary`].

pub mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::path::PathBuf;

use nlcomp_core::precomp::Verdict;
use serde::Serialize;

pub use config::{ExperimentConfig, Profile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_MAX_ITERATIONS: i32 = 5;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "NLCOMP_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_residual_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub wall_clock_s: f64,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Extra per-command figures, e.g. the sign disagreement of `compare`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, f64>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match self.verdict.as_deref() {
            None => EXIT_OK,
            Some(v) if v == Verdict::Converged.as_str() => EXIT_OK,
            Some(v) if v == Verdict::Diverged.as_str() => EXIT_DIVERGED,
            Some(_) => EXIT_MAX_ITERATIONS,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# summary not representable: {e}\n"))
    }
}

/// `--out`, then `outputs.dir`, then `$NLCOMP_OUT`, then `nlcomp-out`.
pub fn resolve_out_dir(cli: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    cli.or_else(|| cfg.outputs.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("nlcomp-out"))
}
