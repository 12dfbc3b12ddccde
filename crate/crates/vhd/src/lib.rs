//! Scenario runner for `vhd-core`: config files, parallel Monte Carlo and
//! reproducible CSV export.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use vhd_core::simkit::{aggregate, run_scenario, run_seed};
use vhd_core::{Aggregate, Predictor, RunRecord, ScenarioConfig, SimError};

pub use config::{load_config, ConfigError, ConfigFile};

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 3,
            AppError::Sim(_) | AppError::Io { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Every run of the batch on the rayon pool, returned in seed order.
pub fn monte_carlo_parallel(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>, SimError> {
    cfg.validate()?;
    (0..cfg.mc_runs).into_par_iter().map(|i| run_scenario(cfg, run_seed(cfg, i))).collect()
}

pub fn monte_carlo_records(cfg: &ScenarioConfig, execution: Execution) -> Result<Vec<RunRecord>, SimError> {
    match execution {
        Execution::Serial => vhd_core::simkit::monte_carlo_records(cfg),
        Execution::Parallel => monte_carlo_parallel(cfg),
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Columns to emit, in canonical order.
    pub predictors: Vec<Predictor>,
    pub execution: Execution,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: out_dir.into(), predictors: Predictor::ALL.to_vec(), execution: Execution::default() }
    }
}

/// What a run wrote, for callers that want to print or inspect it.
#[derive(Debug, Clone)]
pub struct OutputBundle {
    pub aggregate: Aggregate,
    pub summary: output::Summary,
    /// The designated run behind `trajectory.csv` (the first seed).
    pub trajectory_run: RunRecord,
    pub files: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AppError + '_ {
    move |source| AppError::Io { path: path.to_path_buf(), source }
}

/// Resolve the file, run the batch and write the output bundle.
pub fn run_command(file: &ConfigFile, opts: &RunOptions) -> Result<OutputBundle, AppError> {
    let cfg = file.resolve()?;
    let mut predictors = opts.predictors.clone();
    predictors.sort();
    predictors.dedup();

    let records = monte_carlo_records(&cfg, opts.execution)?;
    let agg = aggregate(&records)?;

    let dir = &opts.out_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = |name: &str| dir.join(name);
    let summary = output::Summary::new(&agg, cfg.base_seed, &predictors);
    let mut files = Vec::new();

    let p = path(output::ERROR_SERIES_CSV);
    output::write_error_series(&p, &agg, &predictors).map_err(io_err(&p))?;
    files.push(p);
    let p = path(output::TRAJECTORY_CSV);
    output::write_trajectory(&p, &records[0], &predictors).map_err(io_err(&p))?;
    files.push(p);
    for (name, text) in [
        (output::SUMMARY_TXT, summary.to_text()),
        (output::SUMMARY_JSON, summary.to_json()),
        (output::RESOLVED_CONFIG, file.to_toml()),
    ] {
        let p = path(name);
        fs::write(&p, text).map_err(io_err(&p))?;
        files.push(p);
    }

    let trajectory_run = records.into_iter().next().expect("at least one run");
    Ok(OutputBundle { aggregate: agg, summary, trajectory_run, files })
}
