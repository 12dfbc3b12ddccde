use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vhd::{config, run_command, AppError, ConfigFile, RunOptions};
use vhd_core::Predictor;

/// Monte Carlo comparison of outage predictors.
#[derive(Debug, Parser)]
#[command(name = "vhd", version)]
struct Cli {
    /// Scenario file (TOML). Without it the reference scenario runs.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of Monte Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Comma-separated subset of ukf, lagrange, vhd.
    #[arg(long, value_delimiter = ',', value_parser = parse_predictor)]
    predictors: Option<Vec<Predictor>>,
    /// Do not print the summary table.
    #[arg(long)]
    quiet: bool,
}

fn parse_predictor(s: &str) -> Result<Predictor, String> {
    Predictor::from_name(s.trim()).ok_or_else(|| format!("unknown predictor `{s}` (expected ukf, lagrange or vhd)"))
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut file = match &cli.config {
        Some(path) => config::load_config(path)?.0,
        None => ConfigFile::default(),
    };
    if let Some(runs) = cli.runs {
        file.monte_carlo.runs = runs;
    }
    if let Some(seed) = cli.seed {
        file.monte_carlo.base_seed = seed;
    }
    let mut opts = RunOptions::new(&cli.out_dir);
    if let Some(p) = cli.predictors {
        opts.predictors = p;
    }
    let bundle = run_command(&file, &opts)?;
    if !cli.quiet {
        print!("{}", bundle.summary.to_text());
        println!("\nwrote {}", cli.out_dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
