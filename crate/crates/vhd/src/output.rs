//! CSV, summary and config-echo writers.
//!
//! Column order is fixed:
//!
//! - `error_series.csv`: `time_s, ukf_mean_err_m, lagrange_mean_err_m, vhd_mean_err_m`
//! - `trajectory.csv`: `time_s, truth_x, truth_y, ukf_x, ukf_y, lagrange_x, lagrange_y, vhd_x, vhd_y`
//!
//! Predictors left out with `--predictors` drop their columns; the rest keep
//! their relative order.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use vhd_core::{Aggregate, Predictor, RunRecord};

pub const ERROR_SERIES_CSV: &str = "error_series.csv";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SUMMARY_JSON: &str = "summary.json";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";

pub const AGGREGATION: &str = "mean across runs of per-step Euclidean position error";

/// `x` with six significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return sig6_sci(x);
    }
    let s = trim_zeros(&format!("{:.*}", (5 - exp) as usize, x)).to_string();
    // Rounding can carry into a new digit (999999.5 -> 1000000); reformat.
    if s.trim_start_matches('-').split(['.', 'e']).next().map_or(0, str::len) > 6 {
        return sig6_sci(x);
    }
    s
}

fn sig6_sci(x: f64) -> String {
    let s = format!("{x:.5e}");
    let (mantissa, e) = s.split_once('e').expect("exponent present");
    format!("{}e{}", trim_zeros(mantissa), e)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn writer(path: &Path) -> io::Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path).map_err(io::Error::from)
}

pub fn write_error_series(path: &Path, agg: &Aggregate, predictors: &[Predictor]) -> io::Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["time_s".to_string()];
    header.extend(predictors.iter().map(|p| format!("{}_mean_err_m", p.name())));
    w.write_record(&header)?;
    for (k, t) in agg.times.iter().enumerate() {
        let mut row = vec![sig6(*t)];
        row.extend(predictors.iter().map(|&p| sig6(agg.metrics(p).mean_error[k])));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_trajectory(path: &Path, run: &RunRecord, predictors: &[Predictor]) -> io::Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = ["time_s", "truth_x", "truth_y"].map(String::from).to_vec();
    for p in predictors {
        header.push(format!("{}_x", p.name()));
        header.push(format!("{}_y", p.name()));
    }
    w.write_record(&header)?;
    for (k, t) in run.times.iter().enumerate() {
        let mut row = vec![sig6(*t), sig6(run.truth[k].x), sig6(run.truth[k].y)];
        for &p in predictors {
            let pos = run.track(p).positions[k];
            row.push(sig6(pos.x));
            row.push(sig6(pos.y));
        }
        w.write_record(&row)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictorSummary {
    pub name: &'static str,
    pub label: &'static str,
    pub outage_rmse_m: f64,
    pub terminal_error_m: f64,
}

/// Machine-readable mirror of `summary.txt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub base_seed: u64,
    pub aggregation: &'static str,
    pub predictors: Vec<PredictorSummary>,
    /// `None` unless both VHD and UKF were selected.
    pub reduction_pct: Option<f64>,
}

impl Summary {
    pub fn new(agg: &Aggregate, base_seed: u64, predictors: &[Predictor]) -> Self {
        let has = |p| predictors.contains(&p);
        Self {
            runs: agg.runs,
            base_seed,
            aggregation: AGGREGATION,
            predictors: predictors
                .iter()
                .map(|&p| PredictorSummary {
                    name: p.name(),
                    label: p.label(),
                    outage_rmse_m: agg.metrics(p).outage_rmse,
                    terminal_error_m: agg.metrics(p).terminal_error,
                })
                .collect(),
            reduction_pct: (has(Predictor::Vhd) && has(Predictor::Ukf)).then_some(agg.reduction_pct),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s =
            format!("runs: {}\nbase_seed: {}\naggregation: {}\n\n", self.runs, self.base_seed, self.aggregation);
        s += &format!("{:<22}{:>16}{:>18}\n", "predictor", "outage_rmse_m", "terminal_error_m");
        for p in &self.predictors {
            s += &format!("{:<22}{:>16}{:>18}\n", p.label, sig6(p.outage_rmse_m), sig6(p.terminal_error_m));
        }
        if let Some(r) = self.reduction_pct {
            s += &format!("\nreduction_pct: {}\n", sig6(r));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is always serialisable") + "\n"
    }
}
