//! TOML scenario files.
//!
//! Every key is optional. Missing keys take the reference values, unknown
//! keys are rejected. The fully resolved file is what gets echoed next to
//! the outputs, so loading an echo reproduces the same run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vhd_core::linalg::Matrix2;
use vhd_core::simkit::{Phase, SensorConfig, TrajectoryConfig};
use vhd_core::{AdaptiveConfidenceParams, Disturbance, ScenarioConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub duration: f64,
    pub dt: f64,
    pub outage_start: f64,
    pub outage_duration: f64,
    pub history_window: f64,
    pub imu_during_outage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sigma_jerk: f64,
}

/// Current as speed (m/s) towards a heading (degrees, 0 = +x, CCW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurrentSection {
    pub speed: f64,
    pub heading_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSection {
    pub position_fix_noise: f64,
    pub accel_white_noise: f64,
    pub accel_bias_walk: f64,
    pub fix_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VhdSection {
    /// Row-major 2×2 base covariance (m²).
    pub r_base: [[f64; 2]; 2],
    pub alpha: f64,
    pub p: f64,
    pub poly_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub lagrange_nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEntry {
    pub start: f64,
    pub turn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub cruise_speed: f64,
    pub initial_heading_deg: f64,
    pub phases: Vec<PhaseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    pub runs: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioSection,
    pub model: ModelSection,
    pub current: CurrentSection,
    pub sensor: SensorSection,
    pub vhd: VhdSection,
    pub baselines: BaselineSection,
    pub trajectory: TrajectorySection,
    pub monte_carlo: MonteCarloSection,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        Self {
            duration: d.duration,
            dt: d.dt,
            outage_start: d.outage_start,
            outage_duration: d.outage_duration,
            history_window: d.history_window,
            imu_during_outage: d.imu_during_outage,
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { sigma_jerk: ScenarioConfig::default().sigma_jerk }
    }
}

impl Default for CurrentSection {
    fn default() -> Self {
        Self { speed: 1.0, heading_deg: 45.0 }
    }
}

impl Default for SensorSection {
    fn default() -> Self {
        let s = SensorConfig::default();
        Self {
            position_fix_noise: s.position_fix_noise,
            accel_white_noise: s.accel_white_noise,
            accel_bias_walk: s.accel_bias_walk,
            fix_rate: s.fix_rate,
        }
    }
}

impl Default for VhdSection {
    fn default() -> Self {
        let p = AdaptiveConfidenceParams::default();
        let r = p.r_base();
        Self {
            r_base: [[r[(0, 0)], r[(0, 1)]], [r[(1, 0)], r[(1, 1)]]],
            alpha: p.alpha(),
            p: p.p(),
            poly_degree: ScenarioConfig::default().poly_degree,
        }
    }
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self { lagrange_nodes: ScenarioConfig::default().lagrange_nodes }
    }
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let t = TrajectoryConfig::default();
        Self {
            cruise_speed: t.cruise_speed,
            initial_heading_deg: t.initial_heading_deg,
            phases: t.phases.iter().map(|p| PhaseEntry { start: p.start, turn_rate: p.turn_rate }).collect(),
        }
    }
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        Self { runs: d.mc_runs, base_seed: d.base_seed }
    }
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: origin.to_path_buf(), source })
    }

    /// Build and validate the scenario described by this file.
    pub fn resolve(&self) -> Result<ScenarioConfig, ConfigError> {
        let v = &self.vhd;
        let r_base = Matrix2::new(v.r_base[0][0], v.r_base[0][1], v.r_base[1][0], v.r_base[1][1]);
        let vhd_params =
            AdaptiveConfidenceParams::new(r_base, v.alpha, v.p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.scenario;
        let cfg = ScenarioConfig {
            duration: s.duration,
            dt: s.dt,
            sigma_jerk: self.model.sigma_jerk,
            current: Disturbance::from_heading(self.current.speed, self.current.heading_deg),
            outage_start: s.outage_start,
            outage_duration: s.outage_duration,
            history_window: s.history_window,
            mc_runs: self.monte_carlo.runs,
            sensor: SensorConfig {
                position_fix_noise: self.sensor.position_fix_noise,
                accel_white_noise: self.sensor.accel_white_noise,
                accel_bias_walk: self.sensor.accel_bias_walk,
                fix_rate: self.sensor.fix_rate,
            },
            vhd_params,
            poly_degree: v.poly_degree,
            lagrange_nodes: self.baselines.lagrange_nodes,
            trajectory: TrajectoryConfig {
                cruise_speed: self.trajectory.cruise_speed,
                initial_heading_deg: self.trajectory.initial_heading_deg,
                phases: self
                    .trajectory
                    .phases
                    .iter()
                    .map(|p| Phase { start: p.start, turn_rate: p.turn_rate })
                    .collect(),
            },
            base_seed: self.monte_carlo.base_seed,
            imu_during_outage: s.imu_during_outage,
        };
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config file is always serialisable")
    }
}

/// Read a file, fill defaults and validate.
pub fn load_config(path: &Path) -> Result<(ConfigFile, ScenarioConfig), ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
    let file = ConfigFile::parse(&text, path)?;
    let cfg = file.resolve()?;
    Ok((file, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile, ConfigError> {
        ConfigFile::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_file_is_reference_scenario() {
        let cfg = parse("").unwrap().resolve().unwrap();
        let d = ScenarioConfig::default();
        assert_eq!(cfg.outage_duration, 40.0);
        assert_eq!(cfg.history_window, 50.0);
        assert_eq!(cfg.mc_runs, 100);
        assert_eq!(*cfg.vhd_params.r_base(), Matrix2::from_diagonal_element(0.5));
        assert_eq!(cfg.vhd_params.alpha(), 0.01);
        assert_eq!(cfg.vhd_params.p(), 2.0);
        assert_eq!(cfg, d);
    }

    #[test]
    fn negative_alpha_names_invariant() {
        let err = parse("[vhd]\nalpha = -1.0\n").unwrap().resolve().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("AdaptiveConfidenceParams"), "{msg}");
        assert!(msg.contains("alpha"), "{msg}");
    }

    #[test]
    fn unknown_key_is_named() {
        let msg = parse("[vhd]\nalfa = 0.1\n").unwrap_err().to_string();
        assert!(msg.contains("alfa"), "{msg}");
        let msg = parse("[nonsense]\nx = 1\n").unwrap_err().to_string();
        assert!(msg.contains("nonsense"), "{msg}");
    }

    #[test]
    fn type_mismatch_reports_line() {
        let msg = parse("[scenario]\ndt = 0.1\nduration = \"long\"\n").unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn echo_round_trips() {
        let file = parse("[monte_carlo]\nruns = 7\n[current]\nheading_deg = 12.5\n").unwrap();
        let again = parse(&file.to_toml()).unwrap();
        assert_eq!(file, again);
        assert_eq!(file.resolve().unwrap(), again.resolve().unwrap());
        assert_eq!(again.to_toml(), file.to_toml());
    }
}
