//! Scenario generation, sensor models, Monte Carlo runs and metrics.
//!
//! A run has three parts. The truth vehicle flies a coordinated-turn plan
//! while a constant current pushes it sideways. A tracking filter follows it
//! with IMU readings and 1 Hz position fixes until the outage begins. Then
//! three predictors branch from the same onset belief: open-loop CA
//! prediction, Lagrange extrapolation of the history and the VHD loop.

use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::estimator::{self, open_loop_predict, FilterError, GaussianBelief};
use crate::history::{fit_polynomial, HistoryError, HistoryWindow, LagrangePredictor};
use crate::kinematics::{
    acceleration_measurement_matrix, propagate_truth, CaModel, Disturbance, ModelError, StateVector, PX, PY, VX, VY,
};
use crate::linalg::{Matrix2, Matrix6, Vector2, Vector6};
use crate::vhd::{self, AdaptiveConfidenceParams, OutageClock, VhdConfig, VhdError};

const FIX_STREAM: u64 = 1;
const IMU_STREAM: u64 = 2;

/// Floor on sensor standard deviations so noise-free configs stay invertible.
const MIN_SENSOR_SIGMA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(&'static str),
    #[error("rmse of an empty sequence")]
    EmptyInput,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Vhd(#[from] VhdError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorConfig {
    /// Position fix standard deviation (m).
    pub position_fix_noise: f64,
    /// Accelerometer white noise standard deviation (m/s²).
    pub accel_white_noise: f64,
    /// Bias random-walk increment per step (m/s²).
    pub accel_bias_walk: f64,
    /// Position fix rate (Hz).
    pub fix_rate: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self { position_fix_noise: 1.0, accel_white_noise: 0.05, accel_bias_walk: 0.0005, fix_rate: 1.0 }
    }
}

impl SensorConfig {
    /// Sensor with every noise source switched off.
    pub fn noiseless(fix_rate: f64) -> Self {
        Self { position_fix_noise: 0.0, accel_white_noise: 0.0, accel_bias_walk: 0.0, fix_rate }
    }
}

/// A turn rate held from `start` until the next phase begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub start: f64,
    /// rad/s, positive counter-clockwise. Zero is straight cruise.
    pub turn_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    /// Water-relative speed (m/s).
    pub cruise_speed: f64,
    /// Heading at t = 0 (degrees, 0 = +x).
    pub initial_heading_deg: f64,
    /// Ordered by start time; the first phase starts at 0.
    pub phases: Vec<Phase>,
}

impl TrajectoryConfig {
    /// Straight cruise, then a turn from `turn_start` to the end of the run.
    pub fn cruise_then_turn(cruise_speed: f64, turn_start: f64, turn_rate: f64) -> Self {
        let mut phases = alloc::vec![Phase { start: 0.0, turn_rate: 0.0 }];
        if turn_start > 0.0 {
            phases.push(Phase { start: turn_start, turn_rate });
        } else {
            phases[0].turn_rate = turn_rate;
        }
        Self { cruise_speed, initial_heading_deg: 0.0, phases }
    }

    pub fn straight(cruise_speed: f64) -> Self {
        Self::cruise_then_turn(cruise_speed, 0.0, 0.0)
    }

    /// Turn rate in effect at time `t`.
    pub fn turn_rate_at(&self, t: f64) -> f64 {
        self.phases.iter().rev().find(|p| p.start <= t).map_or(0.0, |p| p.turn_rate)
    }

    fn turning_during(&self, from: f64, to: f64) -> bool {
        self.phases.iter().enumerate().any(|(i, p)| {
            let end = self.phases.get(i + 1).map_or(f64::INFINITY, |n| n.start);
            p.turn_rate != 0.0 && p.start < to && end > from
        })
    }
}

impl Default for TrajectoryConfig {
    /// 1.5 m/s, 10 s straight, then a 0.25 rad/s loiter turn (6 m radius).
    fn default() -> Self {
        Self::cruise_then_turn(1.5, 10.0, 0.25)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub dt: f64,
    /// Jerk noise of the estimators' CA model.
    pub sigma_jerk: f64,
    pub current: Disturbance,
    pub outage_start: f64,
    pub outage_duration: f64,
    /// Length of the history window (s).
    pub history_window: f64,
    pub mc_runs: usize,
    pub sensor: SensorConfig,
    pub vhd_params: AdaptiveConfidenceParams,
    pub poly_degree: usize,
    pub lagrange_nodes: usize,
    pub trajectory: TrajectoryConfig,
    pub base_seed: u64,
    /// Keep feeding accelerometer readings to all predictors during the outage.
    pub imu_during_outage: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            duration: 110.0,
            dt: 0.1,
            sigma_jerk: 0.05,
            current: Disturbance::from_heading(1.0, 45.0),
            outage_start: 60.0,
            outage_duration: 40.0,
            history_window: 50.0,
            mc_runs: 100,
            sensor: SensorConfig::default(),
            vhd_params: AdaptiveConfidenceParams::default(),
            poly_degree: 2,
            lagrange_nodes: 8,
            trajectory: TrajectoryConfig::default(),
            base_seed: 0,
            imu_during_outage: false,
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Steps in `span` seconds, if `span` is a whole number of steps.
fn whole_steps(span: f64, dt: f64) -> Option<usize> {
    let n = libm::round(span / dt);
    (n >= 0.0 && libm::fabs(n * dt - span) <= 1e-9 * span.max(1.0)).then_some(n as usize)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m| Err(SimError::InvalidConfig(m));
        if !positive(self.dt) {
            return bad("dt must be positive");
        }
        if !positive(self.duration) || whole_steps(self.duration, self.dt).is_none() {
            return bad("duration must be a positive multiple of dt");
        }
        if !non_negative(self.sigma_jerk) {
            return bad("sigma_jerk must be non-negative");
        }
        if !self.current.current_x.is_finite() || !self.current.current_y.is_finite() {
            return bad("current must be finite");
        }
        if !positive(self.outage_duration) || whole_steps(self.outage_duration, self.dt).is_none() {
            return bad("outage_duration must be a positive multiple of dt");
        }
        if !positive(self.outage_start) || whole_steps(self.outage_start, self.dt).is_none() {
            return bad("outage_start must be a positive multiple of dt");
        }
        if !positive(self.history_window) {
            return bad("history_window must be positive");
        }
        if self.outage_start < self.history_window {
            return bad("outage_start must be at least history_window");
        }
        if self.outage_start + self.outage_duration > self.duration + 1e-9 {
            return bad("outage must end before the scenario does");
        }
        if self.mc_runs == 0 {
            return bad("mc_runs must be at least 1");
        }
        let s = &self.sensor;
        if ![s.position_fix_noise, s.accel_white_noise, s.accel_bias_walk].into_iter().all(non_negative) {
            return bad("sensor noise levels must be non-negative");
        }
        if !positive(s.fix_rate) || whole_steps(1.0 / s.fix_rate, self.dt).is_none_or(|n| n == 0) {
            return bad("fix period must be a positive multiple of dt");
        }
        if whole_steps(1.0, self.dt).is_none() || whole_steps(self.outage_start, 1.0).is_none() {
            return bad("history samples once per second: 1 s and outage_start must be whole numbers of steps");
        }
        if self.poly_degree > 6 {
            return bad("poly_degree must be at most 6");
        }
        if self.history_samples() < self.poly_degree + 2 {
            return bad("history window holds too few samples for the polynomial degree");
        }
        if self.lagrange_nodes == 0 || self.lagrange_nodes > self.history_samples() {
            return bad("lagrange_nodes must be between 1 and the history sample count");
        }
        let t = &self.trajectory;
        if !non_negative(t.cruise_speed) || !t.initial_heading_deg.is_finite() {
            return bad("cruise_speed must be non-negative and heading finite");
        }
        if t.phases.first().map(|p| p.start) != Some(0.0) {
            return bad("first trajectory phase must start at 0");
        }
        if t.phases.windows(2).any(|w| w[1].start.partial_cmp(&w[0].start) != Some(core::cmp::Ordering::Greater)) || t.phases.iter().any(|p| !p.turn_rate.is_finite())
        {
            return bad("trajectory phases must have increasing start times and finite rates");
        }
        if !t.turning_during(self.outage_start - self.history_window, self.outage_start) {
            return bad("a turn phase must overlap the pre-outage history window");
        }
        Ok(())
    }

    pub fn model(&self) -> Result<CaModel, SimError> {
        Ok(CaModel::new(self.dt, self.sigma_jerk)?)
    }

    pub fn vhd_config(&self) -> VhdConfig {
        VhdConfig { confidence: self.vhd_params, poly_degree: self.poly_degree }
    }

    pub fn total_steps(&self) -> usize {
        libm::round(self.duration / self.dt) as usize
    }

    pub fn outage_start_step(&self) -> usize {
        libm::round(self.outage_start / self.dt) as usize
    }

    pub fn outage_steps(&self) -> usize {
        libm::round(self.outage_duration / self.dt) as usize
    }

    /// Steps between position fixes.
    pub fn fix_interval(&self) -> usize {
        libm::round(1.0 / (self.sensor.fix_rate * self.dt)) as usize
    }

    /// Steps between history samples (one per second).
    pub fn history_interval(&self) -> usize {
        libm::round(1.0 / self.dt) as usize
    }

    /// Samples in a full history window, both ends included.
    pub fn history_samples(&self) -> usize {
        libm::floor(self.history_window + 1e-9) as usize + 1
    }

    pub fn in_outage(&self, step: usize) -> bool {
        let k0 = self.outage_start_step();
        step >= k0 && step < k0 + self.outage_steps()
    }

    pub fn time_of(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

/// Ground-truth samples at every step. Velocities are over ground.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn position(&self, step: usize) -> Vector2 {
        self.states[step].position()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn heading_state(p: Vector2, speed: f64, heading: f64, rate: f64) -> StateVector {
    let (s, c) = libm::sincos(heading);
    StateVector::new(p.x, speed * c, -rate * speed * s, p.y, speed * s, rate * speed * c)
}

/// Coordinated-turn truth with the current applied through [`propagate_truth`].
///
/// The acceleration during a turn is exactly centripetal, `ω v` towards the
/// turn centre. The plan is deterministic, so no seed is needed.
pub fn generate_truth(cfg: &ScenarioConfig) -> Result<Trajectory, SimError> {
    let model = CaModel::new(cfg.dt, 0.0)?;
    let plan = &cfg.trajectory;
    let n = cfg.total_steps();
    let mut heading = plan.initial_heading_deg.to_radians();
    let mut water = heading_state(Vector2::zeros(), plan.cruise_speed, heading, plan.turn_rate_at(0.0));
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let ground = |s: &StateVector| {
        let mut g = *s;
        g[VX] += cfg.current.current_x;
        g[VY] += cfg.current.current_y;
        g
    };
    for i in 0..=n {
        times.push(cfg.time_of(i));
        states.push(ground(&water));
        if i == n {
            break;
        }
        let rate = plan.turn_rate_at(cfg.time_of(i));
        let next = propagate_truth(&water, &model, &cfg.current);
        heading += rate * cfg.dt;
        water = heading_state(next.position(), plan.cruise_speed, heading, plan.turn_rate_at(cfg.time_of(i + 1)));
    }
    Ok(Trajectory { times, states })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionFix {
    pub step: usize,
    pub t: f64,
    pub z: Vector2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub step: usize,
    pub t: f64,
    /// Measured acceleration: truth plus bias plus white noise.
    pub accel: Vector2,
    /// Bias in effect for this reading.
    pub bias: Vector2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStream {
    pub fixes: Vec<PositionFix>,
    /// One reading per step from step 1 on.
    pub imu: Vec<ImuSample>,
}

impl MeasurementStream {
    pub fn fix_at(&self, step: usize) -> Option<&PositionFix> {
        self.fixes.binary_search_by_key(&step, |f| f.step).ok().map(|i| &self.fixes[i])
    }

    pub fn imu_at(&self, step: usize) -> Option<&ImuSample> {
        step.checked_sub(1).and_then(|i| self.imu.get(i))
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal2(rng: &mut ChaCha8Rng) -> Vector2 {
    Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Fixes at `fix_rate` outside the outage, IMU readings at every step.
pub fn simulate_measurements(truth: &Trajectory, cfg: &ScenarioConfig, seed: u64) -> MeasurementStream {
    let s = &cfg.sensor;
    let mut fix_rng = rng_for(seed, FIX_STREAM);
    let mut imu_rng = rng_for(seed, IMU_STREAM);
    let interval = cfg.fix_interval();

    let fixes = (0..truth.len())
        .step_by(interval)
        .filter(|&i| !cfg.in_outage(i))
        .map(|i| PositionFix {
            step: i,
            t: truth.times[i],
            z: truth.position(i) + normal2(&mut fix_rng) * s.position_fix_noise,
        })
        .collect();

    let mut bias = Vector2::zeros();
    let imu = (1..truth.len())
        .map(|i| {
            bias += normal2(&mut imu_rng) * s.accel_bias_walk;
            let white = normal2(&mut imu_rng) * s.accel_white_noise;
            ImuSample { step: i, t: truth.times[i], accel: truth.states[i].acceleration() + bias + white, bias }
        })
        .collect();

    MeasurementStream { fixes, imu }
}

/// Accelerometer noise covariance at `step`: white noise plus accumulated bias.
fn imu_noise(cfg: &ScenarioConfig, step: usize) -> Matrix2 {
    let s = &cfg.sensor;
    let white = s.accel_white_noise.max(MIN_SENSOR_SIGMA);
    let var = white * white + step as f64 * s.accel_bias_walk * s.accel_bias_walk;
    Matrix2::from_diagonal_element(var)
}

fn fix_noise(cfg: &ScenarioConfig) -> Matrix2 {
    let sigma = cfg.sensor.position_fix_noise.max(MIN_SENSOR_SIGMA);
    Matrix2::from_diagonal_element(sigma * sigma)
}

/// Filter prior from the first fix: zero velocity and acceleration.
fn initial_belief(cfg: &ScenarioConfig, z: Vector2) -> Result<GaussianBelief, SimError> {
    let pv = fix_noise(cfg)[(0, 0)];
    let mut mean = StateVector::zeros();
    mean[PX] = z.x;
    mean[PY] = z.y;
    let speed = cfg.trajectory.cruise_speed + cfg.current.magnitude();
    let speed_var = (speed * speed).max(1.0);
    let cov = Matrix6::from_diagonal(&Vector6::new(pv, speed_var, 1.0, pv, speed_var, 1.0));
    Ok(GaussianBelief::new(mean, cov)?)
}

fn imu_update(
    b: &GaussianBelief,
    cfg: &ScenarioConfig,
    stream: &MeasurementStream,
    step: usize,
) -> Result<GaussianBelief, SimError> {
    match stream.imu_at(step) {
        Some(m) => Ok(estimator::update(b, &m.accel, &imu_noise(cfg, step), &acceleration_measurement_matrix())?),
        None => Ok(b.clone()),
    }
}

/// Which predictor a series belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predictor {
    Ukf,
    Lagrange,
    Vhd,
}

impl Predictor {
    pub const ALL: [Predictor; 3] = [Predictor::Ukf, Predictor::Lagrange, Predictor::Vhd];

    pub fn name(self) -> &'static str {
        match self {
            Predictor::Ukf => "ukf",
            Predictor::Lagrange => "lagrange",
            Predictor::Vhd => "vhd",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Predictor::Ukf => "UKF-Prediction",
            Predictor::Lagrange => "Lagrange-Prediction",
            Predictor::Vhd => "VHD",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s))
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub positions: Vec<Vector2>,
    /// Euclidean distance to truth (m).
    pub errors: Vec<f64>,
}

/// One seeded run over the outage window: onset (step 0) to outage end.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub times: Vec<f64>,
    pub truth: Vec<Vector2>,
    pub tracks: [Track; 3],
    /// Filter position error at onset.
    pub pre_outage_error: f64,
    /// Per-step distance between the trend and the KL-optimal measurement.
    pub kl_gap: Option<Vec<f64>>,
}

impl RunRecord {
    pub fn track(&self, p: Predictor) -> &Track {
        &self.tracks[p.index()]
    }

    pub fn terminal_error(&self, p: Predictor) -> f64 {
        *self.track(p).errors.last().expect("non-empty run")
    }
}

/// A run frozen at outage onset.
#[derive(Debug, Clone, PartialEq)]
pub struct Onset {
    pub truth: Trajectory,
    pub stream: MeasurementStream,
    /// Tracking filter posterior at the onset step.
    pub belief: GaussianBelief,
    pub window: HistoryWindow,
}

/// Run the tracking filter from the first fix up to outage onset, sampling
/// the posterior into the history window once per second.
pub fn track_to_onset(cfg: &ScenarioConfig, seed: u64) -> Result<Onset, SimError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let h = *model.measurement();
    let truth = generate_truth(cfg)?;
    let stream = simulate_measurements(&truth, cfg, seed);
    let interval = cfg.history_interval();

    let first = stream.fix_at(0).ok_or(SimError::InvalidConfig("no fix at t = 0"))?;
    let mut belief = initial_belief(cfg, first.z)?;
    let mut window = HistoryWindow::new(cfg.history_samples())?;
    for i in 1..=cfg.outage_start_step() {
        belief = estimator::predict(&belief, &model);
        belief = imu_update(&belief, cfg, &stream, i)?;
        if let Some(f) = stream.fix_at(i) {
            belief = estimator::update(&belief, &f.z, &fix_noise(cfg), &h)?;
        }
        if i % interval == 0 {
            window.push(cfg.time_of(i), belief.mean)?;
        }
    }
    Ok(Onset { truth, stream, belief, window })
}

/// Track the vehicle up to outage onset, then branch the three predictors.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunRecord, SimError> {
    let Onset { truth, stream, belief: onset, window } = track_to_onset(cfg, seed)?;
    let model = cfg.model()?;
    let h = *model.measurement();
    let k0 = cfg.outage_start_step();
    let pre_outage_error = (onset.mean.position() - truth.position(k0)).norm();

    let steps = cfg.outage_steps();
    let times: Vec<f64> = (0..=steps).map(|k| cfg.time_of(k0 + k)).collect();
    let truth_pos: Vec<Vector2> = (0..=steps).map(|k| truth.position(k0 + k)).collect();

    let mut ukf = Vec::with_capacity(steps + 1);
    let mut vhd_pos = Vec::with_capacity(steps + 1);
    let kl_gap;
    ukf.push(onset.mean.position());
    vhd_pos.push(onset.mean.position());
    if cfg.imu_during_outage {
        let poly = fit_polynomial(&window, cfg.poly_degree)?;
        let clock = OutageClock::new(cfg.outage_start, cfg.dt);
        let (mut ol, mut vb) = (onset.clone(), onset.clone());
        for k in 1..=steps {
            ol = imu_update(&estimator::predict(&ol, &model), cfg, &stream, k0 + k)?;
            let pred = imu_update(&estimator::predict(&vb, &model), cfg, &stream, k0 + k)?;
            let vm = vhd::virtual_measurement(&poly, &cfg.vhd_params, &clock.at_step(k))?;
            vb = vhd::assimilate(&pred, &vm, &h)?;
            ukf.push(ol.mean.position());
            vhd_pos.push(vb.mean.position());
        }
        kl_gap = None;
    } else {
        ukf.extend(open_loop_predict(&onset, &model, steps).iter().map(|b| b.mean.position()));
        let run = vhd::run_outage(
            &onset,
            &window,
            &cfg.vhd_config(),
            OutageClock::new(cfg.outage_start, cfg.dt),
            steps,
            &model,
        )?;
        vhd_pos.extend(run.positions());
        kl_gap = run.kl_gap;
    }

    let lagrange = LagrangePredictor::from_window(&window, cfg.lagrange_nodes)?;
    let mut lag = Vec::with_capacity(steps + 1);
    lag.push(onset.mean.position());
    lag.extend(times[1..].iter().map(|&t| lagrange.predict(t)));

    let track = |positions: Vec<Vector2>| {
        let errors = positions.iter().zip(&truth_pos).map(|(p, t)| (p - t).norm()).collect();
        Track { positions, errors }
    };
    Ok(RunRecord {
        seed,
        times,
        truth: truth_pos.clone(),
        tracks: [track(ukf), track(lag), track(vhd_pos)],
        pre_outage_error,
        kl_gap,
    })
}

/// `√(mean of squares)`.
pub fn rmse(errors: &[f64]) -> Result<f64, SimError> {
    if errors.is_empty() {
        return Err(SimError::EmptyInput);
    }
    Ok(libm::sqrt(errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64))
}

/// Seed of run `i` of a Monte Carlo batch.
pub fn run_seed(cfg: &ScenarioConfig, i: usize) -> u64 {
    cfg.base_seed.wrapping_add(i as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorMetrics {
    pub predictor: Predictor,
    /// Mean across runs of the per-step error, onset included.
    pub mean_error: Vec<f64>,
    /// RMS over every run and every outage step after onset.
    pub outage_rmse: f64,
    /// Mean across runs of the error at outage end.
    pub terminal_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub runs: usize,
    pub times: Vec<f64>,
    pub metrics: [PredictorMetrics; 3],
    /// `100 · (1 − RMSE_vhd / RMSE_ukf)`.
    pub reduction_pct: f64,
    /// Runs where VHD ends closer to truth than open-loop prediction.
    pub vhd_wins: usize,
    pub max_pre_outage_error: f64,
}

impl Aggregate {
    pub fn metrics(&self, p: Predictor) -> &PredictorMetrics {
        &self.metrics[p.index()]
    }
}

/// Summarise a batch of runs. Records are combined in the order given.
pub fn aggregate(records: &[RunRecord]) -> Result<Aggregate, SimError> {
    let first = records.first().ok_or(SimError::EmptyInput)?;
    let n = records.len() as f64;
    let steps = first.times.len();
    let metrics = Predictor::ALL.map(|p| {
        let mut mean_error = alloc::vec![0.0; steps];
        let mut sq = 0.0;
        let mut terminal = 0.0;
        for r in records {
            let e = &r.track(p).errors;
            for (m, v) in mean_error.iter_mut().zip(e) {
                *m += v;
            }
            sq += e[1..].iter().map(|v| v * v).sum::<f64>();
            terminal += e[steps - 1];
        }
        mean_error.iter_mut().for_each(|m| *m /= n);
        PredictorMetrics {
            predictor: p,
            mean_error,
            outage_rmse: libm::sqrt(sq / (n * (steps - 1).max(1) as f64)),
            terminal_error: terminal / n,
        }
    });
    let reduction_pct =
        100.0 * (1.0 - metrics[Predictor::Vhd.index()].outage_rmse / metrics[Predictor::Ukf.index()].outage_rmse);
    Ok(Aggregate {
        runs: records.len(),
        times: first.times.clone(),
        metrics,
        reduction_pct,
        vhd_wins: records
            .iter()
            .filter(|r| r.terminal_error(Predictor::Vhd) < r.terminal_error(Predictor::Ukf))
            .count(),
        max_pre_outage_error: records.iter().map(|r| r.pre_outage_error).fold(0.0, f64::max),
    })
}

/// All runs in seed order, one after another.
pub fn monte_carlo_records(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>, SimError> {
    cfg.validate()?;
    (0..cfg.mc_runs).map(|i| run_scenario(cfg, run_seed(cfg, i))).collect()
}

pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<Aggregate, SimError> {
    aggregate(&monte_carlo_records(cfg)?)
}
