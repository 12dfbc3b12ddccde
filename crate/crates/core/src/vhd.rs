//! Outage prediction with history-distilled virtual measurements.
//!
//! At outage onset the history window is fitted once. Every subsequent step
//! runs a CA prediction and then a standard Kalman update with the trend
//! position as the measurement. The measurement noise grows with the time
//! since onset, `R*(Δt) = R_base · (1 + α Δtᵖ)`, so the filter leans on the
//! history early and hands authority back to the motion model later.

use alloc::vec::Vec;

use thiserror::Error;

use crate::estimator::{self, kalman_gain, FilterError, GaussianBelief, TargetDistribution};
use crate::history::{fit_polynomial, history_target, HistoryError, HistoryWindow, PolyModel};
use crate::kinematics::{CaModel, StateVector};
use crate::linalg::{is_valid_covariance, Matrix2, Matrix2x6, Matrix6x2, Vector2};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum VhdError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("AdaptiveConfidenceParams: {0}")]
    InvalidParams(&'static str),
    #[error("elapsed outage time must be non-negative, got {0} s")]
    NegativeElapsed(f64),
    #[error("outage must last at least one step")]
    ZeroSteps,
}

/// Parameters of the confidence schedule `R_base · (1 + α Δtᵖ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfidenceParams {
    r_base: Matrix2,
    alpha: f64,
    p: f64,
}

impl AdaptiveConfidenceParams {
    pub fn new(r_base: Matrix2, alpha: f64, p: f64) -> Result<Self, VhdError> {
        if !r_base.iter().all(|v| v.is_finite()) || (r_base - r_base.transpose()).amax() > 1e-12 * r_base.amax() {
            return Err(VhdError::InvalidParams("r_base must be symmetric"));
        }
        if r_base.cholesky().is_none() {
            return Err(VhdError::InvalidParams("r_base must be positive definite"));
        }
        if !alpha.is_finite() || alpha < 0.0 {
            return Err(VhdError::InvalidParams("alpha must be >= 0"));
        }
        if !p.is_finite() || p < 1.0 {
            return Err(VhdError::InvalidParams("p must be >= 1"));
        }
        Ok(Self { r_base, alpha, p })
    }

    pub fn r_base(&self) -> &Matrix2 {
        &self.r_base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Inflation factor `1 + α Δtᵖ`.
    pub fn inflation(&self, elapsed: f64) -> Result<f64, VhdError> {
        if elapsed.is_nan() || elapsed < 0.0 {
            return Err(VhdError::NegativeElapsed(elapsed));
        }
        Ok(1.0 + self.alpha * libm::pow(elapsed, self.p))
    }
}

impl Default for AdaptiveConfidenceParams {
    /// `R_base = diag{0.5, 0.5}` m², `α = 0.01`, `p = 2`.
    fn default() -> Self {
        Self { r_base: Matrix2::from_diagonal_element(0.5), alpha: 0.01, p: 2.0 }
    }
}

/// `R*` after `elapsed` seconds of outage.
pub fn adaptive_noise(params: &AdaptiveConfidenceParams, elapsed: f64) -> Result<Matrix2, VhdError> {
    Ok(params.r_base * params.inflation(elapsed)?)
}

/// Step counter for an outage that began at `outage_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageClock {
    pub outage_start: f64,
    pub dt: f64,
    /// Steps taken since onset.
    pub step_index: usize,
}

impl OutageClock {
    pub fn new(outage_start: f64, dt: f64) -> Self {
        Self { outage_start, dt, step_index: 0 }
    }

    pub fn at_step(self, step_index: usize) -> Self {
        Self { step_index, ..self }
    }

    /// Time since onset, `k · dt`.
    pub fn elapsed(&self) -> f64 {
        self.step_index as f64 * self.dt
    }

    /// Absolute time of step `k`.
    pub fn time(&self) -> f64 {
        self.outage_start + self.elapsed()
    }
}

/// Synthetic position observation and its confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualMeasurement {
    pub z: Vector2,
    pub r: Matrix2,
    pub elapsed: f64,
}

/// Trend position at the clock's absolute time with the scheduled noise.
pub fn virtual_measurement(
    poly: &PolyModel,
    params: &AdaptiveConfidenceParams,
    clock: &OutageClock,
) -> Result<VirtualMeasurement, VhdError> {
    let elapsed = clock.elapsed();
    Ok(VirtualMeasurement { z: poly.extrapolate(clock.time()), r: adaptive_noise(params, elapsed)?, elapsed })
}

/// Kalman update of an already-predicted belief with a virtual measurement.
pub fn assimilate(
    predicted: &GaussianBelief,
    vm: &VirtualMeasurement,
    h: &Matrix2x6,
) -> Result<GaussianBelief, VhdError> {
    Ok(estimator::update(predicted, &vm.z, &vm.r, h)?)
}

/// One outage step: CA prediction, then the virtual-measurement update.
pub fn vhd_outage_step(
    b: &GaussianBelief,
    poly: &PolyModel,
    params: &AdaptiveConfidenceParams,
    clock: &OutageClock,
    model: &CaModel,
) -> Result<GaussianBelief, VhdError> {
    let predicted = estimator::predict(b, model);
    let vm = virtual_measurement(poly, params, clock)?;
    assimilate(&predicted, &vm, model.measurement())
}

/// Gain of the virtual update for a given prior covariance and elapsed time.
pub fn virtual_gain(
    cov: &crate::linalg::Matrix6,
    params: &AdaptiveConfidenceParams,
    elapsed: f64,
    h: &Matrix2x6,
) -> Result<Matrix6x2, VhdError> {
    Ok(kalman_gain(cov, &adaptive_noise(params, elapsed)?, h)?)
}

/// Polynomial degree and confidence schedule for an outage run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VhdConfig {
    pub confidence: AdaptiveConfidenceParams,
    pub poly_degree: usize,
}

impl Default for VhdConfig {
    fn default() -> Self {
        Self { confidence: AdaptiveConfidenceParams::default(), poly_degree: 2 }
    }
}

/// Everything produced by [`run_outage`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutageRun {
    pub poly: PolyModel,
    /// Posterior after each step `k = 1..=steps`.
    pub beliefs: Vec<GaussianBelief>,
    pub measurements: Vec<VirtualMeasurement>,
    /// Distance (m) between the trend measurement and the KL-optimal one
    /// for the history target at the same step. `None` when the window is
    /// too short to estimate the target covariance.
    pub kl_gap: Option<Vec<f64>>,
}

impl OutageRun {
    pub fn positions(&self) -> impl Iterator<Item = Vector2> + '_ {
        self.beliefs.iter().map(|b| b.mean.position())
    }
}

/// Full outage loop: fit once at onset, then `steps` predict/update cycles.
pub fn run_outage(
    b: &GaussianBelief,
    w: &HistoryWindow,
    config: &VhdConfig,
    clock: OutageClock,
    steps: usize,
    model: &CaModel,
) -> Result<OutageRun, VhdError> {
    if steps == 0 {
        return Err(VhdError::ZeroSteps);
    }
    let poly = fit_polynomial(w, config.poly_degree)?;
    let mut target: Option<TargetDistribution> = history_target(w, &poly, model, 0).ok();
    let h = model.measurement();

    let mut beliefs = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    let mut gaps = Vec::with_capacity(if target.is_some() { steps } else { 0 });
    let mut current = b.clone();
    for k in 1..=steps {
        let step_clock = clock.at_step(clock.step_index + k);
        let predicted = estimator::predict(&current, model);
        let vm = virtual_measurement(&poly, &config.confidence, &step_clock)?;
        if let Some(q) = target.as_mut() {
            q.mean = model.step(&q.mean);
            let opt = estimator::kl_optimal_virtual_measurement(&predicted, q, &vm.r, h)?;
            gaps.push((opt.z - vm.z).norm());
        }
        current = assimilate(&predicted, &vm, h)?;
        debug_assert!(is_valid_covariance(&current.cov));
        beliefs.push(current.clone());
        measurements.push(vm);
    }
    Ok(OutageRun { poly, beliefs, measurements, kl_gap: target.map(|_| gaps) })
}

/// Mean state of the trend at the window end, as used for the history target.
pub fn distilled_state(w: &HistoryWindow, degree: usize) -> Result<StateVector, VhdError> {
    Ok(fit_polynomial(w, degree)?.smoothed_state())
}
