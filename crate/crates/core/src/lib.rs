//! Outage-resistant state estimation for a planar target vehicle.
//!
//! When external position reports stop arriving, a Kalman filter running a
//! constant-acceleration (CA) model can only dead-reckon, and any mismatch
//! between the model and the real motion accumulates without bound. This
//! crate distils the recent trajectory history into a polynomial trend and
//! feeds it back to the filter as a *virtual measurement* whose confidence
//! decays with outage length.
//!
//! Layout:
//!
//! - [`kinematics`]: CA transition, process noise, truth propagation with an
//!   unmodeled current.
//! - [`estimator`]: Gaussian beliefs, Kalman predict/update, open-loop
//!   prediction, Gaussian KL divergence and the KL-optimal virtual measurement.
//! - [`history`]: sliding window of filtered estimates, least-squares
//!   polynomial trend, residual covariance, Lagrange extrapolation.
//! - [`vhd`]: adaptive confidence schedule and the outage loop.
//! - [`simkit`]: scenario generation, sensors, Monte Carlo runs and metrics.
//!
//! The crate is `no_std` and needs only `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod estimator;
pub mod history;
pub mod kinematics;
pub mod linalg;
pub mod simkit;
pub mod vhd;

pub use estimator::{FilterError, GaussianBelief, TargetDistribution};
pub use history::{HistoryError, HistoryWindow, PolyModel};
pub use kinematics::{CaModel, Disturbance, ModelError, StateVector};
pub use simkit::{Aggregate, Predictor, RunRecord, ScenarioConfig, SimError};
pub use vhd::{AdaptiveConfidenceParams, OutageClock, VhdConfig, VhdError, VirtualMeasurement};
