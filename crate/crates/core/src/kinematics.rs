//! Constant-acceleration motion model and truth propagation.

use core::ops::{Index, IndexMut};

use thiserror::Error;

use crate::linalg::{Matrix2x6, Matrix6, Vector2, Vector6};

/// Index of each component inside a [`StateVector`].
pub const PX: usize = 0;
pub const VX: usize = 1;
pub const AX: usize = 2;
pub const PY: usize = 3;
pub const VY: usize = 4;
pub const AY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModelError {
    #[error("time step must be positive and finite, got {0}")]
    NonPositiveDt(f64),
    #[error("jerk noise standard deviation must be non-negative, got {0}")]
    NegativeSigma(f64),
    #[error("state vector has a non-finite component")]
    NonFiniteState,
}

/// Planar kinematic state `[p_x, v_x, a_x, p_y, v_y, a_y]` (m, m/s, m/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub Vector6);

impl StateVector {
    pub fn new(px: f64, vx: f64, ax: f64, py: f64, vy: f64, ay: f64) -> Self {
        Self(Vector6::new(px, vx, ax, py, vy, ay))
    }

    pub fn zeros() -> Self {
        Self(Vector6::zeros())
    }

    /// Checked constructor; rejects NaN and infinities.
    pub fn try_from_array(v: [f64; 6]) -> Result<Self, ModelError> {
        let s = Self(Vector6::from(v));
        if s.is_finite() {
            Ok(s)
        } else {
            Err(ModelError::NonFiniteState)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn position(&self) -> Vector2 {
        Vector2::new(self.0[PX], self.0[PY])
    }

    pub fn velocity(&self) -> Vector2 {
        Vector2::new(self.0[VX], self.0[VY])
    }

    pub fn acceleration(&self) -> Vector2 {
        Vector2::new(self.0[AX], self.0[AY])
    }

    pub fn as_vector(&self) -> &Vector6 {
        &self.0
    }
}

impl Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vector6> for StateVector {
    fn from(v: Vector6) -> Self {
        Self(v)
    }
}

/// Block-diagonal CA transition with two `[[1, dt, dt²/2], [0, 1, dt], [0, 0, 1]]` blocks.
pub fn ca_transition_matrix(dt: f64) -> Result<Matrix6, ModelError> {
    check_dt(dt)?;
    let mut f = Matrix6::identity();
    for base in [PX, PY] {
        f[(base, base + 1)] = dt;
        f[(base, base + 2)] = 0.5 * dt * dt;
        f[(base + 1, base + 2)] = dt;
    }
    Ok(f)
}

/// Discrete white-noise-jerk covariance: per axis `σ² g gᵀ` with
/// `g = [dt³/6, dt²/2, dt]`.
pub fn ca_process_noise(dt: f64, sigma_jerk: f64) -> Result<Matrix6, ModelError> {
    check_dt(dt)?;
    if !sigma_jerk.is_finite() || sigma_jerk < 0.0 {
        return Err(ModelError::NegativeSigma(sigma_jerk));
    }
    let g = [dt * dt * dt / 6.0, dt * dt / 2.0, dt].map(|v| v * sigma_jerk);
    let mut q = Matrix6::zeros();
    for base in [PX, PY] {
        for i in 0..3 {
            for j in 0..3 {
                q[(base + i, base + j)] = g[i] * g[j];
            }
        }
    }
    Ok(q)
}

/// Position measurement matrix: `H·s = (p_x, p_y)`.
pub fn position_measurement_matrix() -> Matrix2x6 {
    let mut h = Matrix2x6::zeros();
    h[(0, PX)] = 1.0;
    h[(1, PY)] = 1.0;
    h
}

/// Acceleration measurement matrix: `H·s = (a_x, a_y)`.
pub fn acceleration_measurement_matrix() -> Matrix2x6 {
    let mut h = Matrix2x6::zeros();
    h[(0, AX)] = 1.0;
    h[(1, AY)] = 1.0;
    h
}

fn check_dt(dt: f64) -> Result<(), ModelError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositiveDt(dt))
    }
}

/// The discretised CA model shared by the truth generator and every filter.
#[derive(Debug, Clone, PartialEq)]
pub struct CaModel {
    dt: f64,
    sigma_jerk: f64,
    f: Matrix6,
    q: Matrix6,
    h: Matrix2x6,
}

impl CaModel {
    pub fn new(dt: f64, sigma_jerk: f64) -> Result<Self, ModelError> {
        Ok(Self {
            dt,
            sigma_jerk,
            f: ca_transition_matrix(dt)?,
            q: ca_process_noise(dt, sigma_jerk)?,
            h: position_measurement_matrix(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sigma_jerk(&self) -> f64 {
        self.sigma_jerk
    }

    pub fn transition(&self) -> &Matrix6 {
        &self.f
    }

    pub fn process_noise(&self) -> &Matrix6 {
        &self.q
    }

    pub fn measurement(&self) -> &Matrix2x6 {
        &self.h
    }

    /// `F·s`, no noise.
    pub fn step(&self, s: &StateVector) -> StateVector {
        StateVector(self.f * s.0)
    }
}

/// Constant water-mass current, invisible to every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Disturbance {
    pub current_x: f64,
    pub current_y: f64,
}

impl Disturbance {
    pub fn new(current_x: f64, current_y: f64) -> Self {
        Self { current_x, current_y }
    }

    /// Current of `speed` m/s flowing towards `heading_deg` (0° = +x, CCW).
    pub fn from_heading(speed: f64, heading_deg: f64) -> Self {
        let h = heading_deg.to_radians();
        Self::new(speed * libm::cos(h), speed * libm::sin(h))
    }

    pub fn magnitude(&self) -> f64 {
        libm::hypot(self.current_x, self.current_y)
    }
}

/// One truth step: `F·s`, then position advected by the current.
///
/// Velocity and acceleration stay water-relative.
pub fn propagate_truth(s: &StateVector, model: &CaModel, d: &Disturbance) -> StateVector {
    let mut next = model.step(s);
    next[PX] += d.current_x * model.dt();
    next[PY] += d.current_y * model.dt();
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_valid_covariance, min_eigenvalue};
    use proptest::prelude::*;

    #[test]
    fn transition_unit_step() {
        let f = ca_transition_matrix(1.0).unwrap();
        let rows = [[1.0, 1.0, 0.5], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]];
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(f[(i, j)], *v);
                assert_eq!(f[(i + 3, j + 3)], *v);
                assert_eq!(f[(i, j + 3)], 0.0);
                assert_eq!(f[(i + 3, j)], 0.0);
            }
        }
    }

    #[test]
    fn transition_tenth_second_position_row() {
        let f = ca_transition_matrix(0.1).unwrap();
        let expected = [1.0, 0.1, 0.005, 0.0, 0.0, 0.0];
        for (j, v) in expected.iter().enumerate() {
            assert!((f[(0, j)] - v).abs() < 1e-15);
        }
    }

    #[test]
    fn transition_keeps_stationary_state() {
        let f = ca_transition_matrix(0.37).unwrap();
        let s = Vector6::new(3.0, 0.0, 0.0, -2.0, 0.0, 0.0);
        assert_eq!(f * s, s);
    }

    #[test]
    fn rejects_bad_dt_and_sigma() {
        assert_eq!(ca_transition_matrix(0.0), Err(ModelError::NonPositiveDt(0.0)));
        assert!(ca_transition_matrix(-1.0).is_err());
        assert!(ca_transition_matrix(f64::NAN).is_err());
        assert_eq!(ca_process_noise(0.1, -0.5), Err(ModelError::NegativeSigma(-0.5)));
        assert!(CaModel::new(0.0, 0.05).is_err());
    }

    #[test]
    fn noise_free_limit_is_zero() {
        assert_eq!(ca_process_noise(0.1, 0.0).unwrap(), Matrix6::zeros());
    }

    #[test]
    fn noise_scales_quadratically() {
        let q1 = ca_process_noise(0.1, 0.05).unwrap();
        let q2 = ca_process_noise(0.1, 0.1).unwrap();
        assert!((q2 - q1 * 4.0).amax() < 1e-18);
    }

    #[test]
    fn pure_drift_from_rest() {
        let m = CaModel::new(1.0, 0.05).unwrap();
        let s = propagate_truth(&StateVector::zeros(), &m, &Disturbance::new(1.0, 0.0));
        assert_eq!(s, StateVector::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn drift_superposes_on_ca_step() {
        let m = CaModel::new(1.0, 0.05).unwrap();
        let s0 = StateVector::new(0.0, 2.0, 0.0, 0.0, 0.0, 0.0);
        let s = propagate_truth(&s0, &m, &Disturbance::new(1.0, 0.0));
        assert_eq!(s[PX], 3.0);
        assert_eq!(s[VX], 2.0);
    }

    #[test]
    fn drift_accumulates_linearly() {
        let m = CaModel::new(0.1, 0.05).unwrap();
        let d = Disturbance::from_heading(1.0, 45.0);
        let mut truth = StateVector::zeros();
        let mut model = StateVector::zeros();
        for k in 1..=400 {
            truth = propagate_truth(&truth, &m, &d);
            model = m.step(&model);
            let err = (truth.position() - model.position()).norm();
            assert!((err - k as f64 * 0.1).abs() < 1e-9, "step {k}: {err}");
        }
    }

    #[test]
    fn heading_disturbance_magnitude() {
        let d = Disturbance::from_heading(1.0, 45.0);
        assert!((d.magnitude() - 1.0).abs() < 1e-15);
        assert!((d.current_x - d.current_y).abs() < 1e-15);
    }

    #[test]
    fn checked_state_constructor() {
        assert!(StateVector::try_from_array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).is_ok());
        assert_eq!(StateVector::try_from_array([0.0, f64::NAN, 0.0, 0.0, 0.0, 0.0]), Err(ModelError::NonFiniteState));
    }

    #[test]
    fn measurement_selects_position() {
        let s = StateVector::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        let h = position_measurement_matrix();
        assert_eq!(h * s.0, s.position());
        assert_eq!(acceleration_measurement_matrix() * s.0, s.acceleration());
    }

    proptest! {
        #[test]
        fn transition_semigroup(a in 0.001f64..5.0, b in 0.001f64..5.0) {
            let fa = ca_transition_matrix(a).unwrap();
            let fb = ca_transition_matrix(b).unwrap();
            let fab = ca_transition_matrix(a + b).unwrap();
            prop_assert!((fa * fb - fab).amax() < 1e-12 * (1.0 + (a + b) * (a + b)));
        }

        #[test]
        fn process_noise_symmetric_psd(dt in 0.001f64..2.0, sigma in 0.0f64..3.0) {
            let q = ca_process_noise(dt, sigma).unwrap();
            prop_assert_eq!(q, q.transpose());
            prop_assert!(min_eigenvalue(&q) >= -1e-12);
            prop_assert!(is_valid_covariance(&q));
        }

        #[test]
        fn zero_current_matches_model(v in proptest::array::uniform6(-10.0f64..10.0)) {
            let m = CaModel::new(0.1, 0.05).unwrap();
            let s = StateVector(Vector6::from(v));
            prop_assert_eq!(propagate_truth(&s, &m, &Disturbance::default()), m.step(&s));
        }
    }
}
