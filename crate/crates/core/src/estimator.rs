//! Gaussian beliefs, the linear Kalman filter, and KL-divergence tools.
//!
//! The models here are linear, so the "UKF" baseline of the outage
//! comparison is exactly the linear filter in this module: unscented,
//! extended and plain Kalman predictions coincide.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, SMatrix, SVector};
use thiserror::Error;

use crate::kinematics::{CaModel, StateVector};
use crate::linalg::{is_valid_covariance, symmetrize, Matrix2, Matrix2x6, Matrix6, Vector2};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum FilterError {
    #[error("innovation covariance is singular or not positive definite")]
    SingularInnovation,
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("covariance is not symmetric positive semidefinite")]
    InvalidCovariance,
    #[error("measurement noise covariance is not symmetric positive definite")]
    InvalidMeasurementNoise,
    #[error("non-finite value in filter input")]
    NonFinite,
}

/// Mean and covariance of a 6-D Gaussian over [`StateVector`].
pub trait GaussianMoments {
    fn mean(&self) -> &StateVector;
    fn cov(&self) -> &Matrix6;
}

/// Filter belief `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: StateVector,
    pub cov: Matrix6,
}

impl GaussianBelief {
    /// Validated constructor.
    pub fn new(mean: StateVector, cov: Matrix6) -> Result<Self, FilterError> {
        let b = Self { mean, cov };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !self.mean.is_finite() {
            return Err(FilterError::NonFinite);
        }
        if !is_valid_covariance(&self.cov) {
            return Err(FilterError::InvalidCovariance);
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}

impl GaussianMoments for GaussianBelief {
    fn mean(&self) -> &StateVector {
        &self.mean
    }
    fn cov(&self) -> &Matrix6 {
        &self.cov
    }
}

/// History-derived target `q = N(μ_q, Σ_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    pub mean: StateVector,
    pub cov: Matrix6,
}

impl TargetDistribution {
    pub fn new(mean: StateVector, cov: Matrix6) -> Result<Self, FilterError> {
        if !mean.is_finite() {
            return Err(FilterError::NonFinite);
        }
        if !is_valid_covariance(&cov) {
            return Err(FilterError::InvalidCovariance);
        }
        Ok(Self { mean, cov })
    }
}

impl GaussianMoments for TargetDistribution {
    fn mean(&self) -> &StateVector {
        &self.mean
    }
    fn cov(&self) -> &Matrix6 {
        &self.cov
    }
}

/// `mean' = F·mean`, `cov' = F·cov·Fᵀ + Q`.
pub fn predict(b: &GaussianBelief, model: &CaModel) -> GaussianBelief {
    predict_with(b, model.transition(), model.process_noise())
}

/// [`predict`] with an explicit transition and process noise.
pub fn predict_with(b: &GaussianBelief, f: &Matrix6, q: &Matrix6) -> GaussianBelief {
    GaussianBelief { mean: StateVector(f * b.mean.0), cov: symmetrize(&(f * b.cov * f.transpose() + q)) }
}

/// Kalman gain `P Hᵀ (H P Hᵀ + R)⁻¹`.
pub fn kalman_gain<const N: usize, const M: usize>(
    cov: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    h: &SMatrix<f64, M, N>,
) -> Result<SMatrix<f64, N, M>, FilterError> {
    let s = symmetrize(&(h * cov * h.transpose() + r));
    let chol = Cholesky::new(s).ok_or(FilterError::SingularInnovation)?;
    // K = P Hᵀ S⁻¹  <=>  S Kᵀ = H P
    let kt = chol.solve(&(h * cov));
    let k = kt.transpose();
    if k.iter().all(|v| v.is_finite()) {
        Ok(k)
    } else {
        Err(FilterError::SingularInnovation)
    }
}

/// Generic Kalman measurement update with a Joseph-form covariance.
pub fn kalman_update<const N: usize, const M: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    z: &SVector<f64, M>,
    r: &SMatrix<f64, M, M>,
    h: &SMatrix<f64, M, N>,
) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>), FilterError> {
    if !z.iter().chain(r.iter()).all(|v| v.is_finite()) {
        return Err(FilterError::NonFinite);
    }
    if Cholesky::new(symmetrize(r)).is_none() {
        return Err(FilterError::InvalidMeasurementNoise);
    }
    let k = kalman_gain(cov, r, h)?;
    let innovation = z - h * mean;
    let new_mean = mean + k * innovation;
    let i_kh = SMatrix::<f64, N, N>::identity() - k * h;
    let joseph = i_kh * cov * i_kh.transpose() + k * r * k.transpose();
    Ok((new_mean, symmetrize(&joseph)))
}

/// Position update of a 6-D belief with a 2-D measurement.
pub fn update(b: &GaussianBelief, z: &Vector2, r: &Matrix2, h: &Matrix2x6) -> Result<GaussianBelief, FilterError> {
    let (mean, cov) = kalman_update(b.mean.as_vector(), &b.cov, z, r, h)?;
    Ok(GaussianBelief { mean: StateVector(mean), cov })
}

/// Dead reckoning: `steps` predictions with no measurements.
pub fn open_loop_predict(b: &GaussianBelief, model: &CaModel, steps: usize) -> Vec<GaussianBelief> {
    let mut out = Vec::with_capacity(steps);
    let mut current = b.clone();
    for _ in 0..steps {
        current = predict(&current, model);
        out.push(current.clone());
    }
    out
}

/// Closed-form `KL(a ‖ b)` in nats for `D`-dimensional Gaussians.
pub fn gaussian_kl_dim<const D: usize>(
    mean_a: &SVector<f64, D>,
    cov_a: &SMatrix<f64, D, D>,
    mean_b: &SVector<f64, D>,
    cov_b: &SMatrix<f64, D, D>,
) -> Result<f64, FilterError> {
    let chol_a = Cholesky::new(symmetrize(cov_a)).ok_or(FilterError::NotPositiveDefinite)?;
    let chol_b = Cholesky::new(symmetrize(cov_b)).ok_or(FilterError::NotPositiveDefinite)?;
    let log_det = |c: &Cholesky<f64, nalgebra::Const<D>>| -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>()
    };
    let trace_term = chol_b.solve(cov_a).trace();
    let diff = mean_b - mean_a;
    let quad = diff.dot(&chol_b.solve(&diff));
    let kl = 0.5 * (trace_term + quad - D as f64 + log_det(&chol_b) - log_det(&chol_a));
    if !kl.is_finite() {
        return Err(FilterError::NotPositiveDefinite);
    }
    // Rounding can push identical inputs a hair below zero.
    Ok(kl.max(0.0))
}

/// `KL(a ‖ b)` between two 6-D state distributions.
pub fn gaussian_kl(a: &impl GaussianMoments, b: &impl GaussianMoments) -> Result<f64, FilterError> {
    gaussian_kl_dim(a.mean().as_vector(), a.cov(), b.mean().as_vector(), b.cov())
}

/// Outcome of the KL-optimal virtual-measurement solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalMeasurement<const M: usize> {
    pub z: SVector<f64, M>,
    /// Numerical rank of the whitened gain.
    pub rank: usize,
    /// `true` when the gain lost rank and `z` is the minimum-norm solution.
    pub rank_deficient: bool,
}

/// `argmin_z KL(p'(z) ‖ q)` where `p'(z)` is one Kalman update of the prior.
///
/// The posterior covariance does not depend on `z` and the posterior mean is
/// affine in it, so only the Mahalanobis term of the KL varies:
/// minimise `‖L⁻¹(K z − d)‖²` with `Σ_q = L Lᵀ` and
/// `d = μ_q − m + K H m`.
pub fn kl_optimal_measurement_dim<const N: usize, const M: usize>(
    prior_mean: &SVector<f64, N>,
    prior_cov: &SMatrix<f64, N, N>,
    target_mean: &SVector<f64, N>,
    target_cov: &SMatrix<f64, N, N>,
    r: &SMatrix<f64, M, M>,
    h: &SMatrix<f64, M, N>,
) -> Result<OptimalMeasurement<M>, FilterError> {
    let k = kalman_gain(prior_cov, r, h)?;
    let chol_q = Cholesky::new(symmetrize(target_cov)).ok_or(FilterError::NotPositiveDefinite)?;
    let l = chol_q.l();
    let d = target_mean - prior_mean + k * (h * prior_mean);
    let a = l.solve_lower_triangular(&k).ok_or(FilterError::NotPositiveDefinite)?;
    let b = l.solve_lower_triangular(&d).ok_or(FilterError::NotPositiveDefinite)?;

    let a_dyn = DMatrix::from_iterator(N, M, a.iter().copied());
    let b_dyn = DVector::from_iterator(N, b.iter().copied());
    let svd = a_dyn.svd(true, true);
    let sigma_max = svd.singular_values.max();
    let eps = 1e-12 * sigma_max.max(f64::MIN_POSITIVE) * N.max(M) as f64;
    let rank = svd.rank(eps);
    let sol = svd.solve(&b_dyn, eps).map_err(|_| FilterError::SingularInnovation)?;
    let z = SVector::<f64, M>::from_iterator(sol.iter().copied());
    Ok(OptimalMeasurement { z, rank, rank_deficient: rank < M })
}

/// 6-D / 2-D convenience wrapper around [`kl_optimal_measurement_dim`].
pub fn kl_optimal_virtual_measurement(
    prior: &GaussianBelief,
    target: &TargetDistribution,
    r: &Matrix2,
    h: &Matrix2x6,
) -> Result<OptimalMeasurement<2>, FilterError> {
    kl_optimal_measurement_dim(prior.mean.as_vector(), &prior.cov, target.mean.as_vector(), &target.cov, r, h)
}
