//! Fixed-size matrix aliases and a few covariance helpers.

use nalgebra::{DMatrix, SMatrix};

pub type Vector2 = nalgebra::Vector2<f64>;
pub type Vector6 = nalgebra::Vector6<f64>;
pub type Matrix2 = nalgebra::Matrix2<f64>;
pub type Matrix6 = nalgebra::Matrix6<f64>;
pub type Matrix2x6 = nalgebra::Matrix2x6<f64>;
pub type Matrix6x2 = nalgebra::Matrix6x2<f64>;

/// `(P + Pᵀ) / 2`
pub fn symmetrize<const D: usize>(p: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (p + p.transpose()) * 0.5
}

/// Largest elementwise asymmetry relative to the largest entry.
pub fn relative_asymmetry<const D: usize>(p: &SMatrix<f64, D, D>) -> f64 {
    let scale = p.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (p - p.transpose()).amax() / scale
}

/// Smallest eigenvalue of the symmetric part of `p`.
pub fn min_eigenvalue<const D: usize>(p: &SMatrix<f64, D, D>) -> f64 {
    let s = symmetrize(p);
    DMatrix::from_iterator(D, D, s.iter().copied()).symmetric_eigen().eigenvalues.min()
}

/// Symmetric within `1e-9` relative and PSD down to `-1e-9 · trace`.
pub fn is_valid_covariance<const D: usize>(p: &SMatrix<f64, D, D>) -> bool {
    if !p.iter().all(|v| v.is_finite()) {
        return false;
    }
    if relative_asymmetry(p) > 1e-9 {
        return false;
    }
    let tol = 1e-9 * libm::fabs(p.trace()).max(f64::MIN_POSITIVE);
    min_eigenvalue(p) >= -tol
}

/// `true` when `a - b` is positive semidefinite (within `tol`).
pub fn loewner_geq<const D: usize>(a: &SMatrix<f64, D, D>, b: &SMatrix<f64, D, D>, tol: f64) -> bool {
    min_eigenvalue(&(a - b)) >= -tol
}
