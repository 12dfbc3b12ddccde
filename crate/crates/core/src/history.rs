//! Trajectory history and the trend models distilled from it.
//!
//! [`HistoryWindow`] keeps the most recent filtered estimates. Fitting a
//! low-degree least-squares polynomial to their positions gives a smoothed
//! terminal state and a forward trend; [`lagrange_extrapolate`] is the
//! interpolating baseline that shares the same window.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::estimator::TargetDistribution;
use crate::kinematics::{CaModel, StateVector, PX, PY};
use crate::linalg::{Matrix2, Matrix6, Vector2};

/// Diagonal floor applied to fitted residual variances (m²).
pub const RESIDUAL_VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum HistoryError {
    #[error("timestamp {got} s does not follow the last entry at {last} s")]
    NonMonotoneTimestamp { last: f64, got: f64 },
    #[error("need at least {needed} samples, window holds {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("duplicate interpolation node at t = {0} s")]
    DuplicateNode(f64),
    #[error("history window capacity must be at least 1")]
    ZeroCapacity,
    #[error("normal equations are not positive definite")]
    IllConditioned,
    #[error("non-finite timestamp or state")]
    NonFinite,
}

/// Bounded, time-ordered buffer of `(t, estimate)` pairs; oldest evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryWindow {
    capacity: usize,
    entries: VecDeque<(f64, StateVector)>,
}

impl HistoryWindow {
    pub fn new(capacity: usize) -> Result<Self, HistoryError> {
        if capacity == 0 {
            return Err(HistoryError::ZeroCapacity);
        }
        Ok(Self { capacity, entries: VecDeque::with_capacity(capacity) })
    }

    pub fn push(&mut self, t: f64, s: StateVector) -> Result<(), HistoryError> {
        if !t.is_finite() || !s.is_finite() {
            return Err(HistoryError::NonFinite);
        }
        if let Some(&(last, _)) = self.entries.back() {
            if t.is_nan() || t <= last {
                return Err(HistoryError::NonMonotoneTimestamp { last, got: t });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((t, s));
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &(f64, StateVector)> + ExactSizeIterator {
        self.entries.iter()
    }

    pub fn first_time(&self) -> Option<f64> {
        self.entries.front().map(|e| e.0)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.entries.back().map(|e| e.0)
    }

    pub fn last(&self) -> Option<&(f64, StateVector)> {
        self.entries.back()
    }
}

/// Per-axis polynomial trend `p(t) = Σ c_j τʲ` with `τ = (t − t_ref) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    degree: usize,
    t_ref: f64,
    scale: f64,
    window_end: f64,
    coeffs: [Vec<f64>; 2],
    /// `(ΦᵀΦ)⁻¹` on the scaled basis, kept for the trend covariance.
    normal_inverse: DMatrix<f64>,
}

impl PolyModel {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn reference_time(&self) -> f64 {
        self.t_ref
    }

    pub fn time_scale(&self) -> f64 {
        self.scale
    }

    pub fn window_end(&self) -> f64 {
        self.window_end
    }

    /// Coefficients on the scaled basis, `[x, y]`, lowest order first.
    pub fn coefficients(&self) -> &[Vec<f64>; 2] {
        &self.coeffs
    }

    fn tau(&self, t: f64) -> f64 {
        (t - self.t_ref) / self.scale
    }

    /// `order`-th time derivative of the position trend at `t`.
    pub fn derivative(&self, t: f64, order: usize) -> Vector2 {
        let tau = self.tau(t);
        let eval = |c: &[f64]| -> f64 {
            // Horner over d^order/dτ^order of Σ c_j τʲ.
            let mut acc = 0.0;
            for j in (order..c.len()).rev() {
                acc = acc * tau + c[j] * falling_factorial(j, order);
            }
            acc / libm::pow(self.scale, order as f64)
        };
        Vector2::new(eval(&self.coeffs[0]), eval(&self.coeffs[1]))
    }

    pub fn evaluate(&self, t: f64) -> Vector2 {
        self.derivative(t, 0)
    }

    /// Forward extrapolation of the position trend.
    pub fn extrapolate(&self, t: f64) -> Vector2 {
        self.evaluate(t)
    }

    /// Smoothed state at the window end: trend value and its first two derivatives.
    pub fn smoothed_state(&self) -> StateVector {
        let t = self.window_end;
        let (p, v, a) = (self.derivative(t, 0), self.derivative(t, 1), self.derivative(t, 2));
        StateVector::new(p.x, v.x, a.x, p.y, v.y, a.y)
    }

    /// Basis row `[τ⁰ … τᵈ]` differentiated `order` times and mapped to seconds.
    fn basis_row(&self, t: f64, order: usize) -> Vec<f64> {
        let tau = self.tau(t);
        let denom = libm::pow(self.scale, order as f64);
        (0..=self.degree)
            .map(
                |j| {
                    if j < order {
                        0.0
                    } else {
                        falling_factorial(j, order) * libm::pow(tau, (j - order) as f64) / denom
                    }
                },
            )
            .collect()
    }
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    ((n + 1 - k)..=n).fold(1.0, |acc, v| acc * v as f64)
}

fn basis(tau: f64, degree: usize) -> impl Iterator<Item = f64> {
    let mut pow = 1.0;
    (0..=degree).map(move |_| {
        let v = pow;
        pow *= tau;
        v
    })
}

fn scaled_time(w: &HistoryWindow) -> (f64, f64) {
    let first = w.first_time().unwrap_or(0.0);
    let last = w.last_time().unwrap_or(0.0);
    let half = 0.5 * (last - first);
    (0.5 * (first + last), if half > 0.0 { half } else { 1.0 })
}

fn normal_matrix(w: &HistoryWindow, degree: usize, t_ref: f64, scale: f64) -> DMatrix<f64> {
    let n = degree + 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (t, _) in w.iter() {
        let phi: Vec<f64> = basis((t - t_ref) / scale, degree).collect();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    a
}

/// 2-norm condition number of the normal-equation matrix on the scaled basis.
pub fn normal_condition_number(w: &HistoryWindow, degree: usize) -> f64 {
    let (t_ref, scale) = scaled_time(w);
    let eig = normal_matrix(w, degree, t_ref, scale).symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Least-squares fit of `p_x(t)` and `p_y(t)`, independently, by `degree`-th
/// order polynomials. Assembly is a single pass over the window.
pub fn fit_polynomial(w: &HistoryWindow, degree: usize) -> Result<PolyModel, HistoryError> {
    let needed = degree + 1;
    if w.len() < needed {
        return Err(HistoryError::InsufficientSamples { needed, available: w.len() });
    }
    let (t_ref, scale) = scaled_time(w);
    let a = normal_matrix(w, degree, t_ref, scale);
    let mut rhs = [DVector::<f64>::zeros(needed), DVector::<f64>::zeros(needed)];
    for (t, s) in w.iter() {
        for (j, phi) in basis((t - t_ref) / scale, degree).enumerate() {
            rhs[0][j] += phi * s[PX];
            rhs[1][j] += phi * s[PY];
        }
    }
    let chol = a.cholesky().ok_or(HistoryError::IllConditioned)?;
    let coeffs = [chol.solve(&rhs[0]), chol.solve(&rhs[1])];
    if !coeffs.iter().all(|c| c.iter().all(|v| v.is_finite())) {
        return Err(HistoryError::IllConditioned);
    }
    Ok(PolyModel {
        degree,
        t_ref,
        scale,
        window_end: w.last_time().unwrap_or(t_ref),
        coeffs: coeffs.map(|c| c.iter().copied().collect()),
        normal_inverse: chol.inverse(),
    })
}

/// Sample covariance of position residuals (observed − fitted), with
/// `n − degree − 1` degrees of freedom and a floored diagonal.
pub fn residual_covariance(w: &HistoryWindow, p: &PolyModel) -> Result<Matrix2, HistoryError> {
    let needed = p.degree + 2;
    if w.len() < needed {
        return Err(HistoryError::InsufficientSamples { needed, available: w.len() });
    }
    let mut acc = Matrix2::zeros();
    for (t, s) in w.iter() {
        let r = s.position() - p.evaluate(*t);
        acc += r * r.transpose();
    }
    let mut cov = acc / (w.len() - p.degree - 1) as f64;
    cov = (cov + cov.transpose()) * 0.5;
    for i in 0..2 {
        cov[(i, i)] = cov[(i, i)].max(RESIDUAL_VARIANCE_FLOOR);
    }
    Ok(cov)
}

/// History-based target `q` for the state `steps` model steps past the window end.
///
/// Mean: the smoothed terminal state pushed through `F^steps`. Covariance:
/// per axis, the least-squares uncertainty of `(p, v, a)` at the window end
/// plus the residual scatter on the position entries.
pub fn history_target(
    w: &HistoryWindow,
    p: &PolyModel,
    model: &CaModel,
    steps: u32,
) -> Result<TargetDistribution, HistoryError> {
    let resid = residual_covariance(w, p)?;
    let mut cov = Matrix6::zeros();
    let t_end = p.window_end;
    let rows: Vec<Vec<f64>> = (0..3).map(|order| p.basis_row(t_end, order)).collect();
    for (axis, base) in [PX, PY].into_iter().enumerate() {
        let var = resid[(axis, axis)];
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                for a in 0..=p.degree {
                    for b in 0..=p.degree {
                        v += rows[i][a] * p.normal_inverse[(a, b)] * rows[j][b];
                    }
                }
                cov[(base + i, base + j)] = var * v;
            }
        }
    }
    cov[(PX, PX)] += resid[(0, 0)];
    cov[(PY, PY)] += resid[(1, 1)];
    cov[(PX, PY)] += resid[(0, 1)];
    cov[(PY, PX)] += resid[(1, 0)];
    for i in 0..6 {
        cov[(i, i)] = cov[(i, i)].max(RESIDUAL_VARIANCE_FLOOR);
    }
    let mean = StateVector(model.transition().pow(steps) * p.smoothed_state().0);
    TargetDistribution::new(mean, (cov + cov.transpose()) * 0.5).map_err(|_| HistoryError::IllConditioned)
}

/// Lagrange interpolating polynomial through `nodes`, evaluated at `t`.
pub fn lagrange_eval(nodes: &[(f64, Vector2)], t: f64) -> Result<Vector2, HistoryError> {
    if nodes.is_empty() {
        return Err(HistoryError::InsufficientSamples { needed: 1, available: 0 });
    }
    for (i, (ti, _)) in nodes.iter().enumerate() {
        if nodes[..i].iter().any(|(tj, _)| tj == ti) {
            return Err(HistoryError::DuplicateNode(*ti));
        }
    }
    Ok(lagrange_sum(nodes, t))
}

fn lagrange_sum(nodes: &[(f64, Vector2)], t: f64) -> Vector2 {
    let mut out = Vector2::zeros();
    for (j, (tj, pj)) in nodes.iter().enumerate() {
        let mut weight = 1.0;
        for (m, (tm, _)) in nodes.iter().enumerate() {
            if m != j {
                weight *= (t - tm) / (tj - tm);
            }
        }
        out += pj * weight;
    }
    out
}

/// Lagrange extrapolation through the `node_count` most recent window positions.
pub fn lagrange_extrapolate(w: &HistoryWindow, t: f64, node_count: usize) -> Result<Vector2, HistoryError> {
    if node_count == 0 || w.len() < node_count {
        return Err(HistoryError::InsufficientSamples { needed: node_count.max(1), available: w.len() });
    }
    let nodes: Vec<(f64, Vector2)> = w.iter().skip(w.len() - node_count).map(|(t, s)| (*t, s.position())).collect();
    lagrange_eval(&nodes, t)
}

/// Fixed node set cached for repeated Lagrange evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangePredictor {
    nodes: Vec<(f64, Vector2)>,
}

impl LagrangePredictor {
    pub fn from_window(w: &HistoryWindow, node_count: usize) -> Result<Self, HistoryError> {
        if node_count == 0 || w.len() < node_count {
            return Err(HistoryError::InsufficientSamples { needed: node_count.max(1), available: w.len() });
        }
        let nodes = w.iter().skip(w.len() - node_count).map(|(t, s)| (*t, s.position())).collect();
        Ok(Self { nodes })
    }

    pub fn predict(&self, t: f64) -> Vector2 {
        // Nodes come from a strictly increasing window, so no duplicates.
        lagrange_sum(&self.nodes, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_from(f: impl Fn(f64) -> (f64, f64), times: impl Iterator<Item = f64>, cap: usize) -> HistoryWindow {
        let mut w = HistoryWindow::new(cap).unwrap();
        for t in times {
            let (x, y) = f(t);
            w.push(t, StateVector::new(x, 0.0, 0.0, y, 0.0, 0.0)).unwrap();
        }
        w
    }

    #[test]
    fn push_and_evict() {
        let mut w = HistoryWindow::new(3).unwrap();
        w.push(0.0, StateVector::zeros()).unwrap();
        assert_eq!(w.len(), 1);
        for t in 1..4 {
            w.push(t as f64, StateVector::zeros()).unwrap();
        }
        assert_eq!(w.len(), 3);
        assert_eq!(w.first_time(), Some(1.0));
        assert!(w.iter().all(|(t, _)| *t != 0.0));
    }

    #[test]
    fn push_rejects_repeated_time() {
        let mut w = HistoryWindow::new(3).unwrap();
        w.push(1.0, StateVector::zeros()).unwrap();
        assert_eq!(w.push(1.0, StateVector::zeros()), Err(HistoryError::NonMonotoneTimestamp { last: 1.0, got: 1.0 }));
        assert!(w.push(0.5, StateVector::zeros()).is_err());
        assert_eq!(HistoryWindow::new(0), Err(HistoryError::ZeroCapacity));
    }

    #[test]
    fn exact_quadratic_recovery() {
        let gen = |t: f64| 3.0 + 2.0 * t + 0.5 * t * t;
        let w = window_from(|t| (gen(t), -gen(t)), (0..51).map(|i| 10.0 + i as f64), 51);
        let p = fit_polynomial(&w, 2).unwrap();
        for (t, s) in w.iter() {
            assert!((p.evaluate(*t) - s.position()).amax() < 1e-9);
        }
        // Unscale and compare to the generator's coefficients via derivatives.
        let t0 = 0.0;
        assert!((p.evaluate(t0).x - 3.0).abs() < 1e-8);
        assert!((p.derivative(t0, 1).x - 2.0).abs() < 1e-9);
        assert!((p.derivative(t0, 2).x - 1.0).abs() < 1e-10);
        assert!(p.derivative(t0, 3).x.abs() < 1e-15);
    }

    #[test]
    fn stationary_derivatives_vanish() {
        let w = window_from(|_| (4.0, -7.0), (0..20).map(|i| i as f64), 20);
        let p = fit_polynomial(&w, 2).unwrap();
        let s = p.smoothed_state();
        assert!((s.position() - Vector2::new(4.0, -7.0)).amax() < 1e-12);
        assert!(s.velocity().amax() < 1e-12);
        assert!(s.acceleration().amax() < 1e-12);
    }

    #[test]
    fn insufficient_samples() {
        let w = window_from(|t| (t, t), (0..2).map(|i| i as f64), 5);
        assert_eq!(fit_polynomial(&w, 2), Err(HistoryError::InsufficientSamples { needed: 3, available: 2 }));
        let w3 = window_from(|t| (t, t), (0..3).map(|i| i as f64), 5);
        let p = fit_polynomial(&w3, 2).unwrap();
        assert_eq!(residual_covariance(&w3, &p), Err(HistoryError::InsufficientSamples { needed: 4, available: 3 }));
    }

    #[test]
    fn extrapolate_boundary_and_linear_slope() {
        let w = window_from(|t| (2.0 * t + 1.0, 0.5), (0..30).map(|i| i as f64), 30);
        let p = fit_polynomial(&w, 1).unwrap();
        let end = p.window_end();
        assert!((p.extrapolate(end) - p.smoothed_state().position()).amax() < 1e-12);
        assert!((p.extrapolate(end + 5.0).x - p.extrapolate(end).x - 10.0).abs() < 1e-9);
    }

    #[test]
    fn quadratic_extrapolates_exactly() {
        let gen = |t: f64| (1.0 - 0.3 * t + 0.02 * t * t, 5.0 + 1.5 * t);
        let w = window_from(gen, (0..51).map(|i| i as f64), 51);
        let p = fit_polynomial(&w, 2).unwrap();
        for k in 0..=400 {
            let t = 50.0 + k as f64 * 0.1;
            let (x, y) = gen(t);
            assert!((p.extrapolate(t) - Vector2::new(x, y)).amax() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn residual_floor_on_clean_data() {
        let w = window_from(|t| (t * t, 3.0 * t), (0..40).map(|i| i as f64), 40);
        let p = fit_polynomial(&w, 2).unwrap();
        let c = residual_covariance(&w, &p).unwrap();
        assert_eq!(c[(0, 0)], RESIDUAL_VARIANCE_FLOOR);
        assert_eq!(c[(1, 1)], RESIDUAL_VARIANCE_FLOOR);
        assert!(c[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn conditioning_of_scaled_basis() {
        let w = window_from(|t| (t, t), (0..500).map(|i| 10.0 + i as f64 * 0.1), 500);
        let cond = normal_condition_number(&w, 2);
        assert!(cond < 1e6, "condition number {cond}");
    }

    #[test]
    fn lagrange_reproduces_line_and_nodes() {
        let w = window_from(|t| (3.0 * t - 1.0, -t), (0..10).map(|i| i as f64), 10);
        let v = lagrange_extrapolate(&w, 17.0, 8).unwrap();
        assert!((v - Vector2::new(50.0, -17.0)).amax() < 1e-8);
        let at_last = lagrange_extrapolate(&w, 9.0, 8).unwrap();
        assert!((at_last - Vector2::new(26.0, -9.0)).amax() < 1e-12);
    }

    #[test]
    fn lagrange_rejects_duplicates_and_short_windows() {
        let nodes = [(1.0, Vector2::zeros()), (1.0, Vector2::zeros())];
        assert_eq!(lagrange_eval(&nodes, 2.0), Err(HistoryError::DuplicateNode(1.0)));
        let w = window_from(|t| (t, t), (0..3).map(|i| i as f64), 3);
        assert!(lagrange_extrapolate(&w, 4.0, 8).is_err());
        assert!(lagrange_extrapolate(&w, 4.0, 0).is_err());
    }

    #[test]
    fn history_target_mean_follows_model() {
        let gen = |t: f64| (2.0 * t, 0.25 * t * t);
        let w = window_from(gen, (0..51).map(|i| i as f64), 51);
        let p = fit_polynomial(&w, 2).unwrap();
        let model = CaModel::new(0.1, 0.05).unwrap();
        let q = history_target(&w, &p, &model, 100).unwrap();
        // CA propagation of an exact quadratic is exact.
        let (x, y) = gen(60.0);
        assert!((q.mean.position() - Vector2::new(x, y)).amax() < 1e-6);
        assert!(crate::linalg::min_eigenvalue(&q.cov) > 0.0);
    }
}
