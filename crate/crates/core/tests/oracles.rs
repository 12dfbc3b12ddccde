//! Numerical oracles: quadrature, grid search and Monte Carlo fits.

use nalgebra::{Matrix1, Vector1};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use vhd_core::estimator::{gaussian_kl_dim, kalman_update, kl_optimal_measurement_dim};
use vhd_core::history::{fit_polynomial, residual_covariance};
use vhd_core::{HistoryWindow, StateVector};

fn normal_log_pdf(x: f64, mu: f64, var: f64) -> f64 {
    -(x - mu).powi(2) / (2.0 * var) - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
}

/// Composite Simpson estimate of `∫ a ln(a/b)`.
fn kl_quadrature(ma: f64, va: f64, mb: f64, vb: f64) -> f64 {
    let sd = va.sqrt();
    let (lo, hi, n) = (ma - 14.0 * sd, ma + 14.0 * sd, 20_000);
    let h = (hi - lo) / n as f64;
    let f = |x: f64| {
        let la = normal_log_pdf(x, ma, va);
        la.exp() * (la - normal_log_pdf(x, mb, vb))
    };
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn kl1(ma: f64, va: f64, mb: f64, vb: f64) -> f64 {
    gaussian_kl_dim(&Vector1::new(ma), &Matrix1::new(va), &Vector1::new(mb), &Matrix1::new(vb)).unwrap()
}

#[test]
fn kl_matches_quadrature_in_1d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let u = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
            lo + (hi - lo) * rand_distr::Uniform::new(0.0, 1.0).unwrap().sample(rng)
        };
        let (ma, mb) = (u(&mut rng, -3.0, 3.0), u(&mut rng, -3.0, 3.0));
        let (va, vb) = (u(&mut rng, 0.2, 4.0), u(&mut rng, 0.2, 4.0));
        let closed = kl1(ma, va, mb, vb);
        let quad = kl_quadrature(ma, va, mb, vb);
        assert!((closed - quad).abs() < 1e-3, "closed {closed} quadrature {quad}");
    }
}

#[test]
fn scalar_optimal_measurement_beats_dense_grid() {
    let (m, p, r, h) = (Vector1::new(0.0), Matrix1::new(1.0), Matrix1::new(1.0), Matrix1::new(1.0));
    let (mq, vq) = (Vector1::new(1.0), Matrix1::new(1.0));
    let opt = kl_optimal_measurement_dim(&m, &p, &mq, &vq, &r, &h).unwrap();
    assert!((opt.z[0] - 2.0).abs() < 1e-9);
    let kl_at = |z: f64| {
        let (mean, cov) = kalman_update(&m, &p, &Vector1::new(z), &r, &h).unwrap();
        gaussian_kl_dim(&mean, &cov, &mq, &vq).unwrap()
    };
    let (post, _) = kalman_update(&m, &p, &opt.z, &r, &h).unwrap();
    assert!((post[0] - 1.0).abs() < 1e-9);
    let best = kl_at(opt.z[0]);
    let (mut grid_best, mut grid_z) = (f64::INFINITY, 0.0);
    for i in 0..=20_000 {
        let z = -10.0 + i as f64 * 1e-3;
        let v = kl_at(z);
        assert!(best <= v + 1e-12);
        if v < grid_best {
            grid_best = v;
            grid_z = z;
        }
    }
    assert!((grid_z - 2.0).abs() <= 1e-3);
}

fn noisy_quadratic(seed: u64, n: usize, sigma: f64, cx: [f64; 3], cy: [f64; 3]) -> HistoryWindow {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = HistoryWindow::new(n).unwrap();
    for i in 0..n {
        let t = i as f64 * 0.1;
        let ex: f64 = StandardNormal.sample(&mut rng);
        let ey: f64 = StandardNormal.sample(&mut rng);
        let x = cx[0] + cx[1] * t + cx[2] * t * t + sigma * ex;
        let y = cy[0] + cy[1] * t + cy[2] * t * t + sigma * ey;
        w.push(t, StateVector::new(x, 0.0, 0.0, y, 0.0, 0.0)).unwrap();
    }
    w
}

#[test]
fn noisy_quadratic_coefficients() {
    let cx = [3.0, -1.5, 0.04];
    let cy = [-2.0, 0.8, -0.02];
    for seed in 0..100 {
        let w = noisy_quadratic(seed, 500, 0.1, cx, cy);
        let p = fit_polynomial(&w, 2).unwrap();
        let c0 = p.derivative(0.0, 0);
        let c1 = p.derivative(0.0, 1);
        let c2 = p.derivative(0.0, 2) / 2.0;
        for (axis, truth) in [cx, cy].iter().enumerate() {
            let got = [c0[axis], c1[axis], c2[axis]];
            for j in 0..3 {
                assert!((got[j] - truth[j]).abs() < 0.05, "seed {seed} axis {axis} term {j}: {}", got[j]);
            }
        }
    }
}

#[test]
fn residual_variance_of_unit_noise() {
    let mut mean = [0.0; 2];
    let mut within = 0;
    for seed in 0..100 {
        let w = noisy_quadratic(1000 + seed, 500, 1.0, [1.0, 0.5, 0.01], [0.0, -0.3, 0.02]);
        let p = fit_polynomial(&w, 2).unwrap();
        let c = residual_covariance(&w, &p).unwrap();
        for i in 0..2 {
            mean[i] += c[(i, i)] / 100.0;
            within += ((c[(i, i)] - 1.0).abs() < 0.2) as usize;
        }
    }
    assert!(mean.iter().all(|m| (m - 1.0).abs() < 0.2), "{mean:?}");
    assert!(within >= 196, "{within} of 200 within tolerance");
}
