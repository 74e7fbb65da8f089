//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Legendre polynomials `P_0..P_{q_max}` at `x`.
pub fn legendre(q_max: usize, x: f64) -> Vec<f64> {
    let mut p = vec![1.0, x];
    for k in 1..q_max {
        let kf = k as f64;
        p.push(((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0));
    }
    p.truncate(q_max + 1);
    p
}

/// Radial part of the Dirichlet Green function of `-Δ` on `a < |x| < b` in
/// three dimensions for the degree-`q` harmonics.
pub fn shell_mode(a: f64, b: f64, q: u32, r: f64, rho: f64) -> f64 {
    let (lo, hi) = (r.min(rho), r.max(rho));
    let k = 2.0 * q as f64 + 1.0;
    let qf = q as f64;
    (lo.powf(qf) - a.powf(k) * lo.powf(-qf - 1.0)) * (hi.powf(-qf - 1.0) - b.powf(-k) * hi.powf(qf))
        / (k * (1.0 - (a / b).powf(k)))
}

/// Dirichlet Green function of `-Δ` on the shell `a < |x| < b` in `ℝ³`:
/// Newton kernel minus a geometrically convergent correction series.
pub fn shell_green(a: f64, b: f64, x: [f64; 3], y: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let rho = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    let cos = ((x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) / (r * rho)).clamp(-1.0, 1.0);
    let (lo, hi) = (r.min(rho), r.max(rho));
    let q_max = 400;
    let p = legendre(q_max, cos);
    let mut correction = 0.0;
    for q in 0..=q_max {
        let k = 2.0 * q as f64 + 1.0;
        let free = lo.powi(q as i32) / (k * hi.powi(q as i32 + 1));
        let term = k / (4.0 * PI) * p[q] * (free - shell_mode(a, b, q as u32, r, rho));
        correction += term;
        if q > 10 && term.abs() < 1e-18 {
            break;
        }
    }
    1.0 / (4.0 * PI * dist) - correction
}

/// `∂_j |x| = x_j/|x|` (1-based `j`).
pub fn grad_norm(j: usize, x: &[f64]) -> f64 {
    x[j - 1] / x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `∂_i ∂_j |x| = δ_ij/|x| - x_i x_j/|x|^3` (1-based indices).
pub fn hessian_norm(i: usize, j: usize, x: &[f64]) -> f64 {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = if i == j { 1.0 } else { 0.0 };
    d / r - x[i - 1] * x[j - 1] / r.powi(3)
}

/// `∏_{j<m} (1+2j)(2m-2j)` by direct multiplication.
pub fn a_m_zero(m: u64) -> u64 {
    (0..m).map(|j| (1 + 2 * j) * (2 * m - 2 * j)).product()
}
