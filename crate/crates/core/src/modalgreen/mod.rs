//! Dirichlet Green kernels of `(-Δ)^m` on spherical shells, solved mode by mode
//! in `t = log(1/r)` and summed with zonal kernels.

pub mod counterexample;
pub mod fit;
pub mod zonal;

use crate::error::{Error, Result};
use crate::exppoly::DiffOp;
use crate::fundsol::fundamental_solution;
use crate::logradial::radial_derivative_coeffs;
use crate::rational::{qi, to_f64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use zonal::ZonalSeq;

/// Largest admissible row-equilibrated condition number of a boundary system.
pub const MAX_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellDomain {
    pub r0: f64,
    pub r1: f64,
    pub n: u32,
}

impl ShellDomain {
    pub fn new(r0: f64, r1: f64, n: u32) -> Result<Self> {
        if !(r0 > 0.0 && r0 < r1 && r1.is_finite()) {
            return Err(Error::Range(format!("need 0 < r0 < r1, got r0 = {r0}, r1 = {r1}")));
        }
        if n < 2 {
            return Err(Error::Range(format!("dimension {n} < 2")));
        }
        Ok(ShellDomain { r0, r1, n })
    }

    /// `(T1, T0) = (log 1/r1, log 1/r0)`.
    pub fn t_interval(&self) -> (f64, f64) {
        (-self.r1.ln(), -self.r0.ln())
    }

    pub fn contains(&self, r: f64) -> bool {
        r > self.r0 && r < self.r1
    }

    pub fn distance_to_boundary(&self, r: f64) -> f64 {
        (r - self.r0).min(self.r1 - r)
    }
}

/// Roots of the mode operator: `-q-2j` and `q+n-2-2j` for `j < m`.
pub fn mode_roots(m: u32, n: u32, q: u32) -> Vec<i64> {
    let (q, n) = (q as i64, n as i64);
    let mut r: Vec<i64> = (0..m as i64).flat_map(|j| [-q - 2 * j, q + n - 2 - 2 * j]).collect();
    r.sort_unstable();
    r
}

/// Power exponents `e` of the homogeneous mode solutions `r^e`, sorted.
pub fn mode_exponents(m: u32, n: u32, q: u32) -> Vec<i64> {
    let mut e: Vec<i64> = mode_roots(m, n, q).into_iter().map(|r| -r).collect();
    e.sort_unstable();
    e
}

#[derive(Clone, Copy, Debug)]
struct Term {
    c: f64,
    r: f64,
    p: u32,
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

/// `∂^k (c s^p e^{rs})`.
fn term_deriv(t: &Term, k: u32, s: f64) -> f64 {
    let mut acc = 0.0;
    let mut falling = 1.0;
    for i in 0..=k.min(t.p) {
        acc += binom(k, i) * falling * s.powi((t.p - i) as i32) * t.r.powi((k - i) as i32);
        falling *= (t.p - i) as f64;
    }
    t.c * acc * (t.r * s).exp()
}

/// Whole-line fundamental solution of the mode operator, decaying roots on each side.
#[derive(Clone, Debug)]
pub struct FreeKernel {
    neg: Vec<Term>,
    pos: Vec<Term>,
}

impl FreeKernel {
    pub fn new(m: u32, n: u32, q: u32) -> Result<Self> {
        let roots = mode_roots(m, n, q);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let distinct = roots.windows(2).all(|w| w[0] != w[1]);
        let (mut neg, mut pos) = (vec![], vec![]);
        if distinct {
            // partial fractions: weights 1/p'(r_i)
            for (i, &r) in roots.iter().enumerate() {
                let d: f64 = roots
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &s)| (r - s) as f64)
                    .product();
                let w = sign / d;
                if r < 0 {
                    pos.push(Term { c: w, r: r as f64, p: 0 });
                } else {
                    neg.push(Term { c: -w, r: r as f64, p: 0 });
                }
            }
        } else {
            let op = DiffOp::new(sign as i8, roots.iter().map(|&r| qi(r)).collect());
            let h = fundamental_solution(&op)?;
            let conv = |ts: &[crate::ExpTerm]| -> Vec<Term> {
                ts.iter().map(|t| Term { c: to_f64(&t.coeff), r: to_f64(&t.exponent), p: t.power }).collect()
            };
            neg = conv(h.neg_terms());
            pos = conv(h.pos_terms());
        }
        Ok(FreeKernel { neg, pos })
    }

    pub fn deriv(&self, k: u32, s: f64) -> f64 {
        let side = if s < 0.0 { &self.neg } else { &self.pos };
        side.iter().map(|t| term_deriv(t, k, s)).sum()
    }
}

/// Mode Green kernel `K(t, τ)` with `M_q K = δ(t - τ)` and `∂^k K = 0`,
/// `k < m`, at both ends; the x-space mode coefficient is `e^{(n-2m)τ} K`.
#[derive(Clone, Debug)]
pub struct ModeGreen {
    pub m: u32,
    pub n: u32,
    pub q: u32,
    pub tau: f64,
    pub condition: f64,
    pub residual: f64,
    kernel: FreeKernel,
    basis: Vec<(Term, f64)>,
    coeffs: Vec<Vec<f64>>,
}

impl ModeGreen {
    /// `∂_t^a ∂_τ^b K(t, τ)` for `b` up to the order requested at construction.
    pub fn kernel(&self, a: u32, b: u32, t: f64) -> f64 {
        let sgn = if b % 2 == 0 { 1.0 } else { -1.0 };
        let mut v = sgn * self.kernel.deriv(a + b, t - self.tau);
        for (c, (term, anchor)) in self.coeffs[b as usize].iter().zip(&self.basis) {
            v += c * term_deriv(term, a, t - anchor);
        }
        v
    }

    /// `∂_t^a ∂_τ^b` of the x-space mode coefficient `e^{(n-2m)τ} K(t, τ)`.
    pub fn value(&self, a: u32, b: u32, t: f64) -> f64 {
        let e = self.n as f64 - 2.0 * self.m as f64;
        let s: f64 = (0..=b).map(|i| binom(b, i) * e.powi((b - i) as i32) * self.kernel(a, i, t)).sum();
        (e * self.tau).exp() * s
    }

    pub fn tau_order(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }
}

pub fn mode_green(shell: &ShellDomain, m: u32, q: u32, tau: f64, tau_order: u32) -> Result<ModeGreen> {
    let kernel = FreeKernel::new(m, shell.n, q)?;
    mode_green_with(kernel, shell, m, q, tau, tau_order)
}

/// As [`mode_green`] with a precomputed free kernel.
pub fn mode_green_with(
    kernel: FreeKernel,
    shell: &ShellDomain,
    m: u32,
    q: u32,
    tau: f64,
    tau_order: u32,
) -> Result<ModeGreen> {
    let (t1, t0) = shell.t_interval();
    if !(tau > t1 && tau < t0) {
        return Err(Error::Range(format!("τ = {tau} outside ({t1}, {t0})")));
    }
    let roots = mode_roots(m, shell.n, q);
    let mut basis = vec![];
    let mut i = 0;
    while i < roots.len() {
        let r = roots[i];
        let mult = roots[i..].iter().take_while(|&&x| x == r).count();
        // growing exponentials are anchored where they are largest
        let anchor = if r > 0 { t0 } else { t1 };
        for p in 0..mult as u32 {
            basis.push((Term { c: 1.0, r: r as f64, p }, anchor));
        }
        i += mult;
    }
    let size = 2 * m as usize;
    let ends = [t1, t0];
    let row = |idx: usize| (ends[idx / m as usize], (idx % m as usize) as u32);
    let mut a = DMatrix::from_fn(size, size, |i, j| {
        let (end, k) = row(i);
        term_deriv(&basis[j].0, k, end - basis[j].1)
    });
    let rhs_for = |b: u32| {
        let sgn = if b % 2 == 0 { -1.0 } else { 1.0 };
        DVector::from_fn(size, |i, _| {
            let (end, k) = row(i);
            sgn * kernel.deriv(k + b, end - tau)
        })
    };
    let mut rhs: Vec<DVector<f64>> = (0..=tau_order).map(rhs_for).collect();
    for i in 0..size {
        let s = a.row(i).iter().fold(0.0f64, |x, v| x.max(v.abs()));
        if s > 0.0 {
            a.row_mut(i).scale_mut(1.0 / s);
            for r in &mut rhs {
                r[i] /= s;
            }
        }
    }
    let sv = a.clone().singular_values();
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { cond: condition });
    }
    let lu = a.clone().lu();
    let mut coeffs = vec![];
    let mut residual = 0.0f64;
    for r in &rhs {
        let c = lu.solve(r).ok_or(Error::IllConditioned { cond: condition })?;
        let res = (&a * &c - r).amax() / r.amax().max(1.0);
        residual = residual.max(res);
        coeffs.push(c.iter().copied().collect());
    }
    Ok(ModeGreen { m, n: shell.n, q, tau, condition, residual, kernel, basis, coeffs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Assembled {
    pub value: f64,
    pub modes: u32,
    /// Change of the partial sum over the last doubling.
    pub tail: f64,
    /// Sum of absolute mode contributions; `value` loses accuracy in proportion to `magnitude / |value|`.
    pub magnitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssemblyConfig {
    pub q_start: u32,
    pub q_limit: u32,
    pub tol: f64,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig { q_start: 64, q_limit: 1 << 18, tol: 1e-6 }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `∂_r^a ∂_ρ^b G(x, y)` (radial derivatives at `x` and at `y`) for several `x`
/// sharing one `y`. The mode count doubles from `q_start` until every partial
/// sum moves by less than `tol` relative.
pub fn assemble_many(
    shell: &ShellDomain,
    m: u32,
    y: &[f64],
    xs: &[Vec<f64>],
    order: (u32, u32),
    cfg: AssemblyConfig,
) -> Result<Vec<Assembled>> {
    let n = shell.n as usize;
    if y.len() != n || xs.iter().any(|x| x.len() != n) {
        return Err(Error::Invalid(format!("points must have {n} coordinates")));
    }
    let rho = norm(y);
    if !shell.contains(rho) || xs.iter().any(|x| !shell.contains(norm(x))) {
        return Err(Error::Range("points must lie inside the shell".into()));
    }
    let tau = -rho.ln();
    let alpha = radial_derivative_coeffs(order.0 as usize);
    let beta = radial_derivative_coeffs(order.1 as usize);
    struct Site {
        t: f64,
        zonal: ZonalSeq,
        sum: f64,
        magnitude: f64,
        checkpoint: f64,
        done: bool,
        tail: f64,
        modes: u32,
    }
    let mut sites: Vec<Site> = xs
        .iter()
        .map(|x| {
            let r = norm(x);
            let cos = (x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (r * rho)).clamp(-1.0, 1.0);
            Site { t: -r.ln(), zonal: ZonalSeq::new(shell.n, cos), sum: 0.0, magnitude: 0.0, checkpoint: 0.0, done: false, tail: f64::INFINITY, modes: 0 }
        })
        .collect();
    let mut next_check = cfg.q_start.max(1);
    let mut q = 0;
    loop {
        let g = mode_green(shell, m, q, tau, order.1)?;
        for s in sites.iter_mut().filter(|s| !s.done) {
            let mut v = 0.0;
            for (j, aj) in alpha.iter().enumerate() {
                for (i, bi) in beta.iter().enumerate() {
                    if *aj != 0.0 && *bi != 0.0 {
                        v += aj * bi * g.value(j as u32, i as u32, s.t);
                    }
                }
            }
            v *= (order.0 as f64 * s.t + order.1 as f64 * tau).exp();
            s.sum += v * s.zonal.value();
            s.magnitude += (v * s.zonal.value()).abs();
            s.zonal.advance();
        }
        q += 1;
        if q == next_check {
            for s in sites.iter_mut().filter(|s| !s.done) {
                if q > cfg.q_start {
                    s.tail = (s.sum - s.checkpoint).abs();
                    if s.tail <= cfg.tol * s.sum.abs() {
                        s.done = true;
                        s.modes = q;
                    }
                }
                s.checkpoint = s.sum;
            }
            if sites.iter().all(|s| s.done) {
                break;
            }
            if 2 * q > cfg.q_limit {
                let worst = sites.iter().filter(|s| !s.done).max_by(|a, b| (a.tail / a.sum.abs()).total_cmp(&(b.tail / b.sum.abs()))).unwrap();
                return Err(Error::TruncationWarning { tail: worst.tail, sum: worst.sum });
            }
            next_check = 2 * q;
        }
    }
    Ok(sites.into_iter().map(|s| Assembled { value: s.sum, modes: s.modes, tail: s.tail, magnitude: s.magnitude }).collect())
}

/// `G(x, y)` by the zonal sum, doubling from `q_max` modes.
pub fn assemble_green(shell: &ShellDomain, m: u32, x: &[f64], y: &[f64], q_max: u32) -> Result<Assembled> {
    let cfg = AssemblyConfig { q_start: q_max, ..AssemblyConfig::default() };
    Ok(assemble_many(shell, m, y, &[x.to_vec()], (0, 0), cfg)?[0])
}
