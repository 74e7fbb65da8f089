//! Weighted energy inequalities checked on mode-decomposed test functions.
//!
//! Everything happens in `(t, mode)` space: the angular integrals reduce to sums
//! over modes `(q, l)` with eigenvalue `q(q+n-2)`.

use crate::error::{Error, Result};
use crate::fundsol::{h_even, h_odd};
use crate::poly::Poly;
use crate::quad::{integrate_breaks, pairwise_sum, Tolerance};
use crate::rational::{qi, qr, to_f64, Q};
use crate::symbols::{even_zero_symbol, odd_product_term, SymbolParams};
use crate::PiecewiseExpPoly;
use num::complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Half-width (in units of the width) beyond which a Gaussian profile is below 1e-300.
const GAUSS_CUTOFF: f64 = 38.0;

/// Factor used to probe homogeneity of every margin.
pub const SCALE_PROBE: f64 = 3.0;

/// Grid for free weight constants: `2^-4, ..., 2^4`.
pub fn constant_grid() -> Vec<f64> {
    (-4..=4).map(|e| 2f64.powi(e)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Template {
    /// `P(s) sin^N(πs)` with `s = (t - start)/width ∈ [0, 1]`, N even.
    SinPower { start: f64, width: f64, power: u32, modulation: Vec<f64> },
    /// `P(s) exp(-s²/2)` with `s = (t - center)/width`.
    HermiteGauss { center: f64, width: f64, modulation: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeProfile {
    pub q: u32,
    pub l: u32,
    pub amplitude: f64,
    pub template: Template,
}

fn peval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |a, &k| a * x + k)
}

fn pderiv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &k)| i as f64 * k).collect()
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

impl ModeProfile {
    /// A `sin^{2m+2}` bump, which is `C^{2m+1}` across its endpoints.
    pub fn bump(q: u32, start: f64, width: f64, m: u32) -> Self {
        Self::modulated_bump(q, start, width, m, vec![1.0])
    }

    pub fn modulated_bump(q: u32, start: f64, width: f64, m: u32, modulation: Vec<f64>) -> Self {
        ModeProfile {
            q,
            l: 0,
            amplitude: 1.0,
            template: Template::SinPower { start, width, power: 2 * m + 2, modulation },
        }
    }

    pub fn hermite(q: u32, center: f64, width: f64, modulation: Vec<f64>) -> Self {
        ModeProfile { q, l: 0, amplitude: 1.0, template: Template::HermiteGauss { center, width, modulation } }
    }

    pub fn with_label(mut self, l: u32) -> Self {
        self.l = l;
        self
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.template {
            Template::SinPower { start, width, .. } => (*start, start + width),
            Template::HermiteGauss { center, width, .. } => {
                (center - GAUSS_CUTOFF * width, center + GAUSS_CUTOFF * width)
            }
        }
    }

    /// Support endpoints plus interior nodes that resolve the profile's scale.
    pub fn breaks(&self) -> Vec<f64> {
        match &self.template {
            Template::SinPower { start, width, .. } => (0..=8).map(|i| start + width * i as f64 / 8.0).collect(),
            Template::HermiteGauss { center, width, .. } => {
                let mut out = vec![*center];
                for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, GAUSS_CUTOFF] {
                    out.push(center - k * width);
                    out.push(center + k * width);
                }
                out
            }
        }
    }

    /// `[v, v', ..., v^{(kmax)}]` at `t`.
    pub fn derivatives(&self, t: f64, kmax: usize) -> Vec<f64> {
        let mut out = vec![0.0; kmax + 1];
        match &self.template {
            Template::SinPower { start, width, power, modulation } => {
                let s = (t - start) / width;
                if s <= 0.0 || s >= 1.0 {
                    return out;
                }
                let sin_d = sin_power_derivatives(*power, s, kmax);
                let mut p = vec![modulation.clone()];
                for i in 1..=kmax {
                    p.push(pderiv(&p[i - 1]));
                }
                let pv: Vec<f64> = p.iter().map(|c| peval(c, s)).collect();
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for i in 0..=k {
                        acc += binom(k as u32, i as u32) * pv[i] * sin_d[k - i];
                    }
                    *o = self.amplitude * acc / width.powi(k as i32);
                }
            }
            Template::HermiteGauss { center, width, modulation } => {
                let s = (t - center) / width;
                if s.abs() >= GAUSS_CUTOFF {
                    return out;
                }
                let g = (-0.5 * s * s).exp();
                let mut p = modulation.clone();
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.amplitude * peval(&p, s) * g / width.powi(k as i32);
                    // p <- p' - s p
                    let mut next = pderiv(&p);
                    next.resize(p.len() + 1, 0.0);
                    for (i, c) in p.iter().enumerate() {
                        next[i + 1] -= c;
                    }
                    p = next;
                }
            }
        }
        out
    }
}

/// Derivatives in `s` of `sin^N(πs)` through the cosine expansion of even powers.
fn sin_power_derivatives(n: u32, s: f64, kmax: usize) -> Vec<f64> {
    let half = n / 2;
    let scale = 0.5f64.powi(n as i32);
    let pi = std::f64::consts::PI;
    (0..=kmax)
        .map(|j| {
            let mut acc = if j == 0 { binom(n, half) } else { 0.0 };
            for k in 0..half {
                let w = (n - 2 * k) as f64 * pi;
                let sign = if (half - k) % 2 == 0 { 1.0 } else { -1.0 };
                acc += 2.0 * sign * binom(n, k) * w.powi(j as i32) * (w * s + j as f64 * pi / 2.0).cos();
            }
            scale * acc
        })
        .collect()
}

/// Which substitution links `u` and `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `v = e^{(m-n/2+1/2)t} u`, paired with the `|x|^{-1}` weight.
    Odd,
    /// `v = e^{(m-n/2)t} u`.
    Even,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeFunction {
    pub m: u32,
    pub n: u32,
    pub label: String,
    pub profiles: Vec<ModeProfile>,
}

impl ModeFunction {
    pub fn new(m: u32, n: u32, label: impl Into<String>, profiles: Vec<ModeProfile>) -> Self {
        ModeFunction { m, n, label: label.into(), profiles }
    }

    pub fn branch(&self) -> Branch {
        if self.n % 2 == 1 {
            Branch::Odd
        } else {
            Branch::Even
        }
    }

    /// Exponent `c` in `v = e^{ct} u`.
    pub fn conversion_exponent(&self) -> Q {
        conversion_exponent(self.m, self.n)
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.profiles {
            p.amplitude *= k;
        }
        out
    }

    pub fn support(&self) -> (f64, f64) {
        self.profiles
            .iter()
            .map(|p| p.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, y)| (a.min(x), b.max(y)))
    }

    /// Profiles grouped by `(q, l)`; profiles sharing a mode add up.
    pub fn modes(&self) -> BTreeMap<(u32, u32), Vec<&ModeProfile>> {
        let mut out: BTreeMap<(u32, u32), Vec<&ModeProfile>> = BTreeMap::new();
        for p in &self.profiles {
            out.entry((p.q, p.l)).or_default().push(p);
        }
        out
    }

    /// Value of `u` for one mode, undoing the substitution.
    pub fn u_value(&self, q: u32, l: u32, t: f64) -> f64 {
        let c = to_f64(&self.conversion_exponent());
        (-c * t).exp() * mode_derivs(self.modes().get(&(q, l)).map(|v| v.as_slice()).unwrap_or(&[]), t, 0)[0]
    }

    fn check_params(&self) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let ok = match self.branch() {
            Branch::Odd => n >= 3 && n <= 2 * m + 1,
            Branch::Even => n >= 2 && n <= 2 * m,
        };
        if m == 0 || !ok {
            return Err(Error::Parity(format!("unsupported (m, n) = ({m}, {n})")));
        }
        for p in &self.profiles {
            if let Template::SinPower { power, width, .. } = &p.template {
                if power % 2 == 1 || *power < 2 * m + 2 || *width <= 0.0 {
                    return Err(Error::Invalid(format!("bump needs an even power >= {} and width > 0", 2 * m + 2)));
                }
            }
        }
        Ok(())
    }
}

fn mode_derivs(profiles: &[&ModeProfile], t: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for p in profiles {
        for (o, d) in out.iter_mut().zip(p.derivatives(t, kmax)) {
            *o += d;
        }
    }
    out
}

pub fn conversion_exponent(m: u32, n: u32) -> Q {
    let base = qi(m as i64) - qr(n as i64, 2);
    if n % 2 == 1 {
        base + qr(1, 2)
    } else {
        base
    }
}

/// Coefficients (lowest first) of the mode operator acting on `v`.
///
/// With `-Δ = e^{2t}(-∂² + (n-2)∂ + λ)` on a mode and `u = e^{-ct} v`, the
/// composition is `e^{2mt} e^{-ct} ∏_j P(∂ + 2j - c)` with
/// `P(x) = -x² + (n-2)x + λ`; the remaining exponential cancels against the
/// volume element and the weight.
pub fn energy_operator(m: u32, n: u32, q: u32) -> Vec<Q> {
    let c = conversion_exponent(m, n);
    let lam = qi(q as i64 * (q as i64 + n as i64 - 2));
    let nn = qi(n as i64 - 2);
    let mut acc = Poly::constant(qi(1));
    for j in 0..m {
        let shift = qi(2 * j as i64) - &c;
        // P(x + s) = -x² + (n - 2 - 2s) x + (-s² + (n-2)s + λ)
        let lin = &nn - qi(2) * &shift;
        let cst = -(&shift * &shift) + &nn * &shift + &lam;
        acc = &acc * &Poly::new(vec![cst, lin, qi(-1)]);
    }
    (0..=2 * m as usize).map(|k| acc.coeff(k)).collect()
}

fn to_f64s(c: &[Q]) -> Vec<f64> {
    c.iter().map(to_f64).collect()
}

/// Real part of the symbol `Σ a_k (iγ)^k`.
pub fn real_symbol(coeffs: &[f64], gamma: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .filter(|(k, _)| k % 2 == 0)
        .map(|(k, a)| if k % 4 == 0 { *a } else { -*a } * gamma.powi(k as i32))
        .sum()
}

fn breakpoints(profiles: &[&ModeProfile], extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = profiles
        .iter()
        .map(|p| p.support())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (x, y)| (a.min(x), b.max(y)));
    let mut set = BTreeSet::new();
    for p in profiles {
        for x in p.breaks() {
            set.insert(x.to_bits());
        }
    }
    for &x in extra {
        if x > lo && x < hi {
            set.insert(x.to_bits());
        }
    }
    let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `∫ (Σ a_k ∂^k v) v w dt` for one mode.
fn mode_energy<W: Fn(f64) -> f64>(
    profiles: &[&ModeProfile],
    coeffs: &[f64],
    weight: W,
    kinks: &[f64],
    tol: Tolerance,
) -> Result<f64> {
    let kmax = coeffs.len() - 1;
    let f = |t: f64| {
        let d = mode_derivs(profiles, t, kmax);
        let lv: f64 = coeffs.iter().zip(&d).map(|(a, x)| a * x).sum();
        lv * d[0] * weight(t)
    };
    Ok(integrate_breaks(f, &breakpoints(profiles, kinks), tol)?.value)
}

/// The energy `Σ_modes ∫ L v_q v_q w dt` for a weight given in `t`.
pub fn lhs_energy<W: Fn(f64) -> f64>(v: &ModeFunction, weight: W, kinks: &[f64]) -> Result<f64> {
    v.check_params()?;
    let mut parts = vec![];
    for ((q, _), profs) in v.modes() {
        let coeffs = to_f64s(&energy_operator(v.m, v.n, q));
        parts.push(mode_energy(&profs, &coeffs, &weight, kinks, Tolerance::default())?);
    }
    Ok(pairwise_sum(&parts))
}

/// Frequency-side energy `Σ ∫ Re L(iγ) |v̂|² dγ`, with `v̂` from an FFT of samples.
pub fn plancherel_energy(v: &ModeFunction, samples: usize) -> Result<f64> {
    v.check_params()?;
    let (lo, hi) = v.support();
    let len = 2.0 * (hi - lo);
    let dt = len / samples as f64;
    let dgamma = 2.0 * std::f64::consts::PI / len;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(samples);
    let mut parts = vec![];
    for ((q, _), profs) in v.modes() {
        let coeffs = to_f64s(&energy_operator(v.m, v.n, q));
        let mut buf: Vec<Complex64> = (0..samples)
            .map(|i| Complex64::new(mode_derivs(&profs, lo + i as f64 * dt, 0)[0], 0.0))
            .collect();
        fft.process(&mut buf);
        let norm = dt * dt / (2.0 * std::f64::consts::PI);
        let terms: Vec<f64> = buf
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let kk = if k <= samples / 2 { k as f64 } else { k as f64 - samples as f64 };
                real_symbol(&coeffs, kk * dgamma) * z.norm_sqr() * norm * dgamma
            })
            .collect();
        parts.push(pairwise_sum(&terms));
    }
    Ok(pairwise_sum(&parts))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    /// Energy with the `|x|^{-1}` weight, odd n.
    OddEnergy,
    /// Trace bound through the fundamental-solution weight, odd n.
    OddTrace,
    /// Energy with the weights `1` and `C_R + t`, even n.
    EvenEnergy,
    /// Trace bound through the fundamental-solution weight, even n.
    EvenTrace,
}

impl Identity {
    pub const ALL: [Identity; 4] = [Identity::OddEnergy, Identity::OddTrace, Identity::EvenEnergy, Identity::EvenTrace];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::OddEnergy => "odd-energy",
            Identity::OddTrace => "odd-trace",
            Identity::EvenEnergy => "even-energy",
            Identity::EvenTrace => "even-trace",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown identity {s:?}")))
    }

    pub fn branch(&self) -> Branch {
        match self {
            Identity::OddEnergy | Identity::OddTrace => Branch::Odd,
            _ => Branch::Even,
        }
    }
}

/// The `ψ` weight for the even energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Psi {
    One,
    /// `C_R + t` with `C_R = log 4R`.
    LogShift,
}

#[derive(Clone, Debug, Serialize)]
pub struct MarginReport {
    pub identity: Identity,
    pub m: u32,
    pub n: u32,
    pub label: String,
    /// Energy side (for trace checks, at the worst τ).
    pub lhs: f64,
    /// Derivative terms, or the trace `Σ v_q(τ)²` at the worst τ.
    pub rhs_main: f64,
    /// Angular product term (energy checks only).
    pub rhs_product: f64,
    /// Largest `C` in `lhs >= C rhs` for energies; smallest `C` in `trace <= C energy` for traces.
    pub feasible_c: f64,
    /// Relative change of `feasible_c` under `v -> SCALE_PROBE v`.
    pub scale_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<Psi>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_tau: Option<f64>,
    pub pass: bool,
}

struct EnergyParts {
    lhs: f64,
    derivative: f64,
    product: f64,
}

fn require_branch(v: &ModeFunction, want: Branch) -> Result<()> {
    v.check_params()?;
    if v.branch() != want {
        return Err(Error::Parity(format!("n = {} does not match the {want:?} branch", v.n)));
    }
    Ok(())
}

/// Support of `u` must lie in `B_{2R}`, i.e. `t > -log 2R`.
fn require_support(v: &ModeFunction, r: f64) -> Result<()> {
    if r <= 0.0 {
        return Err(Error::Range(format!("R = {r} must be positive")));
    }
    let (lo, _) = v.support();
    if lo <= -(2.0 * r).ln() {
        return Err(Error::Range(format!("support starts at t = {lo}, needs t > {}", -(2.0 * r).ln())));
    }
    Ok(())
}

fn psi_fn(psi: Psi, r: f64) -> impl Fn(f64) -> f64 {
    let c_r = (4.0 * r).ln();
    move |t| match psi {
        Psi::One => 1.0,
        Psi::LogShift => c_r + t,
    }
}

fn energy_parts(v: &ModeFunction, psi: Option<(Psi, f64)>) -> Result<EnergyParts> {
    let tol = Tolerance::default();
    let w = psi.map(|(p, r)| psi_fn(p, r));
    let weight = |t: f64| w.as_ref().map_or(1.0, |f| f(t));
    let (m, n) = (v.m, v.n);
    let (mut lhs, mut der, mut prod) = (vec![], vec![], vec![]);
    for ((q, _), profs) in v.modes() {
        let coeffs = to_f64s(&energy_operator(m, n, q));
        lhs.push(mode_energy(&profs, &coeffs, &weight, &[], tol)?);
        let lam = (q as f64) * (q + n - 2) as f64;
        // derivative terms; the even branch adds angular gradients λ^i
        let ang: Vec<f64> = (1..=m as usize)
            .map(|k| match v.branch() {
                Branch::Odd => 1.0,
                Branch::Even => (0..=(m as usize - k)).map(|i| lam.powi(i as i32)).sum(),
            })
            .collect();
        let brk = breakpoints(&profs, &[]);
        let f = |t: f64| {
            let d = mode_derivs(&profs, t, m as usize);
            let s: f64 = (1..=m as usize).map(|k| ang[k - 1] * d[k] * d[k]).sum();
            s * weight(t)
        };
        der.push(integrate_breaks(f, &brk, tol)?.value);
        let pt = match v.branch() {
            Branch::Odd => odd_product_term(m, n, q),
            Branch::Even => to_f64(&even_zero_symbol(SymbolParams::new(m, n, q))?),
        };
        let mass = if pt == 0.0 {
            0.0
        } else {
            integrate_breaks(|t| mode_derivs(&profs, t, 0)[0].powi(2) * weight(t), &brk, tol)?.value
        };
        prod.push(pt * mass);
    }
    Ok(EnergyParts { lhs: pairwise_sum(&lhs), derivative: pairwise_sum(&der), product: pairwise_sum(&prod) })
}


fn energy_ratio(p: &EnergyParts) -> f64 {
    let rhs = p.derivative + p.product;
    if rhs > 0.0 {
        p.lhs / rhs
    } else if rhs == 0.0 && p.lhs >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn energy_report(v: &ModeFunction, identity: Identity, psi: Option<(Psi, f64)>) -> Result<MarginReport> {
    let parts = energy_parts(v, psi)?;
    let scaled = energy_parts(&v.scaled(SCALE_PROBE), psi)?;
    let c = energy_ratio(&parts);
    Ok(MarginReport {
        identity,
        m: v.m,
        n: v.n,
        label: v.label.clone(),
        lhs: parts.lhs,
        rhs_main: parts.derivative,
        rhs_product: parts.product,
        feasible_c: c,
        scale_deviation: relative_change(c, energy_ratio(&scaled)),
        psi: psi.map(|p| p.0),
        constants: None,
        worst_tau: None,
        pass: c > 0.0,
    })
}

/// `∫ L v v |x|^{-1} dx >= C (Σ_k ∫ (∂^k v)² + Σ_q Π(q) ∫ v_q²)` for odd n.
pub fn check_odd_energy(v: &ModeFunction) -> Result<MarginReport> {
    require_branch(v, Branch::Odd)?;
    energy_report(v, Identity::OddEnergy, None)
}

/// Even-n energy with weight `ψ`; `u` must be supported in `B_{2R}`.
pub fn check_even_energy(v: &ModeFunction, psi: Psi, r: f64) -> Result<MarginReport> {
    require_branch(v, Branch::Even)?;
    require_support(v, r)?;
    energy_report(v, Identity::EvenEnergy, Some((psi, r)))
}

/// Per-function ingredients of a trace check; the weighted energy is affine
/// in the free constants, so the search over them reuses these numbers.
#[derive(Clone, Debug, Serialize)]
pub struct TraceData {
    pub identity: Identity,
    pub label: String,
    pub taus: Vec<f64>,
    /// `Σ_modes v_q(τ)²`.
    pub trace: Vec<f64>,
    /// Energy with weight `h(t - τ)`.
    pub e_h: Vec<f64>,
    /// Energy with weight 1.
    pub e_one: f64,
    /// Energy with weight `C_R + t` (even branch).
    pub e_psi: f64,
    /// `μ (C_R + τ)` for the even branch, 0 for odd.
    pub shift: Vec<f64>,
}

impl TraceData {
    /// Weighted energy at `taus[i]` for constants `(a, b)`: `(C1, C2)` for odd
    /// n, `(C', C'')` for even n.
    pub fn rhs(&self, i: usize, a: f64, b: f64) -> f64 {
        match self.identity {
            Identity::OddTrace => a * self.e_h[i] + b * self.e_one,
            _ => self.e_h[i] + (self.shift[i] + a) * self.e_one + b * self.e_psi,
        }
    }

    /// Smallest `C` with `trace <= C rhs` at every τ, or `None`.
    pub fn needed(&self, a: f64, b: f64) -> Option<(f64, usize)> {
        let mut worst = (0.0, 0);
        for i in 0..self.taus.len() {
            let (tr, rhs) = (self.trace[i], self.rhs(i, a, b));
            if rhs < 0.0 || (tr > 0.0 && rhs <= 0.0) {
                return None;
            }
            if tr > 0.0 && tr / rhs > worst.0 {
                worst = (tr / rhs, i);
            }
        }
        Some(worst)
    }
}

pub fn trace_data(v: &ModeFunction, identity: Identity, taus: &[f64], r: f64) -> Result<TraceData> {
    require_branch(v, identity.branch())?;
    let tol = Tolerance::default();
    let (m, n) = (v.m, v.n);
    let (h, shift): (PiecewiseExpPoly, Vec<f64>) = match identity {
        Identity::OddTrace => (h_odd(m, n)?, vec![0.0; taus.len()]),
        Identity::EvenTrace => {
            require_support(v, r)?;
            if let Some(&t) = taus.iter().find(|&&t| t <= -(2.0 * r).ln()) {
                return Err(Error::Range(format!("τ = {t} lies outside B_2R")));
            }
            let mu = crate::fundsol::weight_even(m, n, 0.0, r)?.mu4;
            let c_r = (4.0 * r).ln();
            (h_even(m, n)?, taus.iter().map(|t| mu * (c_r + t)).collect())
        }
        _ => return Err(Error::Invalid(format!("{} is not a trace check", identity.name()))),
    };
    let modes = v.modes();
    let ops: Vec<Vec<f64>> = modes.keys().map(|(q, _)| to_f64s(&energy_operator(m, n, *q))).collect();
    let weighted = |w: &dyn Fn(f64) -> f64, kinks: &[f64]| -> Result<f64> {
        let mut parts = vec![];
        for (profs, c) in modes.values().zip(&ops) {
            parts.push(mode_energy(profs, c, w, kinks, tol)?);
        }
        Ok(pairwise_sum(&parts))
    };
    let mut e_h = vec![];
    let mut trace = vec![];
    for &tau in taus {
        e_h.push(weighted(&|t| h.eval(t - tau), &[tau])?);
        let vals: Vec<f64> = modes.values().map(|p| mode_derivs(p, tau, 0)[0].powi(2)).collect();
        trace.push(pairwise_sum(&vals));
    }
    let e_one = weighted(&|_| 1.0, &[])?;
    let e_psi = match identity {
        Identity::EvenTrace => weighted(&psi_fn(Psi::LogShift, r), &[])?,
        _ => 0.0,
    };
    Ok(TraceData { identity, label: v.label.clone(), taus: taus.to_vec(), trace, e_h, e_one, e_psi, shift })
}

/// Best common constants over the grid: returns `(a, b, C, member, τ index)`.
pub fn best_constants(data: &[TraceData]) -> Option<(f64, f64, f64, usize, usize)> {
    let grid = constant_grid();
    let mut best: Option<(f64, f64, f64, usize, usize)> = None;
    for &a in &grid {
        for &b in &grid {
            let mut worst = (0.0, 0, 0);
            let mut ok = true;
            for (k, d) in data.iter().enumerate() {
                match d.needed(a, b) {
                    Some((c, i)) if c >= worst.0 => worst = (c, k, i),
                    Some(_) => {}
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok && best.map_or(true, |x| worst.0 < x.2) {
                best = Some((a, b, worst.0, worst.1, worst.2));
            }
        }
    }
    best
}

/// Trace bound `Σ v_q(τ)² <= C ∫ L v v g` over a τ-grid, searching the free
/// constants of the weight.
pub fn check_trace(v: &ModeFunction, identity: Identity, taus: &[f64], r: f64) -> Result<MarginReport> {
    let data = trace_data(v, identity, taus, r)?;
    let scaled = trace_data(&v.scaled(SCALE_PROBE), identity, taus, r)?;
    let mut report = MarginReport {
        identity,
        m: v.m,
        n: v.n,
        label: v.label.clone(),
        lhs: 0.0,
        rhs_main: 0.0,
        rhs_product: 0.0,
        feasible_c: f64::INFINITY,
        scale_deviation: f64::INFINITY,
        psi: None,
        constants: None,
        worst_tau: None,
        pass: false,
    };
    if let Some((a, b, c, _, i)) = best_constants(std::slice::from_ref(&data)) {
        report.lhs = data.rhs(i, a, b);
        report.rhs_main = data.trace[i];
        report.feasible_c = c;
        report.constants = Some((a, b));
        report.worst_tau = Some(taus[i]);
        report.scale_deviation = match scaled.needed(a, b) {
            Some((c2, _)) => relative_change(c, c2),
            None => f64::INFINITY,
        };
        report.pass = c.is_finite();
    }
    Ok(report)
}

/// τ-grid: nine points across the support plus one on each side, kept inside `B_{2R}`.
pub fn default_taus(v: &ModeFunction, r: f64) -> Vec<f64> {
    let (a, b) = v.support();
    let floor = -(2.0 * r).ln() + 1e-3;
    let mut out: Vec<f64> = (0..=8).map(|i| a + (b - a) * i as f64 / 8.0).collect();
    out.insert(0, a - 1.0);
    out.push(b + 1.0);
    if v.branch() == Branch::Even {
        for t in &mut out {
            *t = t.max(floor);
        }
    }
    out.dedup();
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub identity: Identity,
    pub m: u32,
    pub n: u32,
    pub members: usize,
    /// Weakest margin over the family (smallest lower constant for energies,
    /// largest needed constant for traces).
    pub feasible_c: f64,
    pub worst_member: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<(f64, f64)>,
    pub max_scale_deviation: f64,
    pub reports: Vec<MarginReport>,
    pub pass: bool,
}

/// Scale tolerance for every margin.
pub const SCALE_TOL: f64 = 1e-10;

impl FamilyReport {
    /// Verdict with the scale tolerance multiplied by `scale`.
    pub fn verdict(&self, scale: f64) -> bool {
        let feasible = !self.reports.is_empty() && self.reports.iter().all(|r| r.pass);
        let shared = match self.identity {
            Identity::OddTrace | Identity::EvenTrace => self.constants.is_some(),
            _ => true,
        };
        feasible && shared && self.max_scale_deviation <= SCALE_TOL * scale
    }
}

/// Runs one identity over a family; trace checks use one set of weight
/// constants for the whole family.
pub fn check_family(identity: Identity, fns: &[ModeFunction], r: f64) -> Result<FamilyReport> {
    let (m, n) = fns.first().map_or((0, 0), |f| (f.m, f.n));
    let mut reports = vec![];
    let mut constants = None;
    let (feasible_c, worst_member);
    match identity {
        Identity::OddEnergy | Identity::EvenEnergy => {
            for v in fns {
                if identity == Identity::OddEnergy {
                    reports.push(check_odd_energy(v)?);
                } else {
                    reports.push(check_even_energy(v, Psi::One, r)?);
                    reports.push(check_even_energy(v, Psi::LogShift, r)?);
                }
            }
            let worst = reports.iter().min_by(|a, b| a.feasible_c.total_cmp(&b.feasible_c));
            feasible_c = worst.map_or(f64::INFINITY, |w| w.feasible_c);
            worst_member = worst.map_or(String::new(), |w| w.label.clone());
        }
        Identity::OddTrace | Identity::EvenTrace => {
            let mut data = vec![];
            for v in fns {
                let taus = default_taus(v, r);
                reports.push(check_trace(v, identity, &taus, r)?);
                data.push(trace_data(v, identity, &taus, r)?);
            }
            match best_constants(&data) {
                Some((a, b, c, k, _)) => {
                    constants = Some((a, b));
                    feasible_c = c;
                    worst_member = data[k].label.clone();
                }
                None => {
                    feasible_c = f64::INFINITY;
                    worst_member = String::new();
                }
            }
        }
    }
    let max_scale_deviation = reports.iter().map(|r| r.scale_deviation).fold(0.0, f64::max);
    let mut report = FamilyReport {
        identity,
        m,
        n,
        members: fns.len(),
        feasible_c,
        worst_member,
        constants,
        max_scale_deviation,
        reports,
        pass: false,
    };
    report.pass = report.verdict(1.0);
    Ok(report)
}

/// Critical mode index: the lowest q where the angular term first turns on
/// (odd), or the first q clear of the zero set (even).
fn critical_q(m: u32, n: u32) -> u32 {
    if n % 2 == 1 {
        m - (n - 1) / 2
    } else {
        m - n / 2 + 1
    }
}

/// Fixed library of test functions for one `(m, n)`; every member is
/// supported in `t > 0`, which is inside `B_2` for the even checks.
pub fn library(m: u32, n: u32) -> Vec<ModeFunction> {
    let qc = critical_q(m, n);
    let b = |q, s, w| ModeProfile::bump(q, s, w, m);
    let f = |label: &str, p: Vec<ModeProfile>| ModeFunction::new(m, n, label, p);
    vec![
        f("bump-q0", vec![b(0, 0.0, 2.0)]),
        f("bump-q1", vec![b(1, 0.5, 3.0)]),
        f("bump-critical", vec![b(qc, 0.0, 2.5)]),
        f("bump-above-critical", vec![b(qc + 1, 0.0, 2.5)]),
        f("modulated-q0", vec![ModeProfile::modulated_bump(0, 0.0, 3.0, m, vec![1.0, -3.0, 2.0])]),
        f("narrow-q2", vec![b(2, 1.0, 0.5)]),
        f("wide-q0", vec![b(0, 0.0, 8.0)]),
        f("gauss-q0", vec![ModeProfile::hermite(0, 4.0, 0.1, vec![1.0])]),
        f("hermite-q1", vec![ModeProfile::hermite(1, 5.0, 0.12, vec![0.0, 1.0])]),
        f("two-modes", vec![b(0, 0.0, 2.0), b(1, 1.0, 2.0)]),
        f("shared-mode", vec![b(0, 0.0, 2.0), ModeProfile::modulated_bump(0, 1.0, 2.0, m, vec![-0.5])]),
        f("high-mode", vec![b(4, 0.0, 3.0).with_label(3)]),
        f(
            "mixed",
            vec![
                b(0, 0.0, 2.0),
                ModeProfile::hermite(2, 4.0, 0.1, vec![1.0, 0.0, 1.0]),
                b(5, 2.0, 1.5).with_label(1),
            ],
        ),
    ]
}

/// `(m, n)` pairs exercised for each branch.
pub fn standard_cases(branch: Branch) -> Vec<(u32, u32)> {
    match branch {
        Branch::Odd => vec![(1, 3), (2, 3), (2, 5), (3, 3), (3, 5), (3, 7)],
        Branch::Even => vec![(1, 2), (2, 2), (2, 4), (3, 2), (3, 4), (3, 6)],
    }
}

/// Rewrites `∫ ∂^k v · v · h` as `Σ c_ij ∫ (∂^i v)² ∂^j h` by repeated
/// integration by parts.
pub fn ibp_coefficients(k: u32) -> BTreeMap<(u32, u32), Q> {
    let mut out: BTreeMap<(u32, u32), Q> = BTreeMap::new();
    // (a, b, j, c): c ∫ ∂^a v ∂^b v ∂^j h
    let mut work = vec![(k, 0u32, 0u32, qi(1))];
    while let Some((a, b, j, c)) = work.pop() {
        let (a, b) = if a >= b { (a, b) } else { (b, a) };
        if a == b {
            *out.entry((a, j)).or_insert_with(|| qi(0)) += c;
        } else if a == b + 1 {
            *out.entry((b, j + 1)).or_insert_with(|| qi(0)) += -c * qr(1, 2);
        } else {
            work.push((a - 1, b + 1, j, -c.clone()));
            work.push((a - 1, b, j + 1, -c));
        }
    }
    out.retain(|_, c| *c != qi(0));
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct IbpCheck {
    pub k: u32,
    pub direct: f64,
    pub rearranged: f64,
    pub terms: usize,
}

/// Evaluates both sides of the integration-by-parts rewrite for one profile
/// and a smooth weight given by its derivatives `w(j, t)`.
pub fn ibp_check<W: Fn(usize, f64) -> f64>(p: &ModeProfile, weight: W, k: u32) -> Result<IbpCheck> {
    let tol = Tolerance { abs: 1e-13, rel: 1e-11, ..Tolerance::default() };
    let profs = [p];
    let brk = breakpoints(&profs, &[]);
    let ku = k as usize;
    let direct = integrate_breaks(|t| {
        let d = mode_derivs(&profs, t, ku);
        d[ku] * d[0] * weight(0, t)
    }, &brk, tol)?
    .value;
    let coeffs = ibp_coefficients(k);
    let mut parts = vec![];
    for ((i, j), c) in &coeffs {
        let (i, j) = (*i as usize, *j as usize);
        let val = integrate_breaks(|t| mode_derivs(&profs, t, i)[i].powi(2) * weight(j, t), &brk, tol)?.value;
        parts.push(to_f64(c) * val);
    }
    Ok(IbpCheck { k, direct, rearranged: pairwise_sum(&parts), terms: coeffs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factored_odd(m: u32, n: u32, q: u32) -> Vec<Q> {
        let lam = qi(q as i64 * (q as i64 + n as i64 - 2));
        let mut acc = Poly::constant(qi(if m % 2 == 0 { 1 } else { -1 }));
        for j in 0..m as i64 {
            let a = qi(m as i64) - qr(n as i64, 2) + qr(1, 2) - qi(2 * j);
            let b = qi(m as i64) + qr(n as i64, 2) - qr(3, 2) - qi(2 * j);
            // (-x + a)(-x + b) - λ
            let quad = Poly::new(vec![&a * &b - &lam, -(a + b), qi(1)]);
            acc = &acc * &quad;
        }
        (0..=2 * m as usize).map(|k| acc.coeff(k)).collect()
    }

    fn factored_even(m: u32, n: u32, q: u32) -> Vec<Q> {
        let lam = qi(q as i64 * (q as i64 + n as i64 - 2));
        let h = qi(n as i64 / 2 - 1);
        let mut acc = Poly::constant(qi(1));
        for j in 0..m as i64 {
            let s = qi(m as i64 - 2 * j - 1);
            // -(x - s)² + h² + λ
            let quad = Poly::new(vec![-(&s * &s) + &h * &h + &lam, qi(2) * &s, qi(-1)]);
            acc = &acc * &quad;
        }
        (0..=2 * m as usize).map(|k| acc.coeff(k)).collect()
    }

    #[test]
    fn mode_operator_matches_factored_forms() {
        for m in 1..=4 {
            for n in (3..=2 * m + 1).step_by(2) {
                for q in 0..5 {
                    assert_eq!(energy_operator(m, n, q), factored_odd(m, n, q), "odd {m} {n} {q}");
                }
            }
            for n in (2..=2 * m).step_by(2) {
                for q in 0..5 {
                    assert_eq!(energy_operator(m, n, q), factored_even(m, n, q), "even {m} {n} {q}");
                }
            }
        }
    }

    #[test]
    fn profile_derivatives() {
        let p = ModeProfile::bump(0, 0.0, 1.0, 1);
        let s: f64 = 0.3;
        let d = p.derivatives(s, 2);
        let pi = std::f64::consts::PI;
        assert!((d[0] - (pi * s).sin().powi(4)).abs() < 1e-14);
        assert!((d[1] - 4.0 * pi * (pi * s).sin().powi(3) * (pi * s).cos()).abs() < 1e-12);
        let g = ModeProfile::hermite(0, 1.0, 2.0, vec![1.0]);
        let d = g.derivatives(2.0, 2);
        let e = (-0.125f64).exp();
        assert!((d[1] + 0.5 * e / 2.0).abs() < 1e-15);
        assert!((d[2] - (0.25 - 1.0) * e / 4.0).abs() < 1e-15);
        // finite differences on a modulated bump
        let p = ModeProfile::modulated_bump(0, -1.0, 2.5, 2, vec![1.0, -3.0, 2.0]);
        let t = 0.1;
        let eps = 1e-5;
        let d = p.derivatives(t, 4);
        let up = p.derivatives(t + eps, 4);
        let dn = p.derivatives(t - eps, 4);
        for k in 0..4 {
            let fd = (up[k] - dn[k]) / (2.0 * eps);
            assert!((fd - d[k + 1]).abs() < 1e-6 * (1.0 + d[k + 1].abs()), "k={k}");
        }
    }

    #[test]
    fn plancherel_agrees() {
        let v = ModeFunction::new(1, 3, "bump", vec![ModeProfile::bump(0, 0.0, 2.0, 1)]);
        let a = lhs_energy(&v, |_| 1.0, &[]).unwrap();
        let b = plancherel_energy(&v, 1 << 14).unwrap();
        assert!(relative_change(a, b) < 1e-6, "{a} vs {b}");
        let g = ModeFunction::new(2, 3, "g", vec![ModeProfile::hermite(1, 0.0, 0.5, vec![1.0, 0.5])]);
        let a = lhs_energy(&g, |_| 1.0, &[]).unwrap();
        let b = plancherel_energy(&g, 1 << 14).unwrap();
        assert!(relative_change(a, b) < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn zero_and_orthogonal_modes() {
        let z = ModeFunction::new(2, 3, "zero", vec![ModeProfile::bump(0, 0.0, 1.0, 2)]).scaled(0.0);
        assert_eq!(lhs_energy(&z, |_| 1.0, &[]).unwrap(), 0.0);
        let a = ModeProfile::bump(0, 0.0, 2.0, 2);
        let b = ModeProfile::bump(3, 0.5, 1.0, 2);
        let e = |p: Vec<ModeProfile>| lhs_energy(&ModeFunction::new(2, 3, "", p), |_| 1.0, &[]).unwrap();
        let sum = e(vec![a.clone()]) + e(vec![b.clone()]);
        assert!(relative_change(e(vec![a, b]), sum) < 1e-12);
    }

    #[test]
    fn odd_energy_margin() {
        let v = ModeFunction::new(1, 3, "bump", vec![ModeProfile::bump(0, 0.0, 2.0, 1)]);
        let r = check_odd_energy(&v).unwrap();
        assert!(r.pass);
        assert!(r.feasible_c >= 0.2, "{}", r.feasible_c);
        assert!(r.scale_deviation < 1e-10);
        // at the critical mode the angular term vanishes
        let c = ModeFunction::new(2, 3, "crit", vec![ModeProfile::bump(1, 0.0, 2.0, 2)]);
        let r = check_odd_energy(&c).unwrap();
        assert_eq!(r.rhs_product, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn doubling_scales_by_four() {
        let v = ModeFunction::new(2, 5, "", vec![ModeProfile::bump(2, 0.0, 2.0, 2)]);
        let a = check_odd_energy(&v).unwrap();
        let b = check_odd_energy(&v.scaled(2.0)).unwrap();
        assert!(relative_change(4.0 * a.lhs, b.lhs) < 1e-14);
        assert!(relative_change(a.feasible_c, b.feasible_c) < 1e-14);
    }

    #[test]
    fn even_energy_weights() {
        let v = ModeFunction::new(2, 4, "", vec![ModeProfile::bump(0, 0.0, 2.0, 2)]);
        for psi in [Psi::One, Psi::LogShift] {
            let r = check_even_energy(&v, psi, 1.0).unwrap();
            assert!(r.pass, "{psi:?}: {}", r.feasible_c);
        }
        // odd m picks up (n/2-1)² at q = 0
        let w = ModeFunction::new(3, 4, "", vec![ModeProfile::bump(0, 0.0, 2.0, 3)]);
        assert_eq!(to_f64(&even_zero_symbol(SymbolParams::new(3, 4, 0)).unwrap()), 9.0);
        assert!(check_even_energy(&w, Psi::One, 1.0).unwrap().pass);
        let outside = ModeFunction::new(2, 4, "", vec![ModeProfile::bump(0, -1.0, 2.0, 2)]);
        assert!(matches!(check_even_energy(&outside, Psi::One, 1.0), Err(Error::Range(_))));
    }

    #[test]
    fn trace_checks() {
        let v = ModeFunction::new(1, 3, "", vec![ModeProfile::bump(0, 0.0, 2.0, 1)]);
        let taus = default_taus(&v, 1.0);
        let r = check_trace(&v, Identity::OddTrace, &taus, 1.0).unwrap();
        assert!(r.pass && r.feasible_c > 0.0 && r.feasible_c.is_finite());
        // τ away from the support: trace vanishes, energy stays nonnegative
        let d = trace_data(&v, Identity::OddTrace, &[10.0], 1.0).unwrap();
        assert_eq!(d.trace[0], 0.0);
        assert!(d.rhs(0, 1.0, 1.0) >= 0.0);
        let e = ModeFunction::new(2, 4, "", vec![ModeProfile::bump(0, 0.0, 2.0, 2)]);
        let r = check_trace(&e, Identity::EvenTrace, &default_taus(&e, 1.0), 1.0).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn ibp_low_orders() {
        let c1 = ibp_coefficients(1);
        assert_eq!(c1.into_iter().collect::<Vec<_>>(), vec![((0, 1), qr(-1, 2))]);
        let c2 = ibp_coefficients(2);
        assert_eq!(c2.into_iter().collect::<Vec<_>>(), vec![((0, 2), qr(1, 2)), ((1, 0), qi(-1))]);
        for k in 1..=8 {
            for ((i, j), c) in ibp_coefficients(k) {
                if i == 0 {
                    assert_eq!((j, c), (k, qr(if k % 2 == 0 { 1 } else { -1 }, 2)));
                } else {
                    assert!(2 * i + j <= k);
                }
            }
        }
    }

    #[test]
    fn ibp_numeric() {
        let p = ModeProfile::modulated_bump(0, -0.5, 2.0, 2, vec![1.0, -2.0]);
        // w = e^{t/2} + t²
        let w = |j: usize, t: f64| {
            0.5f64.powi(j as i32) * (0.5 * t).exp()
                + match j {
                    0 => t * t,
                    1 => 2.0 * t,
                    2 => 2.0,
                    _ => 0.0,
                }
        };
        for k in 1..=4 {
            let c = ibp_check(&p, w, k).unwrap();
            assert!((c.direct - c.rearranged).abs() < 1e-8, "k={k}: {c:?}");
        }
    }
}
