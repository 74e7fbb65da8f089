//! Decay-exponent fits of assembled shell kernels and mode growth rates.

use super::{assemble_many, mode_exponents, mode_green, AssemblyConfig, ShellDomain};
use crate::error::{Error, Result};
use crate::logradial::radial_derivative_coeffs;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateId {
    /// `|G| <= C d(y)^λ / |x-y|^{λ+n-2m}` away from the diagonal.
    FarField,
    /// `|G| ~ |x-y|^{2m-n}` near the diagonal.
    NearDiagonal,
    /// `|∂^λ_r ∂^λ_ρ G| <= C / |x-y|` for odd n.
    MixedDerivative,
    /// `|G| <= C log(1 + d/|x-y|)` when `n = 2m`.
    LogLaw,
}

impl EstimateId {
    pub const ALL: [EstimateId; 4] = [Self::FarField, Self::NearDiagonal, Self::MixedDerivative, Self::LogLaw];

    pub fn name(&self) -> &'static str {
        match self {
            Self::FarField => "far-field",
            Self::NearDiagonal => "near-diagonal",
            Self::MixedDerivative => "mixed-derivative",
            Self::LogLaw => "log-law",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown estimate {s:?}")))
    }
}

/// Critical order `[m - n/2 + 1/2]`.
pub fn lambda(m: u32, n: u32) -> u32 {
    (2 * m + 1 - n) / 2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplePlan {
    pub per_decade: u32,
    pub decades: f64,
    /// `log10` of the largest swept scale relative to the shell distance.
    pub top: f64,
}

impl Default for SamplePlan {
    fn default() -> Self {
        SamplePlan { per_decade: 12, decades: 2.0, top: -1.0 }
    }
}

impl SamplePlan {
    /// Default plan, moved half a decade closer to the diagonal for every
    /// mixed-derivative order past the first.
    pub fn for_estimate(estimate: EstimateId, m: u32, n: u32) -> Self {
        let mut plan = SamplePlan::default();
        if estimate == EstimateId::MixedDerivative && n % 2 == 1 {
            plan.top -= 0.5 * lambda(m, n).saturating_sub(1) as f64;
        }
        plan
    }
}

/// Minimum fit requirements.
pub const MIN_SAMPLES: usize = 8;
pub const MIN_DECADES: f64 = 1.5;
/// Slope tolerance relative to `max(1, |target|)`.
pub const SLOPE_TOL: f64 = 0.05;
pub const MIN_R2: f64 = 0.99;

#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub x_r: f64,
    pub y_r: f64,
    pub cos_angle: f64,
    /// The swept scale: `|x - y|`, or `d(y)` for the far-field plan.
    pub scale: f64,
    pub value: f64,
    pub predicted_bound: f64,
    pub modes: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub estimate: EstimateId,
    pub m: u32,
    pub n: u32,
    pub r0: f64,
    pub r1: f64,
    pub lambda: u32,
    /// Variable on the horizontal axis of the fit.
    pub abscissa: &'static str,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub target: f64,
    /// `two-sided` or `at-least` (one-sided lower bound on the slope).
    pub mode: &'static str,
    pub decades: f64,
    pub samples: Vec<Sample>,
    pub pass: bool,
}

/// Least squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn geometric(hi: f64, plan: SamplePlan) -> Vec<f64> {
    let count = (plan.per_decade as f64 * plan.decades).round() as usize + 1;
    (0..count).map(|i| hi * 10f64.powf(-plan.decades * i as f64 / (count - 1) as f64)).collect()
}

fn point(n: u32, r: f64, angle: f64) -> Vec<f64> {
    let mut p = vec![0.0; n as usize];
    p[0] = r * angle.cos();
    p[1] = r * angle.sin();
    p
}

fn offset(n: u32, y: &[f64], s: f64) -> Vec<f64> {
    // 45° between the radial direction e1 and the tangential direction e2
    let mut p = y.to_vec();
    let c = std::f64::consts::FRAC_1_SQRT_2;
    p[0] += s * c;
    p[1] += s * c;
    debug_assert_eq!(p.len(), n as usize);
    p
}

pub fn fit_decay(shell: &ShellDomain, m: u32, estimate: EstimateId, plan: SamplePlan) -> Result<DecayFit> {
    let n = shell.n;
    let lam = lambda(m, n);
    let count = (plan.per_decade as f64 * plan.decades).round() as usize + 1;
    if count < MIN_SAMPLES || plan.decades < MIN_DECADES {
        return Err(Error::InsufficientDecades { decades: plan.decades, required: MIN_DECADES });
    }
    match estimate {
        EstimateId::MixedDerivative | EstimateId::FarField if n % 2 == 0 => {
            return Err(Error::Parity(format!("{} needs odd n", estimate.name())))
        }
        EstimateId::LogLaw if n != 2 * m => return Err(Error::Parity("log-law needs n = 2m".into())),
        EstimateId::NearDiagonal if n == 2 * m => {
            return Err(Error::Parity("n = 2m is logarithmic; use log-law".into()))
        }
        _ => {}
    }
    let cfg = AssemblyConfig::default();
    let rho = (shell.r0 * shell.r1).sqrt();
    let d = shell.distance_to_boundary(rho);
    let mut samples = vec![];
    let (abscissa, target, one_sided);
    match estimate {
        EstimateId::FarField => {
            // y approaches the inner sphere, x stays put at right angles
            let x = point(n, rho, std::f64::consts::FRAC_PI_2);
            let width = shell.r1 - shell.r0;
            for dist in geometric(width * 10f64.powf(plan.top), plan) {
                let y = point(n, shell.r0 + dist, 0.0);
                let v = assemble_many(shell, m, &y, &[x.clone()], (0, 0), cfg)?[0];
                let sep = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                samples.push(Sample {
                    x_r: rho,
                    y_r: shell.r0 + dist,
                    cos_angle: 0.0,
                    scale: dist,
                    value: v.value,
                    predicted_bound: dist.powi(lam as i32) / sep.powf(lam as f64 + n as f64 - 2.0 * m as f64),
                    modes: v.modes,
                });
            }
            abscissa = "d(y)";
            target = lam as f64;
            one_sided = true;
        }
        _ => {
            let y = point(n, rho, 0.0);
            let ss = geometric(d * 10f64.powf(plan.top), plan);
            let xs: Vec<Vec<f64>> = ss.iter().map(|&s| offset(n, &y, s)).collect();
            let order = if estimate == EstimateId::MixedDerivative { (lam, lam) } else { (0, 0) };
            let vals = assemble_many(shell, m, &y, &xs, order, cfg)?;
            for ((x, s), v) in xs.iter().zip(&ss).zip(&vals) {
                let xr = x.iter().map(|a| a * a).sum::<f64>().sqrt();
                let bound = match estimate {
                    EstimateId::LogLaw => (1.0 + d / s).ln(),
                    EstimateId::MixedDerivative => 1.0 / s,
                    _ => s.powf((2.0 * m as f64 - n as f64).min(0.0)),
                };
                samples.push(Sample {
                    x_r: xr,
                    y_r: rho,
                    cos_angle: x[0] / xr,
                    scale: *s,
                    value: v.value,
                    predicted_bound: bound,
                    modes: v.modes,
                });
            }
            abscissa = if estimate == EstimateId::LogLaw { "log(1+d/|x-y|)" } else { "|x-y|" };
            target = match estimate {
                EstimateId::MixedDerivative => 2.0 * m as f64 - n as f64 - 2.0 * lam as f64,
                EstimateId::LogLaw => f64::NAN,
                _ => (2.0 * m as f64 - n as f64).min(0.0),
            };
            one_sided = false;
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = if estimate == EstimateId::LogLaw {
        samples.iter().map(|s| (s.predicted_bound, s.value)).unzip()
    } else {
        samples.iter().map(|s| (s.scale.ln(), s.value.abs().ln())).unzip()
    };
    let (slope, intercept, r2) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        estimate,
        m,
        n,
        r0: shell.r0,
        r1: shell.r1,
        lambda: lam,
        abscissa,
        slope,
        intercept,
        r2,
        target,
        mode: if one_sided { "at-least" } else { "two-sided" },
        decades: plan.decades,
        samples,
        pass: false,
    }
    .judged())
}

impl DecayFit {
    /// Verdict with every tolerance multiplied by `scale`.
    pub fn verdict(&self, scale: f64) -> bool {
        let tol = SLOPE_TOL * scale * self.target.abs().max(1.0);
        match self.estimate {
            EstimateId::LogLaw => self.r2 > 1.0 - (1.0 - MIN_R2) * scale && self.slope.is_finite(),
            _ if self.mode == "at-least" => self.slope >= self.target - tol,
            _ => (self.slope - self.target).abs() <= tol,
        }
    }

    fn judged(mut self) -> Self {
        self.pass = self.verdict(1.0);
        self
    }
}

/// Which estimates apply to `(m, n)`.
pub fn applicable(m: u32, n: u32) -> Vec<EstimateId> {
    if n % 2 == 1 {
        vec![EstimateId::FarField, EstimateId::NearDiagonal, EstimateId::MixedDerivative]
    } else if n == 2 * m {
        vec![EstimateId::LogLaw]
    } else {
        vec![EstimateId::NearDiagonal]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeGrowth {
    pub q: u32,
    /// Fitted `κ` in `g_q ~ r^κ` between a tiny inner sphere and the source.
    pub inner: f64,
    /// Fitted exponent between the source and a huge outer sphere.
    pub outer: f64,
    pub inner_expected: i64,
    pub outer_expected: i64,
    /// Sphere-L² growth exponent `κ + (n-1)/2`.
    pub l2_inner: f64,
    /// `inner + outer`, which inversion fixes at `2m - n`.
    pub kelvin_sum: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub m: u32,
    pub n: u32,
    pub lambda: u32,
    pub modes: Vec<ModeGrowth>,
    pub min_inner: f64,
    pub pass: bool,
}

fn fitted_exponent(shell: &ShellDomain, m: u32, q: u32, rho: f64, lo: f64, hi: f64) -> Result<f64> {
    let g = mode_green(shell, m, q, -rho.ln(), 0)?;
    let rs: Vec<f64> = (0..=24).map(|i| lo * (hi / lo).powf(i as f64 / 24.0)).collect();
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = rs.iter().map(|r| g.value(0, 0, -r.ln()).abs().ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

/// Growth of mode kernels towards a tiny inner sphere and decay towards a
/// huge outer sphere; inversion `r -> 1/r` (`t -> -t`) pairs the two.
pub fn growth_exponents(m: u32, n: u32, q_max: u32) -> Result<GrowthReport> {
    if n % 2 == 0 {
        return Err(Error::Parity("growth exponents are checked for odd n".into()));
    }
    let inner_shell = ShellDomain::new(1e-8, 1.0, n)?;
    let outer_shell = ShellDomain::new(1.0, 1e8, n)?;
    let c = (2 * m) as f64 - n as f64;
    let mut modes = vec![];
    for q in 0..=q_max {
        let e = mode_exponents(m, n, q);
        let (lo_e, hi_e) = (e[m as usize - 1], e[m as usize]);
        let inner = fitted_exponent(&inner_shell, m, q, 0.5, 1e-5, 1e-3)?;
        let outer = fitted_exponent(&outer_shell, m, q, 2.0, 1e3, 1e5)?;
        let kelvin_sum = inner + outer;
        modes.push(ModeGrowth {
            q,
            inner,
            outer,
            inner_expected: hi_e,
            outer_expected: lo_e,
            l2_inner: inner + (n as f64 - 1.0) / 2.0,
            kelvin_sum,
            pass: false,
        });
    }
    let lam = lambda(m, n);
    let min_inner = modes.iter().map(|g| g.inner).fold(f64::INFINITY, f64::min);
    let mut report = GrowthReport { m, n, lambda: lam, modes, min_inner, pass: false };
    for g in &mut report.modes {
        g.pass = g.verdict(c, 1.0);
    }
    report.pass = report.verdict(1.0);
    Ok(report)
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= SLOPE_TOL * scale * b.abs().max(1.0)
}

impl ModeGrowth {
    /// `kelvin` is the exact value `2m - n` of the exponent sum.
    pub fn verdict(&self, kelvin: f64, scale: f64) -> bool {
        close(self.inner, self.inner_expected as f64, scale)
            && close(self.outer, self.outer_expected as f64, scale)
            && close(self.kelvin_sum, kelvin, scale)
    }
}

impl GrowthReport {
    pub fn verdict(&self, scale: f64) -> bool {
        let kelvin = 2.0 * self.m as f64 - self.n as f64;
        let lam = self.lambda as f64;
        self.modes.iter().all(|g| g.verdict(kelvin, scale)) && close(self.min_inner, lam, scale)
    }
}

/// Radial-derivative weights used by the mixed kernel, exposed for reports.
pub fn radial_weights(k: u32) -> Vec<f64> {
    radial_derivative_coeffs(k as usize)
}
