//! Operator symbols in the frequency variable γ, their real/imaginary part
//! recurrences, and grid sweeps of the associated lower bounds.

use crate::error::{Error, Result};
use crate::exppoly::DiffOp;
use crate::poly::Poly;
use crate::rational::{qi, to_f64, Q};
use num::complex::Complex64;
use num::One;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolParams {
    pub m: u32,
    pub n: u32,
    pub q: u32,
}

impl SymbolParams {
    pub fn new(m: u32, n: u32, q: u32) -> Self {
        SymbolParams { m, n, q }
    }
}

/// Real and imaginary parts of a symbol as polynomials in γ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolPoly {
    pub re: Poly,
    pub im: Poly,
}

impl SymbolPoly {
    pub fn parity_ok(&self) -> bool {
        self.re.is_even() && self.im.is_odd()
    }
}

fn require_odd(n: u32) -> Result<()> {
    if n % 2 == 1 && n >= 3 {
        Ok(())
    } else {
        Err(Error::Parity(format!("n = {n} must be odd and at least 3")))
    }
}

fn require_even(m: u32, n: u32) -> Result<()> {
    if n % 2 == 0 && n >= 2 && n <= 2 * m {
        Ok(())
    } else {
        Err(Error::Parity(format!("n = {n} must be even with 2 <= n <= 2m = {}", 2 * m)))
    }
}

/// Shifted recurrence index for odd n: `q + (n-3)/2`.
pub fn shifted_index(n: u32, q: u32) -> u32 {
    q + (n - 3) / 2
}

/// Direct expansion of `(-1)^m ∏_j (-iγ + m-1-2j-p)(-iγ + m-2j+p)`.
pub fn symbol_product(sp: SymbolParams) -> Result<SymbolPoly> {
    require_odd(sp.n)?;
    let (m, p) = (sp.m as i64, shifted_index(sp.n, sp.q) as i64);
    let gamma = Poly::monomial(qi(1), 1);
    let mut re = Poly::constant(qi(if m % 2 == 0 { 1 } else { -1 }));
    let mut im = Poly::zero();
    for j in 0..m {
        for c in [m - 1 - 2 * j - p, m - 2 * j + p] {
            let c = Poly::constant(qi(c));
            // (re + i im)(c - iγ)
            let nre = &(&re * &c) + &(&im * &gamma);
            let nim = &(&im * &c) - &(&re * &gamma);
            re = nre;
            im = nim;
        }
    }
    Ok(SymbolPoly { re, im })
}

fn sq_plus(k: i64) -> Poly {
    Poly::square_plus(qi(k * k))
}

fn prod_sq(lo: i64, hi: i64) -> Poly {
    Poly::product((lo..=hi).map(sq_plus))
}

fn step_divide(num: Poly, m: i64, p: i64) -> Result<Poly> {
    num.div_exact(&sq_plus(m - p))
        .ok_or_else(|| Error::InexactDivision(format!("recurrence step m={m}, p={p}")))
}

/// Real part `a_p` via the three-term recurrence.
pub fn a_recurrence(m: u32, p: u32) -> Result<Poly> {
    let m = m as i64;
    let a0 = prod_sq(0, m - 1);
    let a1 = &sq_plus_shift(m * m + 1) * &prod_sq(0, m - 2);
    if p == 0 {
        return Ok(a0);
    }
    let (mut prev, mut cur) = (a0, a1);
    for k in 2..=p as i64 {
        let num = &cur.scale(&qi(2 * k - 1)) + &(&sq_plus(k - 1 + m) * &prev);
        let next = step_divide(num, m, k)?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn sq_plus_shift(s: i64) -> Poly {
    Poly::square_plus(qi(s))
}

/// Imaginary part `b_p` via the three-term recurrence.
pub fn b_recurrence(m: u32, p: u32) -> Result<Poly> {
    let mi = m as i64;
    let gm = Poly::monomial(qi(mi), 1);
    let b0 = &gm * &prod_sq(1, mi - 1);
    // For m = 1 the product ∏_{k=1}^{m-2} is read as 1/γ², which cancels the γ² factor.
    let b1 = if m == 1 {
        Poly::monomial(qi(1), 1)
    } else {
        &(&gm * &sq_plus_shift(mi * mi - 1)) * &prod_sq(1, mi - 2)
    };
    if p == 0 {
        return Ok(b0);
    }
    let (mut prev, mut cur) = (b0, b1);
    for k in 2..=p as i64 {
        let num = &cur.scale(&qi(-(2 * k - 1))) + &(&sq_plus(k - 1 + mi) * &prev);
        let next = step_divide(num, mi, k)?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityMismatch {
    pub q: u32,
    pub part: &'static str,
    pub direct: String,
    pub recurrence: String,
}

/// Compares direct expansion with both recurrences for all `q <= q_max`.
pub fn identity_mismatches(m: u32, n: u32, q_max: u32) -> Result<Vec<IdentityMismatch>> {
    require_odd(n)?;
    let mut out = vec![];
    for q in 0..=q_max {
        let s = symbol_product(SymbolParams::new(m, n, q))?;
        let p = shifted_index(n, q);
        let a = a_recurrence(m, p)?;
        let b = b_recurrence(m, p)?;
        if s.re != a {
            out.push(IdentityMismatch { q, part: "re", direct: s.re.to_string(), recurrence: a.to_string() });
        }
        if s.im != b {
            out.push(IdentityMismatch { q, part: "im", direct: s.im.to_string(), recurrence: b.to_string() });
        }
    }
    Ok(out)
}

pub fn check_real_part(m: u32, n: u32, q_max: u32) -> Result<bool> {
    Ok(identity_mismatches(m, n, q_max)?.iter().all(|x| x.part != "re"))
}

/// `∏_{j=0}^{m-1} (1+2j)(2m-2j)`, the value of `a_m` at γ = 0.
pub fn a_m_at_zero_closed_form(m: u32) -> Q {
    let m = m as i64;
    (0..m).fold(Q::one(), |acc, j| acc * qi((1 + 2 * j) * (2 * m - 2 * j)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub window: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { window: 60.0, step: 1.0 / 64.0 }
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = (self.window / self.step).floor() as usize;
        (0..=n).map(|k| k as f64 * self.step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exception {
    pub q: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// Step-wise constants from the large-q / moderate-q argument (n = 3 only).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StagedConstants {
    /// Threshold `2^{m+4} m` beyond which the relative perturbation stays below 1/2.
    pub c_m: u64,
    /// Minimum of `Re ∏(1 + c_j)` over `q >= c_m`, `|γ| <= q+1` on the grid (should be ≥ 1/2).
    pub large_q_min_factor: Option<f64>,
    /// Largest grid γ with `min(a_m, a_{m+1}) >= 1` on `[0, γ]`.
    pub eps0: f64,
    /// `min(1, ∏ (eps0² + k²))`.
    pub d: f64,
    /// `d` divided by the product at `q = c_m`.
    pub d_m: f64,
    /// Whether `a_q >= d_m ∏(...)` held on `m <= q <= min(c_m, q_max)`, `|γ| <= q+1`.
    pub moderate_q_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub m: u32,
    pub n: u32,
    pub q_max: u32,
    pub grid: Grid,
    pub min_ratio: f64,
    pub argmin_q: u32,
    pub argmin_gamma: f64,
    pub tail_limit: f64,
    pub monotone: Option<bool>,
    pub certified: bool,
    pub exceptions: Vec<Exception>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub staged: Option<StagedConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub large_q_margin: Option<f64>,
}

/// `Re L(iγ, ·)` for odd n evaluated numerically from the factored form.
pub fn real_symbol_f64(m: u32, p: u32, gamma: f64) -> f64 {
    let (m, p) = (m as f64, p as f64);
    let mut z = Complex64::new(if m as u32 % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    for j in 0..m as u32 {
        let j = j as f64;
        z *= Complex64::new(m - 1.0 - 2.0 * j - p, -gamma);
        z *= Complex64::new(m - 2.0 * j + p, -gamma);
    }
    z.re
}

/// `∏_{s} (q(q+n-2) - s(s+n-2))` over `s = -n/2+3/2, …, m-n/2+1/2` (odd n).
pub fn odd_product_term(m: u32, n: u32, q: u32) -> f64 {
    let (n, q) = (n as i64, q as i64);
    let lo = -(n - 3) / 2;
    let hi = m as i64 - (n - 1) / 2;
    (lo..=hi)
        .map(|s| (q * (q + n - 2) - s * (s + n - 2)) as f64)
        .product()
}

/// Sweep of `Re L(iγ) / (Σ γ^{2k} + ∏(...))` over `q <= q_max` and the γ grid.
pub fn sweep_odd_lower_bound(m: u32, n: u32, q_max: u32, grid: Grid) -> Result<BoundReport> {
    require_odd(n)?;
    let gammas = grid.points();
    let per_q: Vec<(u32, f64, f64, bool, bool)> = (0..=q_max)
        .into_par_iter()
        .map(|q| {
            let p = shifted_index(n, q);
            let prod = odd_product_term(m, n, q);
            let mut best = (f64::INFINITY, 0.0);
            let mut zero_rhs = false;
            let mut monotone = true;
            for &g in &gammas {
                let g2 = g * g;
                let gsum: f64 = (1..=m).map(|k| g2.powi(k as i32)).sum();
                let rhs = gsum + prod;
                let lhs = real_symbol_f64(m, p, g);
                if p >= 2 {
                    let prev = real_symbol_f64(m, p - 2, g);
                    if lhs < prev - 1e-12 * lhs.abs().max(prev.abs()).max(1.0) {
                        monotone = false;
                    }
                }
                if rhs <= 0.0 {
                    zero_rhs = true;
                    continue;
                }
                let r = lhs / rhs;
                if r < best.0 {
                    best = (r, g);
                }
            }
            (q, best.0, best.1, zero_rhs, monotone)
        })
        .collect();
    let mut min_ratio = f64::INFINITY;
    let (mut argmin_q, mut argmin_gamma) = (0, 0.0);
    let mut exceptions = vec![];
    let mut monotone = true;
    for (q, r, g, zero, mono) in per_q {
        if r < min_ratio {
            min_ratio = r;
            argmin_q = q;
            argmin_gamma = g;
        }
        if zero {
            exceptions.push(Exception { q, j: None, gamma: Some(0.0) });
        }
        monotone &= mono;
    }
    // Leading coefficients of LHS and RHS in γ^{2m}.
    let lead = symbol_product(SymbolParams::new(m, n, q_max))?.re.leading();
    let tail_limit = to_f64(&lead);
    let staged = if n == 3 { Some(staged_constants(m, q_max, grid)) } else { None };
    let certified = min_ratio > 0.0 && min_ratio.is_finite() && tail_limit > 0.0;
    Ok(BoundReport {
        m,
        n,
        q_max,
        grid,
        min_ratio,
        argmin_q,
        argmin_gamma,
        tail_limit,
        monotone: Some(monotone),
        certified,
        exceptions,
        staged,
        large_q_margin: None,
    })
}

pub fn c_m(m: u32) -> u64 {
    (1u64 << (m + 4)) * m as u64
}

fn staged_constants(m: u32, q_max: u32, grid: Grid) -> StagedConstants {
    let cm = c_m(m);
    let gammas = grid.points();
    let mi = m as f64;
    // Large q: Re ∏ (1 + iγ(2m-4j-1)/(γ² + (q-m+1+2j)(q+m-2j)))
    let large_q_min_factor = (cm..=q_max as u64)
        .into_par_iter()
        .map(|q| {
            let qf = q as f64;
            gammas
                .iter()
                .filter(|&&g| g <= qf + 1.0)
                .map(|&g| {
                    let mut z = Complex64::new(1.0, 0.0);
                    for j in 0..m {
                        let j = j as f64;
                        let den = g * g + (qf - mi + 1.0 + 2.0 * j) * (qf + mi - 2.0 * j);
                        z *= Complex64::new(1.0, g * (2.0 * mi - 4.0 * j - 1.0) / den);
                    }
                    z.re
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let large_q_min_factor = large_q_min_factor.is_finite().then_some(large_q_min_factor);
    let mut eps0 = 0.0;
    for &g in &gammas {
        let v = real_symbol_f64(m, m, g).min(real_symbol_f64(m, m + 1, g));
        if v < 1.0 {
            break;
        }
        eps0 = g;
    }
    let d = (0..m)
        .map(|k| eps0 * eps0 + (k * k) as f64)
        .product::<f64>()
        .min(1.0);
    let cmf = cm as f64;
    let big: f64 = (0..m).map(|p| cmf * (cmf + 1.0) - (p * (p + 1)) as f64).product();
    let d_m = d / big;
    let top = (cm as u32).min(q_max);
    let moderate_q_ok = (m..=top).into_par_iter().all(|q| {
        let prod = odd_product_term(m, 3, q);
        gammas
            .iter()
            .filter(|&&g| g <= q as f64 + 1.0)
            .all(|&g| real_symbol_f64(m, q, g) >= d_m * prod)
    });
    StagedConstants {
        c_m: cm,
        large_q_min_factor,
        eps0,
        d,
        d_m,
        moderate_q_ok,
    }
}

/// `B_j(q) = q + n/2 + m - 2j - 2`.
pub fn b_j(m: u32, n: u32, j: u32, q: u32) -> i64 {
    q as i64 + n as i64 / 2 + m as i64 - 2 * j as i64 - 2
}

/// `∏_j (-∂² + B_j(q)²)` as a root-form operator; the sign is `(-1)^m`.
pub fn even_symbol(sp: SymbolParams) -> Result<DiffOp> {
    require_even(sp.m, sp.n)?;
    let mut roots = vec![];
    for j in 0..sp.m {
        let b = b_j(sp.m, sp.n, j, sp.q);
        roots.push(qi(b));
        roots.push(qi(-b));
    }
    Ok(DiffOp::new(if sp.m % 2 == 0 { 1 } else { -1 }, roots))
}

/// Value of the even symbol at zero frequency, from the factored product over p.
pub fn even_zero_symbol(sp: SymbolParams) -> Result<Q> {
    require_even(sp.m, sp.n)?;
    let (m, h, q) = (sp.m as i64, sp.n as i64 / 2, sp.q as i64);
    let lam = q * (q + 2 * h - 2);
    let factor = |p: i64| qi(lam - p * (p + 2 * h - 2));
    let mut v = Q::one();
    if m % 2 == 0 {
        for j in 1..=m / 2 {
            let f = factor(-h + 2 * j);
            v *= &f * &f;
        }
    } else {
        for j in 1..=(m - 1) / 2 {
            let f = factor(-h + 1 + 2 * j);
            v *= &f * &f;
        }
        v *= qi(lam + (h - 1) * (h - 1));
    }
    Ok(v)
}

/// `∏_j B_j(q)²`.
pub fn even_zero_symbol_from_roots(m: u32, n: u32, q: u32) -> Q {
    (0..m).fold(Q::one(), |acc, j| {
        let b = b_j(m, n, j, q);
        acc * qi(b * b)
    })
}

/// Sweep of `B_j(q)² / (q(q+n-2))` over `1 <= q <= q_max`, skipping the zero set.
pub fn sweep_even_lower_bound(m: u32, n: u32, q_max: u32) -> Result<BoundReport> {
    require_even(m, n)?;
    let mut min_ratio = f64::INFINITY;
    let (mut argmin_q, mut exceptions) = (0, vec![]);
    for q in 0..=q_max {
        for j in 0..m {
            let b = b_j(m, n, j, q);
            if b == 0 {
                exceptions.push(Exception { q, j: Some(j), gamma: None });
                continue;
            }
            if q == 0 {
                continue;
            }
            let r = (b * b) as f64 / (q as f64 * (q + n - 2) as f64);
            if r < min_ratio {
                min_ratio = r;
                argmin_q = q;
            }
        }
    }
    let k = m as i64 - n as i64 / 2;
    let q0 = (k + 1) as f64;
    let margin = 1.0 - (k * (m as i64 + n as i64 / 2 - 2)) as f64 / (q0 * (q0 + n as f64 - 2.0));
    Ok(BoundReport {
        m,
        n,
        q_max,
        grid: Grid { window: 0.0, step: 1.0 },
        min_ratio,
        argmin_q,
        argmin_gamma: 0.0,
        tail_limit: 1.0,
        monotone: None,
        certified: min_ratio > 0.0 && min_ratio.is_finite() && margin > 0.0,
        exceptions,
        staged: None,
        large_q_margin: Some(margin),
    })
}

/// Zero set `q = 2j - m - n/2 + 2` restricted to `q >= 0`.
pub fn even_exception_set(m: u32, n: u32) -> Vec<(u32, u32)> {
    (0..m)
        .filter_map(|j| {
            let q = 2 * j as i64 - m as i64 - n as i64 / 2 + 2;
            (q >= 0).then_some((q as u32, j))
        })
        .collect()
}

/// `L(-∂, -p(p+n-2))` for odd n in root form: roots `c_j + p` and `-c_j - 1 - p`
/// with `c_j = 2j - (m - (n-1)/2)`, sign `(-1)^m`.
pub fn odd_operator(m: u32, n: u32, p: u32) -> Result<DiffOp> {
    require_odd(n)?;
    let k = m as i64 - (n as i64 - 1) / 2;
    let p = p as i64;
    let mut roots = vec![];
    for j in 0..m as i64 {
        let c = 2 * j - k;
        roots.push(qi(c + p));
        roots.push(qi(-c - 1 - p));
    }
    Ok(DiffOp::new(if m % 2 == 0 { 1 } else { -1 }, roots))
}

/// Coefficients (lowest order first) of `(-1)^m ∏_j ((∂ + A_j)(∂ + B_j) - p(p+n-2))`
/// with `A_j = m - n/2 + 1/2 - 2j`, `B_j = m + n/2 - 3/2 - 2j`.
pub fn odd_operator_coefficients(m: u32, n: u32, p: u32) -> Result<Vec<Q>> {
    require_odd(n)?;
    let (mi, ni, pi) = (m as i64, n as i64, p as i64);
    let lam = pi * (pi + ni - 2);
    let mut acc = Poly::constant(qi(if m % 2 == 0 { 1 } else { -1 }));
    for j in 0..mi {
        let a = mi - (ni - 1) / 2 - 2 * j;
        let b = mi + (ni - 3) / 2 - 2 * j;
        let quad = Poly::new(vec![qi(a * b - lam), qi(a + b), qi(1)]);
        acc = &acc * &quad;
    }
    Ok((0..=2 * m as usize).map(|k| acc.coeff(k)).collect())
}

/// Coefficients of `∏_j (-∂² + B_j(q)²)` expanded directly from the squared form.
pub fn even_operator_coefficients(m: u32, n: u32, q: u32) -> Result<Vec<Q>> {
    require_even(m, n)?;
    let mut acc = Poly::constant(qi(1));
    for j in 0..m {
        let b = b_j(m, n, j, q);
        acc = &acc * &Poly::new(vec![qi(b * b), qi(0), qi(-1)]);
    }
    Ok((0..=2 * m as usize).map(|k| acc.coeff(k)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;
    use num::Zero;

    fn p(v: &[i64]) -> Poly {
        Poly::new(v.iter().map(|&x| qi(x)).collect())
    }

    #[test]
    fn small_symbols() {
        let s = symbol_product(SymbolParams::new(1, 3, 0)).unwrap();
        assert_eq!(s.re, p(&[0, 0, 1]));
        assert_eq!(s.im, p(&[0, 1]));
        let s = symbol_product(SymbolParams::new(1, 3, 1)).unwrap();
        assert_eq!(s.re, p(&[2, 0, 1]));
        assert!(s.im.eval(&Q::zero()).is_zero());
        assert!(symbol_product(SymbolParams::new(2, 4, 0)).is_err());
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(a_recurrence(1, 1).unwrap(), p(&[2, 0, 1]));
        assert_eq!(a_recurrence(1, 0).unwrap(), p(&[0, 0, 1]));
        assert_eq!(a_recurrence(2, 2).unwrap().eval(&Q::zero()), qi(24));
        assert_eq!(b_recurrence(1, 0).unwrap(), p(&[0, 1]));
        assert_eq!(b_recurrence(1, 1).unwrap(), p(&[0, 1]));
        for m in 1..=4 {
            for q in 0..6 {
                assert!(b_recurrence(m, q).unwrap().eval(&Q::zero()).is_zero());
            }
        }
    }

    #[test]
    fn shifted_identity() {
        assert!(check_real_part(3, 5, 4).unwrap());
        assert!(identity_mismatches(3, 5, 4).unwrap().is_empty());
    }

    #[test]
    fn a_m_at_zero() {
        assert_eq!(a_m_at_zero_closed_form(1), qi(2));
        assert_eq!(a_m_at_zero_closed_form(2), qi(24));
        for m in 1..=5 {
            let n = 2 * (m - 1) + 3;
            // p = m corresponds to q = m - n/2 + 3/2
            let q = m + 1 - (n - 1) / 2;
            let s = symbol_product(SymbolParams::new(m, n, q)).unwrap();
            assert_eq!(s.re.eval(&Q::zero()), a_m_at_zero_closed_form(m));
            // one step lower the γ² factor makes the value vanish
            let s = symbol_product(SymbolParams::new(m, n, q - 1)).unwrap();
            assert!(s.re.eval(&Q::zero()).is_zero());
        }
    }

    #[test]
    fn even_symbol_roots_and_sign() {
        let d = even_symbol(SymbolParams::new(2, 4, 0)).unwrap();
        assert_eq!(d.roots(), &[qi(-2), qi(0), qi(0), qi(2)]);
        let d = even_symbol(SymbolParams::new(2, 4, 1)).unwrap();
        assert_eq!(d.roots(), &[qi(-3), qi(-1), qi(1), qi(3)]);
        // (-d² + 9)(-d² + 1) = d⁴ - 10 d² + 9
        assert_eq!(d.coefficients(), vec![qi(9), qi(0), qi(-10), qi(0), qi(1)]);
        let d = even_symbol(SymbolParams::new(1, 2, 2)).unwrap();
        // -d² + 4
        assert_eq!(d.coefficients(), vec![qi(4), qi(0), qi(-1)]);
    }

    #[test]
    fn odd_operator_forms_agree() {
        for m in 1..=5u32 {
            for n in (3..=2 * m + 1).step_by(2) {
                let k = m - (n - 1) / 2;
                for p in 0..=k + 2 {
                    let d = odd_operator(m, n, p).unwrap();
                    assert_eq!(d.coefficients(), odd_operator_coefficients(m, n, p).unwrap());
                }
            }
        }
        for m in 1..=5u32 {
            for n in (2..=2 * m).step_by(2) {
                for q in 0..4 {
                    let d = even_symbol(SymbolParams::new(m, n, q)).unwrap();
                    assert_eq!(d.coefficients(), even_operator_coefficients(m, n, q).unwrap());
                }
            }
        }
    }

    #[test]
    fn even_zero_symbol_values() {
        assert_eq!(even_zero_symbol(SymbolParams::new(2, 4, 0)).unwrap(), qi(0));
        assert_eq!(even_zero_symbol(SymbolParams::new(2, 4, 1)).unwrap(), qi(9));
        assert_eq!(even_zero_symbol_from_roots(2, 4, 1), qi(9));
        assert_eq!(even_zero_symbol(SymbolParams::new(3, 2, 0)).unwrap(), qi(0));
        for m in 1..=5u32 {
            for n in (2..=2 * m).step_by(2) {
                for q in 0..=4 * m {
                    assert_eq!(
                        even_zero_symbol(SymbolParams::new(m, n, q)).unwrap(),
                        even_zero_symbol_from_roots(m, n, q),
                        "m={m} n={n} q={q}"
                    );
                }
            }
        }
    }

    #[test]
    fn sweep_small() {
        let r = sweep_odd_lower_bound(1, 3, 6, Grid { window: 10.0, step: 0.25 }).unwrap();
        assert!(r.certified);
        assert_eq!(r.monotone, Some(true));
        let r = sweep_even_lower_bound(2, 4, 40).unwrap();
        assert!(r.certified);
        assert!(r.exceptions.iter().any(|e| e.q == 0 && e.j == Some(1)));
        assert_eq!(even_exception_set(2, 4), vec![(0, 1)]);
    }

    #[test]
    fn sweep_even_lower_bound_first_ratio() {
        // B_0(1)² / (1·3) for m=2, n=4
        let b = b_j(2, 4, 0, 1);
        assert_eq!(qr(b * b, 3), qi(3));
    }

    #[test]
    fn report_json_has_contract_keys() {
        let r = sweep_even_lower_bound(2, 4, 10).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for k in ["m", "n", "q_max", "grid", "min_ratio", "certified", "exceptions"] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
        assert!(v["grid"].get("window").is_some() && v["grid"].get("step").is_some());
    }
}
