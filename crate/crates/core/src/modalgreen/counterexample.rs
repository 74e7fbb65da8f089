//! Exact derivatives of `∂_{x_1}^{λ-1} |x|^{2m-n}`: order `λ` stays bounded
//! but depends on the ray, order `λ+1` blows up like `1/r`.

use crate::error::{Error, Result};
use crate::rational::{qi, qr, Q};
use num::{Signed, Zero};
use serde::Serialize;
use std::collections::BTreeMap;

type Mono = Vec<u32>;

/// Polynomial in `x_1..x_n` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MPoly {
    pub terms: BTreeMap<Mono, Q>,
}

impl MPoly {
    pub fn constant(n: usize, c: Q) -> Self {
        let mut p = MPoly::default();
        if !c.is_zero() {
            p.terms.insert(vec![0; n], c);
        }
        p
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&mut self, other: &MPoly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scale(&self, c: &Q) -> MPoly {
        let mut p = MPoly::default();
        for (m, v) in &self.terms {
            p.add_term(m.clone(), v * c);
        }
        p
    }

    pub fn mul(&self, other: &MPoly) -> MPoly {
        let mut p = MPoly::default();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                p.add_term(a.iter().zip(b).map(|(i, j)| i + j).collect(), x * y);
            }
        }
        p
    }

    pub fn deriv(&self, i: usize) -> MPoly {
        let mut p = MPoly::default();
        for (m, c) in &self.terms {
            if m[i] > 0 {
                let mut d = m.clone();
                d[i] -= 1;
                p.add_term(d, c * qi(m[i] as i64));
            }
        }
        p
    }

    /// Multiplies by `x_i`.
    pub fn shift(&self, i: usize) -> MPoly {
        let mut p = MPoly::default();
        for (m, c) in &self.terms {
            let mut d = m.clone();
            d[i] += 1;
            p.add_term(d, c.clone());
        }
        p
    }

    /// Common total degree, `None` if zero or inhomogeneous.
    pub fn degree(&self) -> Option<u32> {
        let mut it = self.terms.keys().map(|m| m.iter().sum::<u32>());
        let d = it.next()?;
        it.all(|e| e == d).then_some(d)
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut s = Q::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (xi, &e) in x.iter().zip(m) {
                for _ in 0..e {
                    v *= xi;
                }
            }
            s += v;
        }
        s
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// `Σ_k P_k(x) r^k` with `r = |x|`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RadialExpr {
    pub n: usize,
    pub parts: BTreeMap<i64, MPoly>,
}

impl RadialExpr {
    pub fn r_power(n: usize, k: i64) -> Self {
        let mut parts = BTreeMap::new();
        parts.insert(k, MPoly::constant(n, qi(1)));
        RadialExpr { n, parts }
    }

    fn add_part(&mut self, k: i64, p: MPoly) {
        let e = self.parts.entry(k).or_default();
        e.add(&p);
        if e.is_zero() {
            self.parts.remove(&k);
        }
    }

    /// `∂_i (P r^k) = (∂_i P) r^k + k x_i P r^{k-2}`.
    pub fn deriv(&self, i: usize) -> Self {
        let mut out = RadialExpr { n: self.n, parts: BTreeMap::new() };
        for (&k, p) in &self.parts {
            out.add_part(k, p.deriv(i));
            if k != 0 {
                out.add_part(k - 2, p.shift(i).scale(&qi(k)));
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = RadialExpr { n: self.n, parts: BTreeMap::new() };
        for i in 0..self.n {
            for (k, p) in self.deriv(i).deriv(i).parts {
                out.add_part(k, p);
            }
        }
        out
    }

    /// Rewrites over the lowest power of `r` (`r^2 = Σ x_i^2`), giving a
    /// canonical form in which zero is detected exactly.
    pub fn normalize(&self) -> Self {
        let Some(&low) = self.parts.keys().next() else {
            return self.clone();
        };
        let base = low;
        let mut r2 = MPoly::default();
        for i in 0..self.n {
            let mut m = vec![0; self.n];
            m[i] = 2;
            r2.add_term(m, qi(1));
        }
        let mut out = RadialExpr { n: self.n, parts: BTreeMap::new() };
        for (&k, p) in &self.parts {
            let mut q = p.clone();
            for _ in 0..(k - base) / 2 {
                q = q.mul(&r2);
            }
            out.add_part(base, q);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.normalize().parts.is_empty()
    }

    /// Homogeneity degree, `None` if inhomogeneous or zero.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.parts.iter().map(|(k, p)| p.degree().map(|d| d as i64 + k));
        let d = it.next()??;
        for e in it {
            if e? != d {
                return None;
            }
        }
        Some(d)
    }

    /// Value at a point whose norm `r` is rational.
    pub fn eval(&self, x: &[Q], r: &Q) -> Q {
        let mut s = Q::zero();
        for (&k, p) in &self.parts {
            let rk = if k >= 0 { num::pow(r.clone(), k as usize) } else { num::pow(r.recip(), (-k) as usize) };
            s += p.eval(x) * rk;
        }
        s
    }

    /// Value on the unit ray `(e_1 + e_2)/√2` as `(a, b)` meaning `a + b√2`.
    pub fn eval_diagonal(&self) -> (Q, Q) {
        let (mut a, mut b) = (Q::zero(), Q::zero());
        for p in self.parts.values() {
            for (m, c) in &p.terms {
                if m.iter().skip(2).any(|&e| e > 0) {
                    continue;
                }
                // monomial of degree d at (1,1,0..) is 1; the ray is its 2^{-1/2} multiple
                let d = m.iter().sum::<u32>();
                if d % 2 == 0 {
                    a += c * qr(1, 1 << (d / 2));
                } else {
                    b += c * qr(1, 1 << ((d + 1) / 2));
                }
            }
        }
        (a, b)
    }
}

/// All multi-indices `∂^α` with `|α| = k`, listed as nondecreasing variable indices.
fn multi_indices(n: usize, k: u32) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: u32, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k - 1, i, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    rec(n, k, 0, &mut vec![], &mut out);
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeCheck {
    /// Variable indices, 1-based.
    pub index: Vec<usize>,
    pub degree: Option<i64>,
    pub homogeneous_on_samples: bool,
    /// Value on `e_1`.
    pub on_axis: String,
    /// Value on `(e_1 + e_2)/√2` written `a + b√2`.
    pub on_diagonal: String,
    /// Value on `(3/5, 4/5, 0, ...)`.
    pub on_pythagorean: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub m: u32,
    pub n: u32,
    pub lambda: u32,
    pub seed_degree: i64,
    pub polyharmonic: bool,
    pub sample_radii: Vec<String>,
    pub order_lambda: Vec<DerivativeCheck>,
    pub order_lambda_plus_one: Vec<DerivativeCheck>,
    /// Some order-λ derivative takes different values on two rays.
    pub ray_dependent: bool,
    /// Every order-λ derivative has degree 0, every order-λ+1 one degree -1.
    pub degrees_ok: bool,
    /// Some order-λ+1 derivative is nonzero.
    pub unbounded: bool,
    pub pass: bool,
}

fn fmt_sqrt2(v: &(Q, Q)) -> String {
    if v.1.is_zero() {
        v.0.to_string()
    } else {
        format!("{} + {}√2", v.0, v.1)
    }
}

fn check(e: &RadialExpr, index: &[usize], radii: &[Q]) -> DerivativeCheck {
    let n = e.n;
    let degree = e.degree();
    let unit_axis: Vec<Q> = (0..n).map(|i| if i == 0 { qi(1) } else { Q::zero() }).collect();
    let unit_py: Vec<Q> = (0..n).map(|i| match i { 0 => qr(3, 5), 1 => qr(4, 5), _ => Q::zero() }).collect();
    let base_axis = e.eval(&unit_axis, &qi(1));
    let base_py = e.eval(&unit_py, &qi(1));
    let homogeneous_on_samples = degree.is_some_and(|d| {
        radii.iter().all(|s| {
            let sd = if d >= 0 { num::pow(s.clone(), d as usize) } else { num::pow(s.recip(), (-d) as usize) };
            let ax: Vec<Q> = unit_axis.iter().map(|c| c * s).collect();
            let py: Vec<Q> = unit_py.iter().map(|c| c * s).collect();
            e.eval(&ax, s) == &base_axis * &sd && e.eval(&py, s) == &base_py * &sd
        })
    });
    DerivativeCheck {
        index: index.iter().map(|i| i + 1).collect(),
        degree,
        homogeneous_on_samples,
        on_axis: base_axis.to_string(),
        on_diagonal: fmt_sqrt2(&e.eval_diagonal()),
        on_pythagorean: base_py.to_string(),
    }
}

/// Default sample radii, all inside the ball of radius 1/4.
pub fn default_radii() -> Vec<Q> {
    vec![qr(1, 5), qr(1, 10), qr(1, 100), qr(3, 1000)]
}

pub fn counterexample(m: u32, n: u32, radii: &[Q]) -> Result<CounterexampleReport> {
    if n % 2 == 0 {
        return Err(Error::Parity(format!("n = {n} must be odd")));
    }
    if n < 3 || n > 2 * m + 1 {
        return Err(Error::Range(format!("need 3 <= n <= 2m+1, got m = {m}, n = {n}")));
    }
    let lam = (2 * m + 1 - n) / 2;
    if lam == 0 {
        return Err(Error::Range(format!("critical order is 0 for m = {m}, n = {n}")));
    }
    if radii.iter().any(|r| !r.is_positive() || *r >= qr(1, 4)) {
        return Err(Error::Range("sample radii must lie in (0, 1/4)".into()));
    }
    let nu = n as usize;
    let seed = RadialExpr::r_power(nu, 2 * m as i64 - n as i64);
    let mut lap = seed.clone();
    for _ in 0..m {
        lap = lap.laplacian();
    }
    let polyharmonic = lap.is_zero();
    let mut u = seed;
    for _ in 1..lam {
        u = u.deriv(0);
    }
    let seed_degree = u.degree().unwrap_or(i64::MIN);
    let mut order_lambda = vec![];
    let mut ray_dependent = false;
    for idx in multi_indices(nu.min(3), lam) {
        let e = idx.iter().fold(u.clone(), |acc, &i| acc.deriv(i));
        let c = check(&e, &idx, radii);
        let diag = e.eval_diagonal();
        if c.on_axis != c.on_pythagorean || !diag.1.is_zero() || diag.0.to_string() != c.on_axis {
            ray_dependent = true;
        }
        order_lambda.push(c);
    }
    let mut order_next = vec![];
    let mut unbounded = false;
    for idx in multi_indices(nu.min(3), lam + 1) {
        let e = idx.iter().fold(u.clone(), |acc, &i| acc.deriv(i));
        if !e.is_zero() {
            unbounded = true;
        }
        order_next.push(check(&e, &idx, radii));
    }
    let degrees_ok = order_lambda.iter().all(|c| c.degree.is_none_or(|d| d == 0) && (c.degree.is_some() || c.on_axis == "0"))
        && order_next.iter().all(|c| c.degree.is_none_or(|d| d == -1))
        && order_lambda.iter().chain(&order_next).all(|c| c.degree.is_none() || c.homogeneous_on_samples);
    let pass = polyharmonic && ray_dependent && degrees_ok && unbounded;
    Ok(CounterexampleReport {
        m,
        n,
        lambda: lam,
        seed_degree,
        polyharmonic,
        sample_radii: radii.iter().map(|r| r.to_string()).collect(),
        order_lambda,
        order_lambda_plus_one: order_next,
        ray_dependent,
        degrees_ok,
        unbounded,
        pass,
    })
}
