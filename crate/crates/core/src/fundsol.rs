//! Fundamental solutions of the one-dimensional operators and the weight
//! functions built from them.

use crate::error::{Error, Result};
use crate::exppoly::{DecayClass, DiffOp, ExpTerm, PiecewiseExpPoly, Side};
use crate::linalg::solve_exact;
use crate::logradial::radial_derivative;
use crate::rational::{qi, to_f64, Q};
use crate::rootsets::even_base_p;
use crate::symbols::{even_symbol, odd_operator, SymbolParams};
use num::{Signed, Zero};
use serde::Serialize;

/// Basis function `t^power e^{root t}` on one side of the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisFn {
    pub side: Side,
    pub root: Q,
    pub power: u32,
}

/// Jump conditions at the origin for the bounded fundamental solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpSystem {
    pub basis: Vec<BasisFn>,
    pub matrix: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
}

impl JumpSystem {
    /// Negative roots live on `t > 0`, nonnegative roots on `t < 0`; row k is
    /// the jump of `∂^k`, which must vanish except for the last one.
    pub fn for_operator(op: &DiffOp) -> Self {
        let mut basis = vec![];
        let mut seen: Vec<&Q> = vec![];
        for r in op.roots() {
            if seen.contains(&r) {
                continue;
            }
            seen.push(r);
            let side = if r.is_negative() { Side::Pos } else { Side::Neg };
            for power in 0..op.multiplicity(r) as u32 {
                basis.push(BasisFn { side, root: r.clone(), power });
            }
        }
        let n = op.order();
        let matrix = (0..n as u32)
            .map(|k| {
                basis
                    .iter()
                    .map(|b| {
                        let v = ExpTerm::new(qi(1), b.root.clone(), b.power).derivative_at_zero(k);
                        if b.side == Side::Pos {
                            v
                        } else {
                            -v
                        }
                    })
                    .collect()
            })
            .collect();
        let mut rhs = vec![Q::zero(); n];
        rhs[n - 1] = qi(op.sign() as i64);
        JumpSystem { basis, matrix, rhs }
    }

    pub fn solve(&self) -> Result<PiecewiseExpPoly> {
        let x = solve_exact(self.matrix.clone(), self.rhs.clone()).ok_or(Error::SingularJumpSystem)?;
        let mut neg = vec![];
        let mut pos = vec![];
        for (b, c) in self.basis.iter().zip(x) {
            let t = ExpTerm::new(c, b.root.clone(), b.power);
            match b.side {
                Side::Neg => neg.push(t),
                Side::Pos => pos.push(t),
            }
        }
        Ok(PiecewiseExpPoly::new(neg, pos, vec![]))
    }
}

/// The fundamental solution of `op` that vanishes at `+∞` and grows at most
/// polynomially at `-∞`.
pub fn fundamental_solution(op: &DiffOp) -> Result<PiecewiseExpPoly> {
    JumpSystem::for_operator(op).solve()
}

/// Closed form for distinct roots: coefficient `(sign)/∏_{j≠i}(r_i - r_j)`,
/// negated on the `t < 0` side.
pub fn fundamental_solution_distinct(op: &DiffOp) -> Result<PiecewiseExpPoly> {
    let roots = op.roots();
    for w in roots.windows(2) {
        if w[0] == w[1] {
            return Err(Error::RepeatedRoot(w[0].to_string()));
        }
    }
    let mut neg = vec![];
    let mut pos = vec![];
    for (i, ri) in roots.iter().enumerate() {
        let mut d = qi(op.sign() as i64);
        for (j, rj) in roots.iter().enumerate() {
            if i != j {
                d *= ri - rj;
            }
        }
        let c = qi(1) / d;
        if ri.is_negative() {
            pos.push(ExpTerm::new(c, ri.clone(), 0));
        } else {
            neg.push(ExpTerm::new(-c, ri.clone(), 0));
        }
    }
    Ok(PiecewiseExpPoly::new(neg, pos, vec![]))
}

/// Operator whose fundamental solution is `h_odd`.
pub fn odd_base_operator(m: u32, n: u32) -> Result<DiffOp> {
    odd_operator(m, n, 0)
}

/// Operator whose fundamental solution is `h_even`: the `p = 0` or `p = 1` symbol by parity.
pub fn even_base_operator(m: u32, n: u32) -> Result<DiffOp> {
    even_symbol(SymbolParams::new(m, n, even_base_p(m, n)))
}

pub fn h_odd(m: u32, n: u32) -> Result<PiecewiseExpPoly> {
    let op = odd_base_operator(m, n)?;
    if op.roots().windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::RepeatedRoot(format!("odd-dimensional operator m={m}, n={n}")));
    }
    fundamental_solution(&op)
}

pub fn h_even(m: u32, n: u32) -> Result<PiecewiseExpPoly> {
    fundamental_solution(&even_base_operator(m, n)?)
}

/// `op h - δ`; zero means `h` is a fundamental solution of `op`.
pub fn verify_fundamental(h: &PiecewiseExpPoly, op: &DiffOp) -> PiecewiseExpPoly {
    op.apply(h).sub(&PiecewiseExpPoly::delta())
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalReport {
    pub m: u32,
    pub n: u32,
    pub operator: String,
    pub h: serde_json::Value,
    pub residual: serde_json::Value,
    pub residual_zero: bool,
    pub decay_class: DecayClass,
    /// Coefficient of `t` on `t < 0` (even dimensions).
    pub linear_coefficient: Option<String>,
    /// Whether the closed-form distinct-root formula agrees (odd dimensions).
    pub closed_form_agrees: Option<bool>,
}

pub fn build_report(m: u32, n: u32) -> Result<FundamentalReport> {
    let (op, h, closed) = if n % 2 == 1 {
        let op = odd_base_operator(m, n)?;
        let h = h_odd(m, n)?;
        let c = fundamental_solution_distinct(&op)? == h;
        (op, h, Some(c))
    } else {
        (even_base_operator(m, n)?, h_even(m, n)?, None)
    };
    let residual = verify_fundamental(&h, &op);
    let linear = (n % 2 == 0).then(|| {
        h.neg_terms()
            .iter()
            .find(|t| t.exponent.is_zero() && t.power == 1)
            .map(|t| t.coeff.to_string())
            .unwrap_or_else(|| "0".into())
    });
    Ok(FundamentalReport {
        m,
        n,
        operator: op.to_string(),
        h: h.to_json_value(),
        residual: residual.to_json_value(),
        residual_zero: residual.is_zero(),
        decay_class: h.decay_class(),
        linear_coefficient: linear,
        closed_form_agrees: closed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    /// The `|x|^{-1}` weight, which becomes 1 after the odd substitution.
    OddPower,
    OddG,
    EvenPsiConst,
    EvenPsiLog,
    EvenG,
}

/// A weight `w(t)` at fixed `τ`, in the variable used by the energy integrals.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub h: Option<PiecewiseExpPoly>,
    pub c1: f64,
    pub c2: f64,
    pub c_prime: f64,
    pub c_second: f64,
    pub mu4: f64,
    pub c_r: f64,
    pub tau: f64,
    derivs: Vec<PiecewiseExpPoly>,
}

impl WeightSpec {
    fn with_h(kind: WeightKind, h: Option<PiecewiseExpPoly>, order: usize) -> Self {
        let derivs = match &h {
            Some(h) => {
                let mut v = vec![h.clone()];
                for _ in 0..order {
                    let d = v.last().unwrap().differentiate().without_atoms();
                    v.push(d);
                }
                v
            }
            None => vec![],
        };
        WeightSpec {
            kind,
            h,
            c1: 1.0,
            c2: 1.0,
            c_prime: 1.0,
            c_second: 1.0,
            mu4: 0.0,
            c_r: 0.0,
            tau: 0.0,
            derivs,
        }
    }

    pub fn constant() -> Self {
        Self::with_h(WeightKind::OddPower, None, 0)
    }

    pub fn psi_const() -> Self {
        Self::with_h(WeightKind::EvenPsiConst, None, 0)
    }

    /// `ψ(t) = C_R + t` with `C_R = log 4R`.
    pub fn psi_log(r: f64) -> Self {
        let mut w = Self::with_h(WeightKind::EvenPsiLog, None, 0);
        w.c_r = (4.0 * r).ln();
        w
    }

    pub fn with_constants(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_even_constants(mut self, c_prime: f64, c_second: f64) -> Self {
        self.c_prime = c_prime;
        self.c_second = c_second;
        self
    }

    /// `∂^k h(t - τ)`, zero past the stored derivatives.
    fn h_deriv(&self, k: usize, t: f64) -> f64 {
        match self.derivs.get(k) {
            Some(d) => d.eval(t - self.tau),
            None => 0.0,
        }
    }

    /// Value of the energy weight (the factor multiplying `L v · v`).
    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    /// `∂_t^k` of the energy weight.
    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        let kron = |a: usize| if k == a { 1.0 } else { 0.0 };
        match self.kind {
            WeightKind::OddPower | WeightKind::EvenPsiConst => kron(0),
            WeightKind::EvenPsiLog => kron(0) * (self.c_r + t) + kron(1),
            WeightKind::OddG => self.c1 * self.h_deriv(k, t) + self.c2 * kron(0),
            WeightKind::EvenG => {
                self.h_deriv(k, t)
                    + kron(0) * (self.mu4 * (self.c_r + self.tau) + self.c_prime + self.c_second * (self.c_r + t))
                    + kron(1) * self.c_second
            }
        }
    }

    /// The x-space weight `g(t)`; for the odd trace weight this restores the `e^t` factor.
    pub fn x_space(&self, k: usize, t: f64) -> f64 {
        match self.kind {
            WeightKind::OddG => {
                // ∂^k (e^t w) = e^t Σ C(k,i) ∂^i w
                let mut s = 0.0;
                let mut binom = 1.0;
                for i in 0..=k {
                    s += binom * self.derivative(i, t);
                    binom = binom * (k - i) as f64 / (i + 1) as f64;
                }
                t.exp() * s
            }
            _ => self.derivative(k, t),
        }
    }

    /// `sup |x|^{k+s} |∂_r^k g|` over the t-samples, where `s = 1` for the odd
    /// trace weight and `0` otherwise.
    pub fn scaled_radial_sup(&self, k: usize, ts: &[f64]) -> f64 {
        let shift = if self.kind == WeightKind::OddG { 1.0 } else { 0.0 };
        ts.iter()
            .map(|&t| {
                let d: Vec<f64> = (0..=k).map(|j| self.x_space(j, t)).collect();
                let r = (-t).exp();
                r.powf(k as f64 + shift) * radial_derivative(k, t, &d).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Trace weight `C1 h(t-τ) + C2` (the `e^t` factor of the x-space weight is absorbed
/// by the odd substitution).
pub fn weight_odd(m: u32, n: u32, tau: f64) -> Result<WeightSpec> {
    let h = h_odd(m, n)?;
    let mut w = WeightSpec::with_h(WeightKind::OddG, Some(h), 2 * m as usize + 1);
    w.tau = tau;
    Ok(w)
}

/// Trace weight `h(t-τ) + μ4 (C_R + τ) + C' + C'' (C_R + t)`, `C_R = log 4R`.
pub fn weight_even(m: u32, n: u32, tau: f64, r: f64) -> Result<WeightSpec> {
    if r <= 0.0 {
        return Err(Error::Range(format!("support radius R = {r} must be positive")));
    }
    let h = h_even(m, n)?;
    let mu4 = h
        .neg_terms()
        .iter()
        .find(|t| t.exponent.is_zero() && t.power == 1)
        .map(|t| to_f64(&t.coeff))
        .unwrap_or(0.0);
    let mut w = WeightSpec::with_h(WeightKind::EvenG, Some(h), 2 * m as usize + 1);
    w.tau = tau;
    w.mu4 = mu4;
    w.c_r = (4.0 * r).ln();
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    #[test]
    fn odd_base_case() {
        let h = h_odd(1, 3).unwrap();
        let want = PiecewiseExpPoly::term(Side::Neg, qi(1), qi(0), 0)
            .add(&PiecewiseExpPoly::term(Side::Pos, qi(1), qi(-1), 0));
        assert_eq!(h, want);
        assert!(verify_fundamental(&h, &odd_base_operator(1, 3).unwrap()).is_zero());
        assert_eq!(h.decay_class(), DecayClass::ExpDecayPlusBoundedMinus);
    }

    #[test]
    fn biharmonic_three_dimensions() {
        let op = odd_base_operator(2, 3).unwrap();
        assert_eq!(op.roots(), &[qi(-2), qi(-1), qi(0), qi(1)]);
        let h = h_odd(2, 3).unwrap();
        assert_eq!(h, fundamental_solution_distinct(&op).unwrap());
        assert!(verify_fundamental(&h, &op).is_zero());
    }

    #[test]
    fn even_base_case() {
        let h = h_even(2, 4).unwrap();
        let want = PiecewiseExpPoly::term(Side::Pos, qr(-1, 16), qi(-2), 0)
            .add(&PiecewiseExpPoly::term(Side::Neg, qr(-1, 16), qi(2), 0))
            .add(&PiecewiseExpPoly::term(Side::Neg, qr(1, 4), qi(0), 1));
        assert_eq!(h, want);
        assert_eq!(h.decay_class(), DecayClass::LinearGrowthMinus);
        for k in 0..3 {
            assert!(h.jump(k).is_zero());
        }
        assert_eq!(h.jump(3), qi(1));
    }

    #[test]
    fn shifted_even_case() {
        let op = even_base_operator(3, 4).unwrap();
        assert_eq!(op.roots(), &[qi(-4), qi(-2), qi(0), qi(0), qi(2), qi(4)]);
        let h = h_even(3, 4).unwrap();
        assert!(verify_fundamental(&h, &op).is_zero());
        assert_eq!(h.jump(5), qi(-1));
    }

    #[test]
    fn perturbed_solution_has_residual() {
        let h = h_odd(2, 3).unwrap();
        let bad = h.add(&PiecewiseExpPoly::term(Side::Pos, qi(1), qi(-1), 0));
        assert!(!verify_fundamental(&bad, &odd_base_operator(2, 3).unwrap()).is_zero());
    }

    #[test]
    fn odd_weight_value() {
        let w = weight_odd(1, 3, 0.0).unwrap();
        let g = w.x_space(0, 1.0);
        assert!((g - (1.0 + std::f64::consts::E)).abs() < 1e-12);
    }

    #[test]
    fn psi_weights() {
        assert_eq!(WeightSpec::psi_const().eval(3.0), 1.0);
        let w = WeightSpec::psi_log(0.25);
        assert!((w.eval(2.0) - 2.0).abs() < 1e-15);
        assert_eq!(w.derivative(1, 2.0), 1.0);
    }

    #[test]
    fn radial_bounds_do_not_grow() {
        let w = weight_odd(2, 3, 0.5).unwrap();
        let near: Vec<f64> = (0..=400).map(|i| -5.0 + i as f64 * 0.025).filter(|t| (t - 0.5f64).abs() > 1e-9).collect();
        let far: Vec<f64> = (0..=2400).map(|i| -30.0 + i as f64 * 0.025).filter(|t| (t - 0.5f64).abs() > 1e-9).collect();
        for k in 0..=4 {
            let a = w.scaled_radial_sup(k, &near);
            let b = w.scaled_radial_sup(k, &far);
            assert!(b <= a * 1.01 + 1e-12, "k={k}: {a} vs {b}");
        }
    }
}
