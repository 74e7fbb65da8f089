//! Piecewise exponential-polynomial distributions on the line.
//!
//! A value is a finite sum of `c t^k e^{a t}` terms on `t < 0`, another on
//! `t > 0`, and Dirac atoms `w δ^{(k)}` at the origin. All coefficients and
//! exponents are exact rationals.

use crate::error::{Error, Result};
use crate::rational::{binomial, factorial, parse_q, pow, qi, to_f64, Q};
use num::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExpTerm {
    pub coeff: Q,
    pub exponent: Q,
    pub power: u32,
}

impl ExpTerm {
    pub fn new(coeff: Q, exponent: Q, power: u32) -> Self {
        ExpTerm {
            coeff,
            exponent,
            power,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let e = to_f64(&self.exponent);
        to_f64(&self.coeff) * t.powi(self.power as i32) * (e * t).exp()
    }

    /// `∂^k` of this term at `t = 0`.
    pub fn derivative_at_zero(&self, k: u32) -> Q {
        let j = self.power;
        if k < j {
            return Q::zero();
        }
        &self.coeff * binomial(k, j) * factorial(j) * pow(&self.exponent, k - j)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeltaAtom {
    pub order: u32,
    pub weight: Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Neg,
    Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PiecewiseExpPoly {
    neg: Vec<ExpTerm>,
    pos: Vec<ExpTerm>,
    atoms: Vec<DeltaAtom>,
}

type TermMap = BTreeMap<(Q, u32), Q>;

fn collect(map: TermMap) -> Vec<ExpTerm> {
    map.into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|((e, k), c)| ExpTerm::new(c, e, k))
        .collect()
}

fn push(map: &mut TermMap, coeff: Q, exponent: Q, power: u32) {
    if coeff.is_zero() {
        return;
    }
    *map.entry((exponent, power)).or_insert_with(Q::zero) += coeff;
}

/// Accumulator used while building results term by term.
#[derive(Default)]
struct Builder {
    neg: TermMap,
    pos: TermMap,
    atoms: BTreeMap<u32, Q>,
}

impl Builder {
    fn term(&mut self, side: Side, coeff: Q, exponent: Q, power: u32) {
        match side {
            Side::Neg => push(&mut self.neg, coeff, exponent, power),
            Side::Pos => push(&mut self.pos, coeff, exponent, power),
        }
    }

    fn atom(&mut self, order: u32, weight: Q) {
        if !weight.is_zero() {
            *self.atoms.entry(order).or_insert_with(Q::zero) += weight;
        }
    }

    fn absorb(&mut self, f: &PiecewiseExpPoly, scale: &Q) {
        for t in &f.neg {
            self.term(Side::Neg, &t.coeff * scale, t.exponent.clone(), t.power);
        }
        for t in &f.pos {
            self.term(Side::Pos, &t.coeff * scale, t.exponent.clone(), t.power);
        }
        for a in &f.atoms {
            self.atom(a.order, &a.weight * scale);
        }
    }

    fn finish(self) -> PiecewiseExpPoly {
        PiecewiseExpPoly {
            neg: collect(self.neg),
            pos: collect(self.pos),
            atoms: self
                .atoms
                .into_iter()
                .filter(|(_, w)| !w.is_zero())
                .map(|(order, weight)| DeltaAtom { order, weight })
                .collect(),
        }
    }
}

impl PiecewiseExpPoly {
    pub fn new(neg: Vec<ExpTerm>, pos: Vec<ExpTerm>, atoms: Vec<DeltaAtom>) -> Self {
        let mut b = Builder::default();
        for t in neg {
            b.term(Side::Neg, t.coeff, t.exponent, t.power);
        }
        for t in pos {
            b.term(Side::Pos, t.coeff, t.exponent, t.power);
        }
        for a in atoms {
            b.atom(a.order, a.weight);
        }
        b.finish()
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn delta() -> Self {
        Self::atom(0, qi(1))
    }

    pub fn atom(order: u32, weight: Q) -> Self {
        Self::new(vec![], vec![], vec![DeltaAtom { order, weight }])
    }

    /// A single term `c t^k e^{a t}` on one side.
    pub fn term(side: Side, coeff: Q, exponent: Q, power: u32) -> Self {
        let t = vec![ExpTerm::new(coeff, exponent, power)];
        match side {
            Side::Neg => Self::new(t, vec![], vec![]),
            Side::Pos => Self::new(vec![], t, vec![]),
        }
    }

    /// `c e^{a t}` on both sides.
    pub fn exp_both(coeff: Q, exponent: Q) -> Self {
        Self::new(
            vec![ExpTerm::new(coeff.clone(), exponent.clone(), 0)],
            vec![ExpTerm::new(coeff, exponent, 0)],
            vec![],
        )
    }

    pub fn neg_terms(&self) -> &[ExpTerm] {
        &self.neg
    }

    pub fn pos_terms(&self) -> &[ExpTerm] {
        &self.pos
    }

    pub fn terms(&self, side: Side) -> &[ExpTerm] {
        match side {
            Side::Neg => &self.neg,
            Side::Pos => &self.pos,
        }
    }

    pub fn atoms(&self) -> &[DeltaAtom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.neg.is_empty() && self.pos.is_empty() && self.atoms.is_empty()
    }

    pub fn without_atoms(&self) -> Self {
        PiecewiseExpPoly {
            neg: self.neg.clone(),
            pos: self.pos.clone(),
            atoms: vec![],
        }
    }

    pub fn atom_weight(&self, order: u32) -> Q {
        self.atoms
            .iter()
            .find(|a| a.order == order)
            .map(|a| a.weight.clone())
            .unwrap_or_else(Q::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut b = Builder::default();
        b.absorb(self, &qi(1));
        b.absorb(other, &qi(1));
        b.finish()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut b = Builder::default();
        b.absorb(self, &qi(1));
        b.absorb(other, &qi(-1));
        b.finish()
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut b = Builder::default();
        b.absorb(self, c);
        b.finish()
    }

    /// Pointwise value of the smooth part for `t != 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let side = if t < 0.0 { &self.neg } else { &self.pos };
        side.iter().map(|x| x.eval(t)).sum()
    }

    /// One-sided limit of `∂^k f` at the origin.
    pub fn derivative_limit(&self, side: Side, k: u32) -> Q {
        self.terms(side)
            .iter()
            .map(|t| t.derivative_at_zero(k))
            .fold(Q::zero(), |a, b| a + b)
    }

    pub fn limit_at_zero(&self, side: Side) -> Q {
        self.derivative_limit(side, 0)
    }

    /// `∂^k f(0+) - ∂^k f(0-)`.
    pub fn jump(&self, k: u32) -> Q {
        self.derivative_limit(Side::Pos, k) - self.derivative_limit(Side::Neg, k)
    }

    /// Distributional derivative.
    pub fn differentiate(&self) -> Self {
        let mut b = Builder::default();
        for (side, terms) in [(Side::Neg, &self.neg), (Side::Pos, &self.pos)] {
            for t in terms {
                if t.power > 0 {
                    b.term(
                        side,
                        &t.coeff * qi(t.power as i64),
                        t.exponent.clone(),
                        t.power - 1,
                    );
                }
                b.term(side, &t.coeff * &t.exponent, t.exponent.clone(), t.power);
            }
        }
        b.atom(0, self.jump(0));
        for a in &self.atoms {
            b.atom(a.order + 1, a.weight.clone());
        }
        b.finish()
    }

    pub fn differentiate_n(&self, k: u32) -> Self {
        (0..k).fold(self.clone(), |f, _| f.differentiate())
    }

    /// `(∂ - r) f`.
    pub fn apply_factor(&self, r: &Q) -> Self {
        self.differentiate().sub(&self.scale(r))
    }

    pub fn convolve(&self, g: &Self) -> Result<Self> {
        let mut b = Builder::default();
        for a in &self.atoms {
            b.absorb(&g.differentiate_n(a.order), &a.weight);
        }
        let f_smooth = self.without_atoms();
        for a in &g.atoms {
            b.absorb(&f_smooth.differentiate_n(a.order), &a.weight);
        }
        for (sf, tf) in [(Side::Neg, &self.neg), (Side::Pos, &self.pos)] {
            for (sg, tg) in [(Side::Neg, &g.neg), (Side::Pos, &g.pos)] {
                for x in tf {
                    for y in tg {
                        convolve_terms(&mut b, sf, x, sg, y)?;
                    }
                }
            }
        }
        Ok(b.finish())
    }

    pub fn decay_class(&self) -> DecayClass {
        let pos_decays = self.pos.iter().all(|t| t.exponent.is_negative());
        let neg_decays = self.neg.iter().all(|t| t.exponent.is_positive());
        let neg_nonneg = self.neg.iter().all(|t| !t.exponent.is_negative());
        let max_zero_power = self
            .neg
            .iter()
            .filter(|t| t.exponent.is_zero())
            .map(|t| t.power)
            .max();
        match (pos_decays, neg_decays, neg_nonneg, max_zero_power) {
            (true, true, _, _) => DecayClass::ExpDecayBoth,
            (true, false, true, Some(0)) => DecayClass::ExpDecayPlusBoundedMinus,
            (true, false, true, Some(1)) => DecayClass::LinearGrowthMinus,
            _ => DecayClass::Other,
        }
    }

    /// True when every piece is a sum of terms that are nonnegative on its side.
    pub fn single_signed_nonnegative(&self) -> bool {
        let pos_ok = self.pos.iter().all(|t| t.coeff.is_positive());
        let neg_ok = self.neg.iter().all(|t| {
            let s = if t.power % 2 == 0 {
                t.coeff.clone()
            } else {
                -t.coeff.clone()
            };
            s.is_positive()
        });
        pos_ok && neg_ok && self.atoms.iter().all(|a| !a.weight.is_negative())
    }

    pub fn lower_bound(&self, window: f64, step: f64) -> LowerBound {
        let n = (window / step).floor() as i64;
        let mut grid_min = to_f64(&self.limit_at_zero(Side::Neg)).min(to_f64(&self.limit_at_zero(Side::Pos)));
        let mut argmin = 0.0;
        for k in 1..=n {
            let t = k as f64 * step;
            for s in [t, -t] {
                let v = self.eval(s);
                if v < grid_min {
                    grid_min = v;
                    argmin = s;
                }
            }
        }
        let tail_pos = tail_sign(&self.pos, Side::Pos);
        let tail_neg = tail_sign(&self.neg, Side::Neg);
        LowerBound {
            grid_min,
            argmin,
            tail_pos,
            tail_neg,
            certified_positive: grid_min > 0.0 && tail_pos == 1 && tail_neg == 1,
        }
    }

    pub fn to_json_value(&self) -> Value {
        let terms = |v: &[ExpTerm]| -> Vec<Value> {
            v.iter()
                .map(|t| {
                    json!([
                        int_value(t.coeff.numer()),
                        int_value(t.coeff.denom()),
                        int_value(t.exponent.numer()),
                        int_value(t.exponent.denom()),
                        t.power
                    ])
                })
                .collect()
        };
        json!({
            "neg": terms(&self.neg),
            "pos": terms(&self.pos),
            "atoms": self.atoms.iter().map(|a| json!([a.order, int_value(a.weight.numer()), int_value(a.weight.denom())])).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("malformed exppoly JSON: {what}"));
        let side = |key: &str| -> Result<Vec<ExpTerm>> {
            let arr = v.get(key).and_then(Value::as_array).ok_or_else(|| bad(key))?;
            arr.iter()
                .map(|e| {
                    let e = e.as_array().filter(|e| e.len() == 5).ok_or_else(|| bad(key))?;
                    let coeff = ratio(&e[0], &e[1]).ok_or_else(|| bad("coefficient"))?;
                    let exponent = ratio(&e[2], &e[3]).ok_or_else(|| bad("exponent"))?;
                    let power = e[4].as_u64().ok_or_else(|| bad("power"))? as u32;
                    Ok(ExpTerm::new(coeff, exponent, power))
                })
                .collect()
        };
        let atoms = v
            .get("atoms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("atoms"))?
            .iter()
            .map(|e| {
                let e = e.as_array().filter(|e| e.len() == 3).ok_or_else(|| bad("atom"))?;
                let order = e[0].as_u64().ok_or_else(|| bad("order"))? as u32;
                let weight = ratio(&e[1], &e[2]).ok_or_else(|| bad("weight"))?;
                Ok(DeltaAtom { order, weight })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(side("neg")?, side("pos")?, atoms))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Invalid(e.to_string()))?;
        Self::from_json_value(&v)
    }
}

fn int_value(x: &num::BigInt) -> Value {
    match x.to_i64() {
        Some(i) => json!(i),
        None => json!(x.to_string()),
    }
}

fn ratio(n: &Value, d: &Value) -> Option<Q> {
    let s = |v: &Value| match v {
        Value::Number(x) => Some(x.to_string()),
        Value::String(x) => Some(x.clone()),
        _ => None,
    };
    parse_q(&format!("{}/{}", s(n)?, s(d)?))
}

/// Sign of the dominant term as `t -> ±∞` on the given side (0 when empty).
fn tail_sign(terms: &[ExpTerm], side: Side) -> i8 {
    let dominant = match side {
        Side::Pos => terms
            .iter()
            .max_by(|a, b| (&a.exponent, a.power).cmp(&(&b.exponent, b.power))),
        Side::Neg => terms.iter().max_by(|a, b| {
            (-&a.exponent, a.power).cmp(&(-&b.exponent, b.power))
        }),
    };
    match dominant {
        None => 0,
        Some(t) => {
            let mut s = if t.coeff.is_positive() { 1 } else { -1 };
            if side == Side::Neg && t.power % 2 == 1 {
                s = -s;
            }
            s
        }
    }
}

/// Antiderivative of `u^K e^{c u}` as a list of `(coeff, power)` pairs multiplying `e^{c u}`.
fn antiderivative(k: u32, c: &Q) -> Vec<(Q, u32)> {
    if c.is_zero() {
        return vec![(Q::one() / qi(k as i64 + 1), k + 1)];
    }
    (0..=k)
        .map(|j| {
            let sign = if (k - j) % 2 == 0 { qi(1) } else { qi(-1) };
            let v = sign * factorial(k) / (factorial(j) * pow(c, k - j + 1));
            (v, j)
        })
        .collect()
}

/// Value at 0 of the antiderivative above.
fn antiderivative_at_zero(k: u32, c: &Q) -> Q {
    if c.is_zero() {
        return Q::zero();
    }
    let sign = if k % 2 == 0 { qi(1) } else { qi(-1) };
    sign * factorial(k) / pow(c, k + 1)
}

fn convolve_terms(b: &mut Builder, sf: Side, x: &ExpTerm, sg: Side, y: &ExpTerm) -> Result<()> {
    let c = &x.exponent - &y.exponent;
    let diverge = || Error::DivergentConvolution {
        left: x.exponent.to_string(),
        right: y.exponent.to_string(),
    };
    match (sf, sg) {
        (Side::Pos, Side::Neg) if !c.is_negative() => return Err(diverge()),
        (Side::Neg, Side::Pos) if !c.is_positive() => return Err(diverge()),
        _ => {}
    }
    let l = y.power;
    let base = &x.coeff * &y.coeff;
    for i in 0..=l {
        // e^{βt} t^{l-i} (-1)^i C(l,i) ∫ u^{k+i} e^{cu} du
        let sign = if i % 2 == 0 { qi(1) } else { qi(-1) };
        let w = &base * sign * binomial(l, i);
        let kk = x.power + i;
        let tp = l - i;
        let f0 = antiderivative_at_zero(kk, &c);
        let ft = antiderivative(kk, &c);
        // F(t) contributes e^{(c+β)t} t^{j+tp}; F(0) contributes e^{βt} t^{tp}.
        let mut add_ft = |side: Side, s: Q| {
            for (v, j) in &ft {
                b.term(side, &w * &s * v, &c + &y.exponent, j + tp);
            }
        };
        match (sf, sg) {
            (Side::Pos, Side::Pos) => {
                add_ft(Side::Pos, qi(1));
                b.term(Side::Pos, -(&w * &f0), y.exponent.clone(), tp);
            }
            (Side::Neg, Side::Neg) => {
                add_ft(Side::Neg, qi(-1));
                b.term(Side::Neg, &w * &f0, y.exponent.clone(), tp);
            }
            (Side::Pos, Side::Neg) => {
                add_ft(Side::Pos, qi(-1));
                b.term(Side::Neg, -(&w * &f0), y.exponent.clone(), tp);
            }
            (Side::Neg, Side::Pos) => {
                add_ft(Side::Neg, qi(1));
                b.term(Side::Pos, &w * &f0, y.exponent.clone(), tp);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DecayClass {
    ExpDecayBoth,
    ExpDecayPlusBoundedMinus,
    LinearGrowthMinus,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LowerBound {
    pub grid_min: f64,
    pub argmin: f64,
    /// Sign of the dominant term at `+∞` (0 if the side is empty).
    pub tail_pos: i8,
    /// Sign of the dominant term at `-∞` (0 if the side is empty).
    pub tail_neg: i8,
    pub certified_positive: bool,
}

impl LowerBound {
    /// Nonnegativity up to `tol`, with no negative-dominant tail.
    pub fn nonnegative(&self, tol: f64) -> bool {
        self.grid_min >= -tol && self.tail_pos >= 0 && self.tail_neg >= 0
    }
}

pub const DEFAULT_WINDOW: f64 = 60.0;
pub const DEFAULT_STEP: f64 = 1.0 / 128.0;

/// A constant-coefficient operator `sign * ∏ (∂ - r)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiffOp {
    sign: i8,
    roots: Vec<Q>,
}

impl DiffOp {
    pub fn new(sign: i8, mut roots: Vec<Q>) -> Self {
        assert!(sign == 1 || sign == -1, "sign must be ±1");
        assert!(!roots.is_empty(), "operator order must be at least 1");
        roots.sort();
        DiffOp { sign, roots }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn roots(&self) -> &[Q] {
        &self.roots
    }

    pub fn order(&self) -> usize {
        self.roots.len()
    }

    pub fn multiplicity(&self, r: &Q) -> usize {
        self.roots.iter().filter(|x| *x == r).count()
    }

    /// Coefficients of `∂^k`, lowest order first.
    pub fn coefficients(&self) -> Vec<Q> {
        let mut c = vec![qi(self.sign as i64)];
        for r in &self.roots {
            let mut next = vec![Q::zero(); c.len() + 1];
            for (k, a) in c.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            c = next;
        }
        c
    }

    pub fn apply(&self, f: &PiecewiseExpPoly) -> PiecewiseExpPoly {
        let g = self.roots.iter().fold(f.clone(), |g, r| g.apply_factor(r));
        if self.sign < 0 {
            g.scale(&qi(-1))
        } else {
            g
        }
    }

    /// Applies the expanded form `Σ c_k ∂^k` (used as an independent check).
    pub fn apply_expanded(&self, f: &PiecewiseExpPoly) -> PiecewiseExpPoly {
        let mut acc = PiecewiseExpPoly::zero();
        let mut d = f.clone();
        for c in self.coefficients() {
            acc = acc.add(&d.scale(&c));
            d = d.differentiate();
        }
        acc
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.sign < 0 { "-" } else { "" })?;
        for r in &self.roots {
            if r.is_zero() {
                write!(f, "(d)")?;
            } else if r.is_negative() {
                write!(f, "(d+{})", -r)?;
            } else {
                write!(f, "(d-{r})")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for PiecewiseExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |terms: &[ExpTerm]| -> String {
            if terms.is_empty() {
                return "0".into();
            }
            terms
                .iter()
                .map(|t| {
                    let mut s = t.coeff.to_string();
                    if t.power > 0 {
                        s += &format!("*t^{}", t.power);
                    }
                    if !t.exponent.is_zero() {
                        s += &format!("*e^({}t)", t.exponent);
                    }
                    s
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(f, "t<0: {}; t>0: {}", side(&self.neg), side(&self.pos))?;
        for a in &self.atoms {
            write!(f, "; {}*delta^({})", a.weight, a.order)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    fn pos(c: Q, e: Q, k: u32) -> PiecewiseExpPoly {
        PiecewiseExpPoly::term(Side::Pos, c, e, k)
    }
    fn neg(c: Q, e: Q, k: u32) -> PiecewiseExpPoly {
        PiecewiseExpPoly::term(Side::Neg, c, e, k)
    }

    fn h13() -> PiecewiseExpPoly {
        neg(qi(1), qi(0), 0).add(&pos(qi(1), qi(-1), 0))
    }

    #[test]
    fn derivative_without_jump() {
        let d = h13().differentiate();
        assert_eq!(d, pos(qi(-1), qi(-1), 0));
    }

    #[test]
    fn heaviside_derivative_is_delta() {
        assert_eq!(pos(qi(1), qi(0), 0).differentiate(), PiecewiseExpPoly::delta());
    }

    #[test]
    fn product_rule() {
        let f = pos(qi(1), qi(-2), 1);
        let want = pos(qi(1), qi(-2), 0).add(&pos(qi(-2), qi(-2), 1));
        assert_eq!(f.differentiate(), want);
    }

    #[test]
    fn operator_on_fundamental_solution() {
        let op = DiffOp::new(-1, vec![qi(0), qi(-1)]);
        assert_eq!(op.apply(&h13()), PiecewiseExpPoly::delta());
        assert_eq!(op.apply_expanded(&h13()), PiecewiseExpPoly::delta());
    }

    #[test]
    fn kernel_element_is_annihilated() {
        let a = qr(3, 2);
        let f = PiecewiseExpPoly::exp_both(qi(5), a.clone());
        assert!(DiffOp::new(1, vec![a]).apply(&f).is_zero());
    }

    #[test]
    fn coefficient_expansion() {
        // -(d)(d+1) = -d^2 - d
        let op = DiffOp::new(-1, vec![qi(0), qi(-1)]);
        assert_eq!(op.coefficients(), vec![qi(0), qi(-1), qi(-1)]);
    }

    #[test]
    fn repeated_exponent_raises_power() {
        let e = pos(qi(1), qi(-1), 0);
        assert_eq!(e.convolve(&e).unwrap(), pos(qi(1), qi(-1), 1));
    }

    #[test]
    fn delta_is_identity() {
        let g = h13();
        assert_eq!(PiecewiseExpPoly::delta().convolve(&g).unwrap(), g);
        assert_eq!(g.convolve(&PiecewiseExpPoly::delta()).unwrap(), g);
    }

    #[test]
    fn second_order_step_closed_form() {
        // kernel of (d)(d+1) with value -1 on t<=0 and -e^{-t} on t>0
        let h0 = neg(qi(-1), qi(0), 0).add(&pos(qi(-1), qi(-1), 0));
        let h = PiecewiseExpPoly::delta().convolve(&h0).unwrap();
        assert_eq!(h, h0);
        let g = DiffOp::new(1, vec![qi(1), qi(-2)]).apply(&h);
        let want = PiecewiseExpPoly::delta()
            .add(&neg(qi(2), qi(0), 0))
            .add(&pos(qi(2), qi(-1), 0));
        assert_eq!(g, want);
        assert!(g.without_atoms().lower_bound(DEFAULT_WINDOW, DEFAULT_STEP).certified_positive);
    }

    #[test]
    fn divergent_pair_is_rejected() {
        let f = pos(qi(1), qi(0), 0);
        let g = neg(qi(1), qi(0), 0);
        assert!(matches!(f.convolve(&g), Err(Error::DivergentConvolution { .. })));
    }

    #[test]
    fn cross_side_convolution_matches_quadrature() {
        let f = pos(qi(2), qi(-1), 1).add(&neg(qi(1), qi(2), 0));
        let g = neg(qi(1), qi(1), 1).add(&pos(qi(-3), qi(-2), 0));
        let c = f.convolve(&g).unwrap();
        for &t in &[-1.3, -0.2, 0.4, 2.1] {
            let n = 400_000;
            let (a, b) = (-40.0, 40.0);
            let h = (b - a) / n as f64;
            let mut s = 0.0;
            for i in 0..n {
                let u = a + (i as f64 + 0.5) * h;
                s += f.eval(u) * g.eval(t - u) * h;
            }
            assert!((s - c.eval(t)).abs() < 1e-6, "t={t}: {s} vs {}", c.eval(t));
        }
    }

    #[test]
    fn lower_bound_examples() {
        let lb = h13().lower_bound(50.0, 0.01);
        assert!(lb.certified_positive && lb.grid_min > 0.0);
        let z = PiecewiseExpPoly::zero().lower_bound(DEFAULT_WINDOW, DEFAULT_STEP);
        assert_eq!(z.grid_min, 0.0);
        assert!(!z.certified_positive);
    }

    #[test]
    fn decay_classes() {
        assert_eq!(h13().decay_class(), DecayClass::ExpDecayPlusBoundedMinus);
        assert_eq!(PiecewiseExpPoly::zero().decay_class(), DecayClass::ExpDecayBoth);
        let h = pos(qr(-1, 16), qi(-2), 0)
            .add(&neg(qr(-1, 16), qi(2), 0))
            .add(&neg(qr(1, 4), qi(0), 1));
        assert_eq!(h.decay_class(), DecayClass::LinearGrowthMinus);
    }

    #[test]
    fn json_roundtrip() {
        let big = Q::new("123456789012345678901234567890".parse().unwrap(), 7.into());
        let f = h13().add(&pos(big, qr(-5, 2), 3)).add(&PiecewiseExpPoly::atom(2, qr(-1, 3)));
        let s = f.to_json();
        let back = PiecewiseExpPoly::from_json(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json(), s);
    }
}
