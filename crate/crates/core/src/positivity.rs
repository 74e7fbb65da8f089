//! Positivity preservation through chains of second-order convolution steps,
//! and the direct check that the shifted operator maps `h` to a nonnegative
//! distribution.

use crate::error::{Error, Result};
use crate::exppoly::{DecayClass, DiffOp, PiecewiseExpPoly, Side, DEFAULT_STEP, DEFAULT_WINDOW};
use crate::fundsol::{h_even, h_odd};
use crate::rational::{qi, Q};
use crate::rootsets::{even_base_p, interlace, odd_k, roots_even, roots_odd, RootPairing};
use crate::symbols::{even_symbol, odd_operator, SymbolParams};
use num::{Signed, Zero};
use serde::Serialize;

/// Tolerance for the grid tier.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecondOrderFactors {
    pub a: Q,
    pub b: Q,
    pub c: Q,
    pub d: Q,
}

impl SecondOrderFactors {
    pub fn new(a: Q, b: Q, c: Q, d: Q) -> Result<Self> {
        if !(b.is_negative() && !a.is_negative() && d.is_negative() && !c.is_negative()) {
            return Err(Error::Range(format!("need b < 0 <= a and d < 0 <= c, got a={a} b={b} c={c} d={d}")));
        }
        Ok(SecondOrderFactors { a, b, c, d })
    }

    pub fn contained(&self) -> bool {
        self.d <= self.b && self.a <= self.c
    }

    /// Kernel of `(∂-a)(∂-b)`: `κ e^{at}` on `t <= 0`, `κ e^{bt}` on `t > 0`, `κ = 1/(b-a)`.
    pub fn kernel(&self) -> PiecewiseExpPoly {
        let kappa = qi(1) / (&self.b - &self.a);
        PiecewiseExpPoly::term(Side::Neg, kappa.clone(), self.a.clone(), 0)
            .add(&PiecewiseExpPoly::term(Side::Pos, kappa, self.b.clone(), 0))
    }

    /// `(∂-c)(∂-d)` applied to the kernel, in closed form.
    pub fn image_kernel(&self) -> PiecewiseExpPoly {
        let kappa = qi(1) / (&self.b - &self.a);
        let wa = &kappa * (&self.a - &self.c) * (&self.a - &self.d);
        let wb = &kappa * (&self.b - &self.c) * (&self.b - &self.d);
        PiecewiseExpPoly::delta()
            .add(&PiecewiseExpPoly::term(Side::Neg, wa, self.a.clone(), 0))
            .add(&PiecewiseExpPoly::term(Side::Pos, wb, self.b.clone(), 0))
    }

    pub fn outer_op(&self) -> DiffOp {
        DiffOp::new(1, vec![self.c.clone(), self.d.clone()])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tier {
    /// Every piece is a sum of terms that are nonnegative on their side.
    Exact,
    /// Grid minimum above `-GRID_TOL` and no negative-dominant tail.
    Grid,
    /// Neither check succeeded.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub tier: Tier,
    pub grid_min: f64,
    pub atoms_nonnegative: bool,
    pub certified: bool,
}

pub fn certify(f: &PiecewiseExpPoly) -> Certificate {
    let atoms_nonnegative = f.atoms().iter().all(|a| !a.weight.is_negative());
    let lb = f.without_atoms().lower_bound(DEFAULT_WINDOW, DEFAULT_STEP);
    let tier = if f.single_signed_nonnegative() {
        Tier::Exact
    } else if lb.nonnegative(GRID_TOL) {
        Tier::Grid
    } else {
        Tier::None
    };
    Certificate {
        tier,
        grid_min: lb.grid_min,
        atoms_nonnegative,
        certified: atoms_nonnegative && tier != Tier::None,
    }
}

#[derive(Clone, Debug)]
pub struct Step {
    pub h: PiecewiseExpPoly,
    pub g: PiecewiseExpPoly,
    pub certificate: Certificate,
    /// False when exactly one of `a`, `c` is zero, so `g` need not decay at `-∞`.
    pub decay_contract: bool,
}

/// One convolution step: `h = f ∗ kernel`, `g = f ∗ (∂-c)(∂-d) kernel`.
pub fn step_second_order(f: &PiecewiseExpPoly, fac: &SecondOrderFactors) -> Result<Step> {
    let h = f.convolve(&fac.kernel())?;
    let g = f.convolve(&fac.image_kernel())?;
    debug_assert_eq!(g, fac.outer_op().apply(&h));
    let certificate = certify(&g);
    Ok(Step {
        h,
        g,
        certificate,
        decay_contract: fac.a.is_zero() == fac.c.is_zero(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub contained: bool,
    pub decay: DecayClass,
    pub certificate: Certificate,
}

#[derive(Clone, Debug)]
pub struct ChainTrace {
    /// `f_0, …, f_m`.
    pub f: Vec<PiecewiseExpPoly>,
    /// `h_0, …, h_{m-1}`.
    pub h: Vec<PiecewiseExpPoly>,
    pub stages: Vec<StageReport>,
}

impl ChainTrace {
    pub fn last(&self) -> &PiecewiseExpPoly {
        self.f.last().expect("chain has at least the input stage")
    }

    pub fn all_certified(&self) -> bool {
        self.stages.iter().all(|s| s.certificate.certified)
    }
}

/// Runs the chain from `δ` using base pairs `[b_i, a_i]` and target pairs `[d_i, c_i]`.
pub fn chain_with(base: &RootPairing, target: &RootPairing) -> Result<ChainTrace> {
    let (bp, tp) = (base.pairs(), target.pairs());
    if bp.len() != tp.len() {
        return Err(Error::PairCountMismatch { inner: bp.len(), outer: tp.len() });
    }
    let mut f = vec![PiecewiseExpPoly::delta()];
    let mut hs = vec![];
    let mut stages = vec![];
    for (i, (&(b, a), &(d, c))) in bp.iter().zip(&tp).enumerate() {
        let fac = SecondOrderFactors::new(qi(a), qi(b), qi(c), qi(d))?;
        let step = step_second_order(f.last().unwrap(), &fac)?;
        if !step.decay_contract && i + 1 < bp.len() {
            return Err(Error::DecayContractViolation(format!(
                "stage {i}: exactly one of a = {a} and c = {c} is zero, so the next input does not decay"
            )));
        }
        stages.push(StageReport {
            a: a.to_string(),
            b: b.to_string(),
            c: c.to_string(),
            d: d.to_string(),
            contained: fac.contained(),
            decay: step.g.without_atoms().decay_class(),
            certificate: step.certificate.clone(),
        });
        hs.push(step.h);
        f.push(step.g);
    }
    Ok(ChainTrace { f, h: hs, stages })
}

/// Base and target root pairings of the chain at `(m, n, p)`.
pub fn pairings(m: u32, n: u32, p: u32) -> Result<(RootPairing, RootPairing)> {
    if n % 2 == 1 {
        odd_k(m, n)?;
        Ok((roots_odd(m, n, 0)?, roots_odd(m, n, p)?))
    } else {
        let base = roots_even(m, n, even_base_p(m, n))?.stripped();
        Ok((base, roots_even(m, n, p)?.stripped()))
    }
}

pub fn chain(m: u32, n: u32, p: u32) -> Result<ChainTrace> {
    let (base, target) = pairings(m, n, p)?;
    chain_with(&base, &target)
}

/// `L(-∂, -p(p+n-2))` for either parity.
pub fn shifted_operator(m: u32, n: u32, p: u32) -> Result<DiffOp> {
    if n % 2 == 1 {
        odd_operator(m, n, p)
    } else {
        even_symbol(SymbolParams::new(m, n, p))
    }
}

pub fn fundamental(m: u32, n: u32) -> Result<PiecewiseExpPoly> {
    if n % 2 == 1 {
        h_odd(m, n)
    } else {
        h_even(m, n)
    }
}

/// Admissible p values for the positivity statement.
pub fn admissible_p(m: u32, n: u32) -> Vec<u32> {
    if n % 2 == 1 {
        match odd_k(m, n) {
            Ok(k) => (0..=k as u32).collect(),
            Err(_) => vec![],
        }
    } else if n >= 2 && n <= 2 * m {
        let k = m - n / 2;
        (even_base_p(m, n)..=k).step_by(2).collect()
    } else {
        vec![]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub m: u32,
    pub n: u32,
    pub p: u32,
    pub operator: String,
    pub atoms: Vec<(u32, String)>,
    pub delta_weight_one: bool,
    pub kills_constants: Option<bool>,
    pub certificate: Certificate,
    pub interlaced: bool,
    pub chain_matches_direct: bool,
    pub chain_certified: bool,
    pub stages: Vec<StageReport>,
    pub certified: bool,
}

pub fn check_headline(m: u32, n: u32, p: u32) -> Result<PositivityReport> {
    if !admissible_p(m, n).contains(&p) {
        return Err(Error::Range(format!("p = {p} is not admissible for m = {m}, n = {n}")));
    }
    let op = shifted_operator(m, n, p)?;
    let kills_constants = (n % 2 == 0).then(|| op.roots().iter().any(|r| r.is_zero()));
    if kills_constants == Some(false) {
        return Err(Error::Range("operator does not annihilate constants".into()));
    }
    let h = fundamental(m, n)?;
    let direct = op.apply(&h);
    let certificate = certify(&direct);
    let (base, target) = pairings(m, n, p)?;
    let interlaced = interlace(&base, &target)?;
    let trace = chain_with(&base, &target)?;
    let chain_matches_direct = trace.last() == &direct;
    let chain_certified = trace.all_certified();
    let atoms: Vec<(u32, String)> = direct
        .atoms()
        .iter()
        .map(|a| (a.order, a.weight.to_string()))
        .collect();
    let delta_weight_one = direct.atoms().len() == 1 && direct.atom_weight(0) == qi(1);
    Ok(PositivityReport {
        m,
        n,
        p,
        operator: op.to_string(),
        atoms,
        delta_weight_one,
        kills_constants,
        certified: certificate.certified && chain_matches_direct,
        certificate,
        interlaced,
        chain_matches_direct,
        chain_certified,
        stages: trace.stages,
    })
}

/// For `m - n/2` odd: the shifted operator at `(m, n, p)` coincides with the one at
/// `(m, n+2, p-1)`, and so does the fundamental solution, hence the output.
pub fn even_reduction_matches(m: u32, n: u32, p: u32) -> Result<bool> {
    if p == 0 {
        return Err(Error::Range("p must be at least 1".into()));
    }
    let left = shifted_operator(m, n, p)?.apply(&h_even(m, n)?);
    let right = shifted_operator(m, n + 2, p - 1)?.apply(&h_even(m, n + 2)?);
    Ok(left == right)
}

/// Chain with the base and target pairings exchanged; positivity is expected to fail
/// whenever the containment is strict.
pub fn swapped_chain(m: u32, n: u32, p: u32) -> Result<ChainTrace> {
    let (base, target) = pairings(m, n, p)?;
    chain_with(&target, &base)
}
