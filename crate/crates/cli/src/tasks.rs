//! Independent verification cases and their execution.

use crate::config::SweepConfig;
use crate::report::{Case, SampleTable, Status};
use polylab_core::fundsol::build_report;
use polylab_core::modalgreen::counterexample::{counterexample, default_radii};
use polylab_core::modalgreen::fit::{applicable, fit_decay, growth_exponents, lambda, EstimateId, SamplePlan};
use polylab_core::modalgreen::{assemble_green, ShellDomain};
use polylab_core::modecheck::{check_family, library, Branch, Identity};
use polylab_core::positivity::{admissible_p, check_headline, pairings, swapped_chain};
use polylab_core::rational::{qi, Q};
use polylab_core::rootsets::{even_base_p, interlace, roots_even, shifted_even_roots};
use polylab_core::symbols::{
    a_m_at_zero_closed_form, even_exception_set, identity_mismatches, shifted_index, sweep_even_lower_bound,
    sweep_odd_lower_bound, symbol_product, Grid, SymbolParams,
};
use polylab_core::Error;
use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

/// Symmetry tolerance for swapped kernels, relative to the absolute mode sum.
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const SYMMETRY_PAIRS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    SymbolIdentity { m: u32, n: u32, q_max: u32 },
    SpotValue { m: u32 },
    OddSweep { m: u32, n: u32, q_max: u32, grid: Grid },
    EvenSweep { m: u32, n: u32, q_max: u32 },
    Interlace { m: u32, n: u32, p: u32 },
    Multiset { m: u32, n: u32 },
    Fundamental { m: u32, n: u32 },
    Positivity { m: u32, n: u32, p: u32 },
    /// Base and target pairings exchanged: containment fails, so must the certificate.
    NegativeControl { m: u32, n: u32, p: u32 },
    Identity { identity: Identity, m: u32, n: u32, radius: f64 },
    Fit { m: u32, n: u32, r0: f64, r1: f64, estimate: EstimateId, plan: SamplePlan },
    Growth { m: u32, n: u32 },
    Symmetry { m: u32, n: u32, seed: u64 },
    Counterexample { m: u32, n: u32, radii: Vec<Q> },
}

fn payload<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn error_case(module: &str, id: String, e: &Error) -> Case {
    let status = match e {
        Error::TruncationWarning { .. } | Error::IllConditioned { .. } | Error::QuadratureFailure { .. } => {
            Status::Uncertified
        }
        _ => Status::Fail,
    };
    Case::new(module, id, status, e.to_string(), json!({ "error": e.to_string() }))
}

impl Task {
    pub fn module(&self) -> &'static str {
        match self {
            Task::SymbolIdentity { .. } | Task::SpotValue { .. } | Task::OddSweep { .. } | Task::EvenSweep { .. } => {
                "symbols"
            }
            Task::Interlace { .. } | Task::Multiset { .. } => "roots",
            Task::Fundamental { .. } => "fundsol",
            Task::Positivity { .. } | Task::NegativeControl { .. } => "positivity",
            Task::Identity { .. } => "identity",
            Task::Fit { .. } | Task::Growth { .. } | Task::Symmetry { .. } => "green",
            Task::Counterexample { .. } => "counterexample",
        }
    }

    pub fn id(&self) -> String {
        match self {
            Task::SymbolIdentity { m, n, q_max } => format!("identity m={m} n={n} q<={q_max}"),
            Task::SpotValue { m } => format!("a_m(0) m={m}"),
            Task::OddSweep { m, n, q_max, .. } => format!("odd-lower-bound m={m} n={n} q<={q_max}"),
            Task::EvenSweep { m, n, q_max } => format!("even-lower-bound m={m} n={n} q<={q_max}"),
            Task::Interlace { m, n, p } => format!("interlace m={m} n={n} p={p}"),
            Task::Multiset { m, n } => format!("shifted-multiset m={m} n={n}"),
            Task::Fundamental { m, n } => format!("fundamental m={m} n={n}"),
            Task::Positivity { m, n, p } => format!("headline m={m} n={n} p={p}"),
            Task::NegativeControl { m, n, p } => format!("negative-control m={m} n={n} p={p}"),
            Task::Identity { identity, m, n, .. } => format!("{} m={m} n={n}", identity.name()),
            Task::Fit { m, n, r0, r1, estimate, .. } => format!("{} m={m} n={n} shell={r0}..{r1}", estimate.name()),
            Task::Growth { m, n } => format!("growth m={m} n={n}"),
            Task::Symmetry { m, n, .. } => format!("symmetry m={m} n={n}"),
            Task::Counterexample { m, n, .. } => format!("counterexample m={m} n={n}"),
        }
    }

    pub fn run(&self, tol_scale: f64) -> Case {
        let t = Instant::now();
        let mut case = self.execute(tol_scale).unwrap_or_else(|e| error_case(self.module(), self.id(), &e));
        case.seconds = t.elapsed().as_secs_f64();
        case
    }

    fn execute(&self, tol_scale: f64) -> Result<Case, Error> {
        let module = self.module();
        let id = self.id();
        let case = |status: Status, detail: String, p: Value| Case::new(module, id.clone(), status, detail, p);
        Ok(match self {
            Task::SymbolIdentity { m, n, q_max } => {
                let bad = identity_mismatches(*m, *n, *q_max)?;
                let detail = format!("{} mismatches", bad.len());
                case(Status::from_bool(bad.is_empty()), detail, json!({ "mismatches": bad }))
            }
            Task::SpotValue { m } => {
                let n = 2 * m + 1;
                let q = m + 1 - (n - 1) / 2;
                let direct = symbol_product(SymbolParams::new(*m, n, q))?.re.eval(&qi(0));
                let closed = a_m_at_zero_closed_form(*m);
                let ok = shifted_index(n, q) == *m && direct == closed;
                let p = json!({ "closed_form": closed.to_string(), "direct": direct.to_string(), "n": n, "q": q });
                case(Status::from_bool(ok), format!("a_m(0) = {closed}"), p)
            }
            Task::OddSweep { m, n, q_max, grid } => {
                let r = sweep_odd_lower_bound(*m, *n, *q_max, *grid)?;
                let ok = r.certified && r.monotone != Some(false);
                case(Status::from_bool(ok), format!("min ratio {:.6e} at q={}", r.min_ratio, r.argmin_q), payload(&r))
            }
            Task::EvenSweep { m, n, q_max } => {
                let r = sweep_even_lower_bound(*m, *n, *q_max)?;
                let mut got: Vec<(u32, u32)> = r.exceptions.iter().map(|e| (e.q, e.j.unwrap_or(u32::MAX))).collect();
                got.sort();
                let mut want = even_exception_set(*m, *n);
                want.sort();
                let ok = r.certified && got == want;
                let detail = format!("min ratio {:.6e}; {} exceptions", r.min_ratio, got.len());
                case(Status::from_bool(ok), detail, payload(&r))
            }
            Task::Interlace { m, n, p } => {
                let (base, target) = pairings(*m, *n, *p)?;
                let ok = interlace(&base, &target)?;
                let pl = json!({ "base": base.pairs(), "target": target.pairs() });
                case(Status::from_bool(ok), format!("{} pairs", base.pairs().len()), pl)
            }
            Task::Multiset { m, n } => {
                let shifted = shifted_even_roots(*m, *n);
                let next = roots_even(*m, n + 2, 0)?.multiset();
                let here = roots_even(*m, *n, 1)?.multiset();
                let ok = shifted == next && shifted == here;
                let pl = json!({ "shifted": shifted, "next_dimension": next, "p_one": here });
                case(Status::from_bool(ok), format!("{} roots", shifted.len()), pl)
            }
            Task::Fundamental { m, n } => {
                let r = build_report(*m, *n)?;
                let ok = r.residual_zero && r.closed_form_agrees != Some(false);
                case(Status::from_bool(ok), format!("{} ({:?})", r.operator, r.decay_class), payload(&r))
            }
            Task::Positivity { m, n, p } => {
                let r = check_headline(*m, *n, *p)?;
                let ok = r.certified && r.chain_certified && r.chain_matches_direct;
                case(Status::from_bool(ok), format!("{:?}", r.certificate.tier), payload(&r))
            }
            Task::NegativeControl { m, n, p } => {
                let t = swapped_chain(*m, *n, *p)?;
                let ok = t.all_certified();
                let detail = if ok { "certified".to_string() } else { "not certified (expected)".to_string() };
                case(Status::from_bool(ok), detail, json!({ "stages": t.stages }))
            }
            Task::Identity { identity, m, n, radius } => {
                let f = check_family(*identity, &library(*m, *n), *radius)?;
                let detail = format!("C = {:.6e}, scale deviation {:.1e}", f.feasible_c, f.max_scale_deviation);
                case(Status::from_bool(f.verdict(tol_scale)), detail, payload(&f))
            }
            Task::Fit { m, n, r0, r1, estimate, plan } => {
                let shell = ShellDomain::new(*r0, *r1, *n)?;
                let f = fit_decay(&shell, *m, *estimate, *plan)?;
                let detail = if *estimate == EstimateId::LogLaw {
                    format!("R² {:.6}", f.r2)
                } else {
                    format!("slope {:.4} target {} ({})", f.slope, f.target, f.mode)
                };
                let mut c = case(Status::from_bool(f.verdict(tol_scale)), detail, payload(&f));
                c.table = Some(SampleTable::from(&f));
                c
            }
            Task::Growth { m, n } => {
                let g = growth_exponents(*m, *n, 3)?;
                let detail = format!("min inner exponent {:.4} (λ = {})", g.min_inner, g.lambda);
                case(Status::from_bool(g.verdict(tol_scale)), detail, payload(&g))
            }
            Task::Symmetry { m, n, seed } => {
                let shell = ShellDomain::new(1.0, 4.0, *n)?;
                let mut rng = StdRng::seed_from_u64(*seed);
                let mut worst: f64 = 0.0;
                let mut pairs = vec![];
                for _ in 0..SYMMETRY_PAIRS {
                    let (x, y) = loop {
                        let x = random_point(&mut rng, *n);
                        let y = random_point(&mut rng, *n);
                        if (norm(&x) - norm(&y)).abs() > 0.3 {
                            break (x, y);
                        }
                    };
                    let a = assemble_green(&shell, *m, &x, &y, 64)?;
                    let b = assemble_green(&shell, *m, &y, &x, 64)?;
                    // near a zero of G the mode terms cancel, so measure against their absolute sum
                    let allowed = a.magnitude.max(b.magnitude) * SYMMETRY_TOL * tol_scale + a.tail + b.tail;
                    let ratio = (a.value - b.value).abs() / allowed.max(f64::MIN_POSITIVE);
                    worst = worst.max(ratio);
                    pairs.push(json!({ "x": x, "y": y, "forward": a.value, "swapped": b.value, "tails": [a.tail, b.tail], "magnitudes": [a.magnitude, b.magnitude] }));
                }
                let detail = format!("asymmetry at most {worst:.2} of the allowance");
                case(Status::from_bool(worst <= 1.0), detail, json!({ "pairs": pairs }))
            }
            Task::Counterexample { m, n, radii } => {
                let r = counterexample(*m, *n, radii)?;
                let detail = format!("λ = {}, ray-dependent {}, unbounded {}", r.lambda, r.ray_dependent, r.unbounded);
                case(Status::from_bool(r.pass), detail, payload(&r))
            }
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uniform direction, radius in the middle of the `[1, 4]` shell.
fn random_point(rng: &mut StdRng, n: u32) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 0.1 && r <= 1.0 {
            let radius = rng.gen_range(1.3..3.7);
            return v.iter().map(|x| x * radius / r).collect();
        }
    }
}

fn mix(seed: u64, m: u32, n: u32) -> u64 {
    seed ^ ((m as u64) << 32 | n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn odd_q_max(m: u32) -> u32 {
    (1u32 << (m + 4)) * m + 4
}

pub const EVEN_Q_MAX: u32 = 200;

pub fn symbol_tasks(cfg: &SweepConfig, m: u32, n: u32) -> Vec<Task> {
    if n % 2 == 1 {
        vec![
            Task::SymbolIdentity { m, n, q_max: cfg.q_max.unwrap_or(2 * m + 5) },
            Task::OddSweep {
                m,
                n,
                q_max: cfg.q_max.unwrap_or(odd_q_max(m)),
                grid: Grid { window: cfg.gamma_window, step: cfg.gamma_step },
            },
        ]
    } else {
        vec![Task::EvenSweep { m, n, q_max: cfg.q_max.unwrap_or(EVEN_Q_MAX) }]
    }
}

fn p_values(cfg: &SweepConfig, m: u32, n: u32) -> Vec<u32> {
    admissible_p(m, n).into_iter().filter(|p| cfg.p.as_ref().is_none_or(|r| r.contains(*p))).collect()
}

pub fn root_tasks(cfg: &SweepConfig, m: u32, n: u32) -> Vec<Task> {
    let mut out: Vec<Task> = p_values(cfg, m, n).into_iter().map(|p| Task::Interlace { m, n, p }).collect();
    if n % 2 == 0 && n + 2 <= 2 * m && (m - n / 2) % 2 == 1 {
        out.push(Task::Multiset { m, n });
    }
    out
}

pub fn positivity_tasks(cfg: &SweepConfig, m: u32, n: u32) -> Vec<Task> {
    let mut out: Vec<Task> = p_values(cfg, m, n).into_iter().map(|p| Task::Positivity { m, n, p }).collect();
    if cfg.negative_control {
        let base = if n % 2 == 1 { 0 } else { even_base_p(m, n) };
        for p in p_values(cfg, m, n).into_iter().filter(|&p| p != base) {
            out.push(Task::NegativeControl { m, n, p });
        }
    }
    out
}

pub fn identity_tasks(m: u32, n: u32, radius: f64) -> Vec<Task> {
    let branch = if n % 2 == 1 { Branch::Odd } else { Branch::Even };
    Identity::ALL
        .into_iter()
        .filter(|i| i.branch() == branch)
        .map(|identity| Task::Identity { identity, m, n, radius })
        .collect()
}

pub fn green_tasks(cfg: &SweepConfig, m: u32, n: u32) -> Vec<Task> {
    let mut out = vec![];
    for &ratio in &cfg.shell_ratios {
        for estimate in applicable(m, n) {
            let plan = SamplePlan::for_estimate(estimate, m, n);
            out.push(Task::Fit { m, n, r0: 1.0, r1: ratio, estimate, plan });
        }
    }
    if n % 2 == 1 {
        out.push(Task::Growth { m, n });
    }
    out.push(Task::Symmetry { m, n, seed: mix(cfg.seed, m, n) });
    out
}

pub fn counterexample_applies(m: u32, n: u32) -> bool {
    n % 2 == 1 && n >= 3 && n <= 2 * m + 1 && lambda(m, n) >= 1
}

/// Every task selected by the configuration, in report order.
pub fn plan(cfg: &SweepConfig) -> Vec<Task> {
    let mut out = vec![];
    for m in cfg.m.values() {
        if cfg.runs("symbols") && !cfg.dimensions(m).is_empty() {
            out.push(Task::SpotValue { m });
        }
        for n in cfg.dimensions(m) {
            if cfg.runs("symbols") {
                out.extend(symbol_tasks(cfg, m, n));
            }
            if cfg.runs("roots") {
                out.extend(root_tasks(cfg, m, n));
            }
            if cfg.runs("fundsol") {
                out.push(Task::Fundamental { m, n });
            }
            if cfg.runs("positivity") {
                out.extend(positivity_tasks(cfg, m, n));
            }
            if cfg.runs("identity") {
                out.extend(identity_tasks(m, n, 1.0));
            }
            if cfg.runs("green") {
                out.extend(green_tasks(cfg, m, n));
            }
            if cfg.runs("counterexample") && counterexample_applies(m, n) {
                out.push(Task::Counterexample { m, n, radii: default_radii() });
            }
        }
    }
    out
}

/// Runs tasks in parallel; results keep the input order.
pub fn run_all(tasks: &[Task], tol_scale: f64) -> Vec<Case> {
    tasks.par_iter().map(|t| t.run(tol_scale)).collect()
}
