//! Acceptance suite: one PASS/FAIL line per criterion. Every tolerance and
//! runtime limit is pinned below.

mod common;

use num::Zero;
use polylab_core::fundsol::{
    build_report, fundamental_solution, fundamental_solution_distinct, h_even, h_odd, odd_base_operator,
};
use polylab_core::modalgreen::counterexample::{counterexample, default_radii};
use polylab_core::modalgreen::fit::{fit_decay, EstimateId, SamplePlan};
use polylab_core::modalgreen::{assemble_green, ShellDomain};
use polylab_core::modecheck::{check_family, library, lhs_energy, plancherel_energy, Identity};
use polylab_core::positivity::{admissible_p, check_headline, pairings, swapped_chain};
use polylab_core::rational::{qi, qr};
use polylab_core::rootsets::{interlace, roots_even, shifted_even_roots};
use polylab_core::symbols::{
    a_m_at_zero_closed_form, even_exception_set, identity_mismatches, shifted_index, sweep_even_lower_bound,
    sweep_odd_lower_bound, symbol_product, Grid, SymbolParams,
};
use polylab_core::{PiecewiseExpPoly, Side};
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::time::{Duration, Instant};

const SYMBOL_LIMIT: Duration = Duration::from_secs(10);
const SWEEP_LIMIT: Duration = Duration::from_secs(120);
const INEQUALITY_LIMIT: Duration = Duration::from_secs(120);
const GREEN_LIMIT: Duration = Duration::from_secs(300);
const PLANCHEREL_TOL: f64 = 1e-6;
const PLANCHEREL_SAMPLES: usize = 1 << 16;
const CLASSICAL_TOL: f64 = 1e-5;
const CLASSICAL_PAIRS: usize = 20;
const CLASSICAL_SEED: u64 = 0x5eed;
const MIN_LIBRARY: usize = 12;
const LOG_LAW_R2: f64 = 0.99;
const SLOPE_TOL: f64 = 0.05;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn symbol_identity() -> Outcome {
    let mut cases = 0;
    for m in 1..=6u32 {
        for n in (3..=2 * m + 1).step_by(2) {
            let bad = identity_mismatches(m, n, 2 * m + 5).map_err(|e| e.to_string())?;
            if let Some(first) = bad.first() {
                return Err(format!("m={m} n={n}: {} mismatches, first q={}", bad.len(), first.q));
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (m, n) cases, q <= 2m+5, exact"))
}

fn spot_values() -> Outcome {
    ensure(a_m_at_zero_closed_form(1) == qi(2), "m=1 should give 2")?;
    ensure(a_m_at_zero_closed_form(2) == qi(24), "m=2 should give 24")?;
    for m in 1..=6u32 {
        let want = qi(common::a_m_zero(m as u64) as i64);
        ensure(a_m_at_zero_closed_form(m) == want, format!("closed form m={m}"))?;
        // a_m sits at q = m - n/2 + 3/2; check it in the top odd dimension
        let n = 2 * m + 1;
        let q = m + 1 - (n - 1) / 2;
        ensure(shifted_index(n, q) == m, format!("index m={m}"))?;
        let s = symbol_product(SymbolParams::new(m, n, q)).map_err(|e| e.to_string())?;
        ensure(s.re.eval(&Zero::zero()) == want, format!("direct expansion m={m}"))?;
    }
    Ok("a_m(0) exact for m <= 6".into())
}

fn lower_bound_sweeps() -> Outcome {
    let mut worst = f64::INFINITY;
    for m in 1..=4u32 {
        for n in [3u32, 5] {
            if n > 2 * m + 1 {
                continue;
            }
            let q_max = (1u32 << (m + 4)) * m + 4;
            let r = sweep_odd_lower_bound(m, n, q_max, Grid { window: 60.0, step: 1.0 / 64.0 })
                .map_err(|e| e.to_string())?;
            ensure(r.certified && r.min_ratio > 0.0, format!("odd m={m} n={n}: min ratio {}", r.min_ratio))?;
            ensure(r.monotone == Some(true), format!("odd m={m} n={n}: not monotone"))?;
            worst = worst.min(r.min_ratio);
        }
    }
    let mut even = 0;
    for m in 1..=4u32 {
        for n in (2..=2 * m).step_by(2) {
            let r = sweep_even_lower_bound(m, n, 200).map_err(|e| e.to_string())?;
            ensure(r.certified, format!("even m={m} n={n}: min ratio {}", r.min_ratio))?;
            let mut got: Vec<(u32, u32)> = r.exceptions.iter().map(|e| (e.q, e.j.unwrap_or(u32::MAX))).collect();
            got.sort();
            let mut want = even_exception_set(m, n);
            want.sort();
            ensure(got == want, format!("even m={m} n={n}: exceptions {got:?} vs {want:?}"))?;
            even += 1;
        }
    }
    Ok(format!("odd min ratio {worst:.4e}; {even} even cases with exact exception sets"))
}

fn fundamental_solutions() -> Outcome {
    let mut count = 0;
    for m in 1..=6u32 {
        for n in 2..=2 * m + 1 {
            let report = build_report(m, n).map_err(|e| e.to_string())?;
            ensure(report.residual_zero, format!("m={m} n={n}: nonzero residual"))?;
            if n % 2 == 1 {
                let op = odd_base_operator(m, n).map_err(|e| e.to_string())?;
                let closed = fundamental_solution_distinct(&op).map_err(|e| e.to_string())?;
                let solved = fundamental_solution(&op).map_err(|e| e.to_string())?;
                ensure(closed == solved && solved == h_odd(m, n).unwrap(), format!("m={m} n={n}: closed form differs"))?;
            }
            count += 1;
        }
    }
    let want = PiecewiseExpPoly::term(Side::Pos, qr(-1, 16), qi(-2), 0)
        .add(&PiecewiseExpPoly::term(Side::Neg, qr(-1, 16), qi(2), 0))
        .add(&PiecewiseExpPoly::term(Side::Neg, qr(1, 4), qi(0), 1));
    let h = h_even(2, 4).map_err(|e| e.to_string())?;
    ensure(h.sub(&want).is_zero(), format!("m=2 n=4 instance: {h}"))?;
    for t in [-3.0f64, -0.5, 0.25, 2.0] {
        let w = if t > 0.0 { -(-2.0 * t).exp() / 16.0 } else { -(2.0 * t).exp() / 16.0 + t / 4.0 };
        ensure((h.eval(t) - w).abs() < 1e-15, format!("m=2 n=4 value at {t}"))?;
    }
    Ok(format!("{count} (m, n) cases with zero residual; hand instance exact"))
}

fn positivity() -> Outcome {
    let mut certified = 0;
    for m in 1..=4u32 {
        for n in 2..=2 * m + 1 {
            for p in admissible_p(m, n) {
                let r = check_headline(m, n, p).map_err(|e| e.to_string())?;
                ensure(r.certified && r.chain_matches_direct && r.chain_certified, format!("m={m} n={n} p={p}"))?;
                certified += 1;
            }
        }
    }
    let mut controls = 0;
    for (m, n, p) in [(2, 3, 1), (3, 3, 2), (3, 5, 1), (3, 2, 2), (4, 4, 2), (4, 3, 3)] {
        let t = swapped_chain(m, n, p).map_err(|e| e.to_string())?;
        ensure(!t.all_certified(), format!("negative control m={m} n={n} p={p} was certified"))?;
        controls += 1;
    }
    Ok(format!("{certified} tuples certified; {controls} negative controls fail"))
}

fn root_structure() -> Outcome {
    let mut checked = 0;
    for m in 1..=6u32 {
        for n in 2..=2 * m + 1 {
            for p in admissible_p(m, n) {
                let (base, target) = pairings(m, n, p).map_err(|e| e.to_string())?;
                ensure(interlace(&base, &target).map_err(|e| e.to_string())?, format!("m={m} n={n} p={p}"))?;
                checked += 1;
            }
        }
    }
    let mut identities = 0;
    for m in 2..=6u32 {
        for n in (2..=2 * m - 2).step_by(2) {
            if (m - n / 2) % 2 == 1 {
                let shifted = shifted_even_roots(m, n);
                let next = roots_even(m, n + 2, 0).map_err(|e| e.to_string())?.multiset();
                let here = roots_even(m, n, 1).map_err(|e| e.to_string())?.multiset();
                ensure(shifted == next && shifted == here, format!("multisets differ at m={m} n={n}"))?;
                identities += 1;
            }
        }
    }
    Ok(format!("{checked} interlacings; {identities} multiset identities"))
}

fn integral_inequalities() -> Outcome {
    let mut families = 0;
    let mut worst_scale: f64 = 0.0;
    for identity in Identity::ALL {
        let cases = polylab_core::modecheck::standard_cases(identity.branch());
        for (m, n) in cases {
            let lib = library(m, n);
            ensure(lib.len() >= MIN_LIBRARY, format!("library for m={m} n={n} too small"))?;
            let f = check_family(identity, &lib, 1.0).map_err(|e| e.to_string())?;
            ensure(
                f.pass && f.feasible_c > 0.0,
                format!("{} m={m} n={n}: C={} worst {}", identity.name(), f.feasible_c, f.worst_member),
            )?;
            worst_scale = worst_scale.max(f.max_scale_deviation);
            families += 1;
        }
    }
    let mut worst_fft: f64 = 0.0;
    for (m, n) in [(1, 3), (2, 3), (2, 5), (3, 5)] {
        for v in library(m, n) {
            let a = lhs_energy(&v, |_| 1.0, &[]).map_err(|e| e.to_string())?;
            let b = plancherel_energy(&v, PLANCHEREL_SAMPLES).map_err(|e| e.to_string())?;
            let rel = (a - b).abs() / a.abs().max(f64::MIN_POSITIVE);
            ensure(rel < PLANCHEREL_TOL, format!("Plancherel m={m} n={n} {}: rel {rel:e}", v.label))?;
            worst_fft = worst_fft.max(rel);
        }
    }
    Ok(format!("{families} families; scale deviation {worst_scale:.1e}; Plancherel rel {worst_fft:.1e}"))
}

fn green_exponents() -> Outcome {
    let mut notes = vec![];
    for ratio in [4.0, 16.0] {
        for (m, n) in [(2u32, 3u32), (3, 5)] {
            let s = ShellDomain::new(1.0, ratio, n).map_err(|e| e.to_string())?;
            let plan = SamplePlan::for_estimate(EstimateId::MixedDerivative, m, n);
            let f = fit_decay(&s, m, EstimateId::MixedDerivative, plan).map_err(|e| e.to_string())?;
            ensure(
                (f.slope + 1.0).abs() <= SLOPE_TOL,
                format!("mixed m={m} n={n} ratio {ratio}: slope {}", f.slope),
            )?;
            notes.push(format!("({m},{n})x{ratio}: {:.3}", f.slope));
        }
        let s = ShellDomain::new(1.0, ratio, 4).map_err(|e| e.to_string())?;
        let f = fit_decay(&s, 2, EstimateId::LogLaw, SamplePlan::default()).map_err(|e| e.to_string())?;
        ensure(f.r2 > LOG_LAW_R2, format!("log-law ratio {ratio}: R² {}", f.r2))?;
        notes.push(format!("log x{ratio}: R² {:.5}", f.r2));
    }
    let (a, b) = (1.0, 4.0);
    let shell = ShellDomain::new(a, b, 3).map_err(|e| e.to_string())?;
    let mut rng = StdRng::seed_from_u64(CLASSICAL_SEED);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < CLASSICAL_PAIRS {
        let r: f64 = rng.gen_range(1.1..3.9);
        let rho: f64 = rng.gen_range(1.1..3.9);
        if (r - rho).abs() < 0.2 {
            continue;
        }
        let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let ph: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let x = [r, 0.0, 0.0];
        let y = [rho * th.cos(), rho * th.sin() * ph.cos(), rho * th.sin() * ph.sin()];
        let want = common::shell_green(a, b, x, y);
        let got = assemble_green(&shell, 1, &x, &y, 64).map_err(|e| e.to_string())?.value;
        worst = worst.max((got - want).abs() / want.abs());
        pairs += 1;
    }
    ensure(worst < CLASSICAL_TOL, format!("classical shell kernel rel err {worst:e}"))?;
    notes.push(format!("classical rel {worst:.1e}"));
    Ok(notes.join("; "))
}

fn sharpness() -> Outcome {
    for (m, n) in [(2u32, 3u32), (3, 5)] {
        let r = counterexample(m, n, &default_radii()).map_err(|e| e.to_string())?;
        ensure(r.pass, format!("m={m} n={n}: {r:?}"))?;
        ensure(r.order_lambda.iter().all(|c| c.degree.is_none_or(|d| d == 0)), "order λ degree")?;
        ensure(r.order_lambda_plus_one.iter().any(|c| c.degree == Some(-1)), "order λ+1 degree")?;
    }
    // hand differentiation of |x| in three dimensions
    let r = counterexample(2, 3, &default_radii()).map_err(|e| e.to_string())?;
    let py = [0.6, 0.8, 0.0];
    let value = |s: &str| -> Result<f64, String> {
        let q = polylab_core::rational::parse_q(s).ok_or(format!("unparsable value {s}"))?;
        Ok(polylab_core::rational::to_f64(&q))
    };
    for c in &r.order_lambda {
        let want = common::grad_norm(c.index[0], &py);
        let got = value(&c.on_pythagorean)?;
        ensure((got - want).abs() < 1e-15, format!("∂_{:?}|x| on (3/5, 4/5, 0): {got} vs {want}", c.index))?;
    }
    for c in &r.order_lambda_plus_one {
        let want = common::hessian_norm(c.index[0], c.index[1], &py);
        let got = value(&c.on_pythagorean)?;
        ensure((got - want).abs() < 1e-15, format!("∂_{:?}|x| on (3/5, 4/5, 0): {got} vs {want}", c.index))?;
    }
    Ok("(2,3) and (3,5): bounded, ray-dependent, next order exactly degree -1".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "symbol identity", limit: Some(SYMBOL_LIMIT), run: symbol_identity },
        Criterion { id: 2, name: "spot values", limit: None, run: spot_values },
        Criterion { id: 3, name: "lower-bound sweeps", limit: Some(SWEEP_LIMIT), run: lower_bound_sweeps },
        Criterion { id: 4, name: "fundamental solutions", limit: None, run: fundamental_solutions },
        Criterion { id: 5, name: "positivity engine", limit: None, run: positivity },
        Criterion { id: 6, name: "root structure", limit: None, run: root_structure },
        Criterion { id: 7, name: "integral inequalities", limit: Some(INEQUALITY_LIMIT), run: integral_inequalities },
        Criterion { id: 8, name: "green exponents", limit: Some(GREEN_LIMIT), run: green_exponents },
        Criterion { id: 9, name: "sharpness", limit: None, run: sharpness },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let results: Vec<(u32, &str, Outcome, Duration, Option<Duration>)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .filter(|c| filter.is_empty() || filter.contains(&c.id))
            .map(|c| {
                s.spawn(move || {
                    let t = Instant::now();
                    let out = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
                    (c.id, c.name, out, t.elapsed(), c.limit)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (id, name, out, elapsed, limit) in results {
        let over = limit.is_some_and(|l| elapsed > l);
        let (tag, detail) = match (&out, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; exceeded {:?}", limit.unwrap())),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {id} [{name}]: {tag} ({:.1} s) {detail}", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
