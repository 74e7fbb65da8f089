mod common;

use polylab_core::modalgreen::fit::{applicable, fit_decay, growth_exponents, linear_fit, EstimateId, SamplePlan};
use polylab_core::modalgreen::zonal::zonal;
use polylab_core::modalgreen::{assemble_green, mode_green, ShellDomain};
use polylab_core::Error;
use proptest::prelude::*;

#[test]
fn swapping_points_keeps_the_value() {
    for (m, n) in [(1, 3), (2, 3), (2, 4), (3, 5)] {
        let s = ShellDomain::new(1.0, 4.0, n).unwrap();
        let mut x = vec![0.0; n as usize];
        let mut y = vec![0.0; n as usize];
        x[0] = 1.6;
        x[1] = 0.9;
        y[0] = 2.7;
        y[2 % n as usize] += 0.4;
        let a = assemble_green(&s, m, &x, &y, 64).unwrap().value;
        let b = assemble_green(&s, m, &y, &x, 64).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "m={m} n={n}: {a} vs {b}");
    }
}

#[test]
fn antipodal_points_use_the_minus_one_kernel() {
    let s = ShellDomain::new(1.0, 4.0, 3).unwrap();
    let x = [2.0, 0.0, 0.0];
    let y = [-3.0, 0.0, 0.0];
    let got = assemble_green(&s, 2, &x, &y, 64).unwrap();
    let (t, tau) = (-(2.0f64).ln(), -(3.0f64).ln());
    let mut sum = 0.0;
    for q in 0..got.modes {
        sum += mode_green(&s, 2, q, tau, 0).unwrap().value(0, 0, t) * zonal(q, 3, -1.0);
    }
    assert!((got.value - sum).abs() <= 1e-12 * sum.abs());
}

#[test]
fn classical_kernel_on_a_wide_shell() {
    let (a, b) = (1.0, 16.0);
    let s = ShellDomain::new(a, b, 3).unwrap();
    for (x, y) in [([2.0, 0.0, 0.0], [0.0, 5.0, 1.0]), ([1.5, 1.0, 0.0], [9.0, -3.0, 2.0])] {
        let want = common::shell_green(a, b, x, y);
        let got = assemble_green(&s, 1, &x, &y, 64).unwrap().value;
        assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
    }
}

#[test]
fn every_fit_for_small_orders_passes_on_the_wide_shell() {
    for (m, n) in [(1, 3), (2, 3), (2, 5), (2, 4), (1, 2), (2, 2)] {
        let s = ShellDomain::new(1.0, 16.0, n).unwrap();
        for e in applicable(m, n) {
            let f = fit_decay(&s, m, e, SamplePlan::for_estimate(e, m, n)).unwrap();
            assert!(f.pass, "m={m} n={n} {}: slope {} r2 {}", e.name(), f.slope, f.r2);
            assert!(f.samples.len() >= 8);
        }
    }
}

#[test]
fn wrong_parity_is_rejected() {
    let s = ShellDomain::new(1.0, 4.0, 4).unwrap();
    assert!(matches!(fit_decay(&s, 2, EstimateId::MixedDerivative, SamplePlan::default()), Err(Error::Parity(_))));
    let s = ShellDomain::new(1.0, 4.0, 3).unwrap();
    assert!(matches!(fit_decay(&s, 2, EstimateId::LogLaw, SamplePlan::default()), Err(Error::Parity(_))));
    assert!(matches!(growth_exponents(2, 4, 3), Err(Error::Parity(_))));
}

#[test]
fn inversion_pairs_growth_and_decay() {
    for (m, n) in [(2, 3), (3, 5), (2, 5)] {
        let g = growth_exponents(m, n, 3).unwrap();
        assert!(g.pass, "m={m} n={n}: {g:?}");
        for mode in &g.modes {
            assert!((mode.kelvin_sum - (2.0 * m as f64 - n as f64)).abs() < 1e-2);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_laws(slope in -3.0f64..3.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (0..25).map(|i| (1e-3f64 * 10f64.powf(i as f64 / 12.0)).ln()).collect();
        let y: Vec<f64> = x.iter().map(|l| c.ln() + slope * l).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        prop_assert!((s - slope).abs() < 1e-10);
        prop_assert!((i - c.ln()).abs() < 1e-9);
        prop_assert!(r2 > 1.0 - 1e-12 || slope.abs() < 1e-6);
    }

    #[test]
    fn mode_kernels_are_reciprocal(q in 0u32..12, t in -1.33f64..-0.05, tau in -1.33f64..-0.05) {
        let s = ShellDomain::new(1.0, 4.0, 5).unwrap();
        let a = mode_green(&s, 2, q, tau, 0).unwrap().value(0, 0, t);
        let b = mode_green(&s, 2, q, t, 0).unwrap().value(0, 0, tau);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12));
    }
}
