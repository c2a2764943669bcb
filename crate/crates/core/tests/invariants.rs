//! Structural invariants over random parameters.

use fieldroad_core::csvio::{read_snapshots, road_profiles, write_snapshots};
use fieldroad_core::diagnostics::{estimate_speed, fit_trailing, track_profiles};
use fieldroad_core::discrete::build_grid;
use fieldroad_core::model::{ModelParams, ReactionSpec};
use fieldroad_core::simulate::{simulation_grid, SimConfig, State, Stepper};
use fieldroad_core::spectral::{principal_eigen_with, EigenOptions};
use fieldroad_core::steady::compute_steady;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(d_road: f64, mu: f64, nu: f64, width: f64) -> ModelParams {
    ModelParams::new(d_road, 1.0, mu, nu, 1.0, width).unwrap()
}

fn lambda(p: &ModelParams, spec: &ReactionSpec, nx: usize, ny: usize, alpha: f64) -> f64 {
    let grid = build_grid(p, nx, ny).unwrap();
    principal_eigen_with(p, spec, &grid, alpha, &EigenOptions::with_tol(1e-11), None)
        .unwrap()
        .lambda
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ordered_pairs_stay_ordered_and_bounded(
        d_road in 0.5f64..5.0,
        mu in 0.5f64..2.0,
        nu in 0.5f64..2.0,
        width in 2.0f64..6.0,
        amp in 0.0f64..0.8,
        seed in any::<u64>(),
    ) {
        let p = params(d_road, mu, nu, width);
        let spec = ReactionSpec::cosine(1.0, amp, 1.0);
        let grid = build_grid(&p, 8, 8).unwrap();
        let config = SimConfig { dt: 0.05, ..SimConfig::default() };
        let mut stepper = Stepper::new(&p, &spec, &grid, &config).unwrap();
        let (cap_u, cap_v) = p.carrying_capacity();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lo = State::zeros(&grid);
        let mut hi = State::zeros(&grid);
        for (l, h) in lo.u.iter_mut().zip(&mut hi.u) {
            *l = rng.gen_range(0.0..=cap_u);
            *h = rng.gen_range(*l..=cap_u);
        }
        for (l, h) in lo.v.iter_mut().zip(&mut hi.v) {
            *l = rng.gen_range(0.0..=cap_v);
            *h = rng.gen_range(*l..=cap_v);
        }
        for _ in 0..10 {
            stepper.advance(&mut lo).unwrap();
            stepper.advance(&mut hi).unwrap();
            prop_assert!(lo.le(&hi));
            for s in [&lo, &hi] {
                prop_assert!(s.u.iter().all(|u| (0.0..=cap_u).contains(u)));
                prop_assert!(s.v.iter().all(|v| (0.0..=cap_v).contains(v)));
            }
        }
    }

    #[test]
    fn lambda_is_even_in_alpha(alpha in 0.05f64..1.5, amp in 0.0f64..0.8, d_road in 0.5f64..5.0) {
        let p = params(d_road, 1.0, 1.0, 4.0);
        let spec = ReactionSpec::cosine(1.0, amp, 1.0);
        let plus = lambda(&p, &spec, 8, 12, alpha);
        let minus = lambda(&p, &spec, 8, 12, -alpha);
        prop_assert!((plus - minus).abs() <= 1e-8 * (1.0 + plus.abs()), "{plus} vs {minus}");
    }

    #[test]
    fn lambda_decreases_with_width(ny in 4usize..16, extra in 1usize..12, alpha in 0.0f64..1.0) {
        let dy = 0.25;
        let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
        let narrow = params(2.0, 1.0, 1.0, dy * ny as f64);
        let wide = params(2.0, 1.0, 1.0, dy * (ny + extra) as f64);
        let a = lambda(&narrow, &spec, 8, ny, alpha);
        let b = lambda(&wide, &spec, 8, ny + extra, alpha);
        prop_assert!(b < a + 1e-9, "lambda_R grew: {a} -> {b}");
    }

    #[test]
    fn steady_state_lies_in_the_invariant_region(
        d_road in 0.5f64..5.0,
        mu in 0.5f64..2.0,
        nu in 0.5f64..2.0,
        width in 3.0f64..8.0,
        amp in 0.0f64..0.8,
    ) {
        let p = params(d_road, mu, nu, width);
        let spec = ReactionSpec::cosine(1.0, amp, 1.0);
        let ny = (width / 0.25).round() as usize;
        let s = compute_steady(&p, &spec, &build_grid(&p, 8, ny).unwrap(), 1e-8).unwrap();
        let (cap_u, cap_v) = p.carrying_capacity();
        prop_assert!(s.u.iter().all(|u| (0.0..=cap_u + 1e-12).contains(u)));
        prop_assert!(s.v.iter().all(|v| (0.0..=cap_v + 1e-12).contains(v)));
        if s.persistent {
            prop_assert!(s.u.iter().all(|u| *u > 0.0));
            prop_assert!(s.residual < 1e-6, "residual {}", s.residual);
        }
    }

    #[test]
    fn snapshot_files_round_trip(
        seed in any::<u64>(),
        copies in 2usize..5,
        count in 1usize..4,
    ) {
        let p = params(1.0, 1.0, 1.0, 2.0);
        let grid = simulation_grid(&p, 4, 4, copies).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let snaps: Vec<State> = (0..count)
            .map(|k| {
                let mut s = State::zeros(&grid);
                s.t = 0.5 * k as f64;
                s.u.iter_mut().for_each(|u| *u = rng.gen_range(0.0..1.0));
                s.v.iter_mut().for_each(|v| *v = rng.gen_range(0.0..1.0));
                s
            })
            .collect();
        let mut buf = Vec::new();
        write_snapshots(&mut buf, &grid, &snaps).unwrap();
        let profiles = road_profiles(&read_snapshots(buf.as_slice()).unwrap()).unwrap();
        prop_assert_eq!(profiles.len(), count);
        for (prof, s) in profiles.iter().zip(&snaps) {
            prop_assert_eq!(prof.t, s.t);
            prop_assert_eq!(&prof.us, &s.u);
        }
    }

    #[test]
    fn trailing_fit_recovers_a_line(c in -3.0f64..3.0, x0 in -10.0f64..10.0, n in 20usize..80) {
        let ts: Vec<f64> = (0..n).map(|k| k as f64 * 0.3).collect();
        let xs: Vec<f64> = ts.iter().map(|t| x0 + c * t).collect();
        let fit = fit_trailing(&ts, &xs, 0.5).unwrap();
        prop_assert!((fit.speed - c).abs() < 1e-9);
    }
}

#[test]
fn translating_bump_gives_its_speed() {
    let c = 1.7;
    let xs: Vec<f64> = (0..2001).map(|k| -100.0 + 0.1 * k as f64).collect();
    let profiles: Vec<(f64, Vec<f64>)> = (0..=40)
        .map(|k| {
            let t = 0.5 * k as f64;
            let reach = 5.0 + c * t;
            let us = xs.iter().map(|x| 0.5 * ((x + reach).tanh() - (x - reach).tanh())).collect();
            (t, us)
        })
        .collect();
    let trace = track_profiles(profiles.iter().map(|(t, us)| (*t, xs.as_slice(), us.as_slice())), 0.5);
    assert_eq!(trace.times.len(), profiles.len());
    let est = estimate_speed(&trace, 0.5).unwrap();
    assert!((est.c_hat - c).abs() < 1e-3, "{}", est.c_hat);
    assert!(est.r2 > 0.999_999);
}
