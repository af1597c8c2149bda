use std::sync::Arc;

use dnls::diagnostics::mass_in_window;
use dnls::fft::{forward_transform, inverse_transform};
use dnls::gauge::{ah_forward, ah_inverse};
use dnls::spectral::{grad_norm_sq, inner, l2_norm, l2_norm_sq, laplacian};
use dnls::{Complex64, Field, GridSpec};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: [u8; 32] = *b"damped-stark-nls-property-tests!";

fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &SEED))
}

#[derive(Clone, Debug)]
struct Bump {
    amp: (f64, f64),
    center: Vec<f64>,
    width: f64,
    k: Vec<f64>,
}

fn bumps(dim: usize, reach: f64) -> impl Strategy<Value = Vec<Bump>> {
    let one = (
        (-1.0..1.0f64, -1.0..1.0f64),
        prop::collection::vec(-reach..reach, dim),
        0.6..2.0f64,
        prop::collection::vec(-2.0..2.0f64, dim),
    )
        .prop_map(|(amp, center, width, k)| Bump { amp, center, width, k });
    prop::collection::vec(one, 1..4)
}

/// Sum of Gaussian packets; localized and band-limited on the test grids.
fn field(grid: &Arc<GridSpec>, bs: &[Bump]) -> Field {
    Field::from_fn(grid.clone(), |x| {
        bs.iter()
            .map(|b| {
                let r2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
                let ph: f64 = x.iter().zip(&b.k).map(|(a, k)| a * k).sum();
                Complex64::new(b.amp.0, b.amp.1) * Complex64::from_polar((-0.5 * r2 / (b.width * b.width)).exp(), ph)
            })
            .sum()
    })
}

fn white_noise(grid: &Arc<GridSpec>, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    Field::from_vec(grid.clone(), data).unwrap()
}

fn grids() -> Vec<Arc<GridSpec>> {
    vec![
        Arc::new(GridSpec::cubic(1, 20.0, 256).unwrap()),
        Arc::new(GridSpec::cubic(2, 10.0, 64).unwrap()),
        Arc::new(GridSpec::new(vec![6.0, 8.0, 5.0], vec![16, 32, 16]).unwrap()),
    ]
}

#[test]
fn parseval_and_round_trip_on_white_noise() {
    for (i, g) in grids().iter().enumerate() {
        for seed in 0..8 {
            let f = white_noise(g, 100 * i as u64 + seed);
            let norm = l2_norm_sq(&f);
            let s = forward_transform(&f).unwrap();
            assert!((s.l2_norm_sq() - norm).abs() <= 1e-12 * norm);
            let back = inverse_transform(&s);
            assert!(l2_norm(&back.sub(&f).unwrap()) <= 1e-12 * norm.sqrt());
        }
    }
}

#[test]
fn laplacian_is_self_adjoint_and_matches_gradient() {
    for (i, g) in grids().iter().enumerate() {
        for seed in 0..6 {
            let f = white_noise(g, 7 + 31 * i as u64 + seed);
            let h = white_noise(g, 1000 + 31 * i as u64 + seed);
            let lhs = inner(&laplacian(&f).unwrap(), &h).unwrap();
            let rhs = inner(&f, &laplacian(&h).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * l2_norm(&f) * l2_norm(&h));
        }
    }
    let mut r = runner(24);
    let g = Arc::new(GridSpec::cubic(2, 10.0, 64).unwrap());
    r.run(&bumps(2, 4.0), |bs| {
        let f = field(&g, &bs);
        let gs = grad_norm_sq(&f).unwrap();
        let via_lap = -inner(&laplacian(&f).unwrap(), &f).unwrap().re;
        prop_assert!((gs - via_lap).abs() <= 1e-10 * gs.max(1e-300));
        Ok(())
    })
    .unwrap();
}

#[test]
fn avron_herbst_is_an_isometry_with_exact_inverse() {
    let mut r = runner(32);
    let g1 = Arc::new(GridSpec::cubic(1, 20.0, 256).unwrap());
    let strategy = (bumps(1, 6.0), 0.0..2.0f64, -0.8..0.8f64);
    r.run(&strategy, |(bs, t, e)| {
        let phi = field(&g1, &bs);
        let n = l2_norm(&phi);
        let u = ah_forward(&phi, t, &[e]);
        prop_assert!((l2_norm(&u) - n).abs() <= 1e-12 * n);
        let back = ah_inverse(&u, t, &[e]);
        prop_assert!(l2_norm(&back.sub(&phi).unwrap()) <= 1e-12 * n);
        let fwd = ah_forward(&ah_inverse(&phi, t, &[e]), t, &[e]);
        prop_assert!(l2_norm(&fwd.sub(&phi).unwrap()) <= 1e-12 * n);
        Ok(())
    })
    .unwrap();

    let g2 = Arc::new(GridSpec::cubic(2, 10.0, 64).unwrap());
    let strategy = (bumps(2, 3.0), 0.0..1.0f64, prop::collection::vec(-0.6..0.6f64, 2));
    r.run(&strategy, |(bs, t, e)| {
        let phi = field(&g2, &bs);
        let n = l2_norm(&phi);
        let back = ah_inverse(&ah_forward(&phi, t, &e), t, &e);
        prop_assert!(l2_norm(&back.sub(&phi).unwrap()) <= 1e-12 * n);
        Ok(())
    })
    .unwrap();
}

#[test]
fn gauge_gradient_stays_within_the_triangle_bounds() {
    let mut r = runner(32);
    let g = Arc::new(GridSpec::cubic(1, 20.0, 512).unwrap());
    let strategy = (bumps(1, 5.0), 0.0..1.5f64, -0.8..0.8f64);
    r.run(&strategy, |(bs, t, e)| {
        let phi = field(&g, &bs);
        let gp = grad_norm_sq(&phi).unwrap().sqrt();
        let gu = grad_norm_sq(&ah_forward(&phi, t, &[e])).unwrap().sqrt();
        let slack = t * e.abs() * l2_norm(&phi);
        let tol = 1e-9 * (gp + slack);
        prop_assert!(gu <= gp + slack + tol, "{gu} > {gp} + {slack}");
        prop_assert!(gu >= gp - slack - tol, "{gu} < {gp} - {slack}");
        Ok(())
    })
    .unwrap();
}

#[test]
fn window_mass_grows_with_radius() {
    let mut r = runner(16);
    let g = Arc::new(GridSpec::cubic(2, 8.0, 64).unwrap());
    let strategy = (bumps(2, 3.0), prop::collection::vec(-4.0..4.0f64, 2));
    r.run(&strategy, |(bs, c)| {
        let f = field(&g, &bs);
        let mut prev = 0.0;
        for i in 1..=40 {
            let m = mass_in_window(&f, &c, 0.3 * i as f64).unwrap().mass;
            prop_assert!(m >= prev);
            prev = m;
        }
        Ok(())
    })
    .unwrap();
}
