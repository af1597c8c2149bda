use dnls::diagnostics::{fit_series, BlowupFitOptions};
use dnls::StopReason;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn log_spaced(t_star: f64, s_max: f64, s_min: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let e = s_max.log10() + (s_min.log10() - s_max.log10()) * i as f64 / (n - 1) as f64;
            t_star - 10f64.powf(e)
        })
        .collect()
}

fn loglog_data(t_star: f64, c: f64, noise: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let t = log_spaced(t_star, 1e-3, 1e-9, 160);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = t
        .iter()
        .map(|&ti| {
            let s = t_star - ti;
            (c * (1.0 / s).ln().ln() / s).sqrt() * (1.0 + noise * gaussian(&mut rng))
        })
        .collect();
    (t, g)
}

#[test]
fn recovers_manufactured_loglog_collapse() {
    for seed in 0..5 {
        let (t, g) = loglog_data(0.7, 2.5, 0.01, seed);
        let r = fit_series(&t, &g, StopReason::GradientThreshold, &BlowupFitOptions::default()).unwrap();
        assert!(r.blew_up && r.fit_reliable);
        assert!((r.t_star_est - 0.7).abs() < 1e-3, "seed {seed}: T* = {}", r.t_star_est);
        assert!((r.rate_exponent - 0.5).abs() < 0.03, "seed {seed}: gamma = {}", r.rate_exponent);
        assert!((r.loglog_prefactor - 2.5).abs() < 0.1, "seed {seed}: C = {}", r.loglog_prefactor);
    }
    let (t, g) = loglog_data(0.7, 2.5, 0.0, 0);
    let r = fit_series(&t, &g, StopReason::GradientThreshold, &BlowupFitOptions::default()).unwrap();
    assert!(r.loglog_residual < 1e-6 && r.loglog_residual < r.power_residual);
    assert!((r.t_star_loglog - 0.7).abs() < 1e-12);
}

#[test]
fn recovers_manufactured_power_collapse() {
    let t = log_spaced(1.3, 1e-2, 1e-7, 120);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g: Vec<f64> = t.iter().map(|&ti| 4.0 * (1.3 - ti).powf(-0.6) * (1.0 + 0.01 * gaussian(&mut rng))).collect();
    let r = fit_series(&t, &g, StopReason::SpectralFill, &BlowupFitOptions::default()).unwrap();
    assert!((r.rate_exponent - 0.6).abs() < 0.01, "{}", r.rate_exponent);
    assert!((r.t_star_power - 1.3).abs() < 1e-6);
    assert!(r.power_residual <= r.loglog_residual);
}

#[test]
fn short_windows_are_flagged_unreliable() {
    let t = log_spaced(1.0, 1e-2, 1e-3, 12);
    let g: Vec<f64> = t.iter().map(|&ti| (1.0 - ti).powf(-0.5)).collect();
    let r = fit_series(&t, &g, StopReason::GradientThreshold, &BlowupFitOptions::default()).unwrap();
    assert!(!r.fit_reliable);
    assert!(fit_series(&[], &[], StopReason::Completed, &BlowupFitOptions::default()).is_err());
}
