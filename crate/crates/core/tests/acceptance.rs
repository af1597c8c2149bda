//! Acceptance checks for the laboratory, one line per criterion.
//!
//! Run with `cargo test -p dnls-core --test acceptance`. The process exits
//! nonzero when a criterion outside `KNOWN_RED` fails. Known failures still
//! print as FAIL.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use dnls::diagnostics::{check_conservation, check_virial, fit_series, BlowupFitOptions, LawId};
use dnls::ground_state::{closed_form_q1, default_grid, energy_of_ground_state, ground_state_on, petviashvili, PetviashviliOptions};
use dnls::harness::{
    a_star_bisection, ah_equivalence, convergence_study, run_scenario, simulate, sweep, BisectionSpec, Outcome,
    ScenarioConfig, Simulation, SweepAxis, SweepSpec,
};
use dnls::{evolve, Backend, Complex64, DiagnosticHooks, Field, GridSpec, PhysParams, SimState, StepController, StopReason};

/// Criterion 10: with `w = ‖∇u‖^{−1/2}` the window loses the radiated excess
/// mass faster than the core gains it, so the last windows decrease while
/// staying above `‖Q‖²`.
const KNOWN_RED: &[u32] = &[10];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    ScenarioConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn ground_state_oracle() -> Verdict {
    let start = Instant::now();
    let grid = Arc::new(GridSpec::cubic(1, 20.0, 1024).unwrap());
    let opts = PetviashviliOptions::for_dim(1);
    let gs = petviashvili(&grid, 1, opts.tol, opts.max_iter).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let x = grid.axis_coords(0);
    let linf = gs.q.data().iter().zip(&x).map(|(q, &x)| (q.re - closed_form_q1(x)).abs()).fold(0.0, f64::max);
    let mass_err = (gs.mass_sq - 3f64.sqrt() * std::f64::consts::PI / 2.0).abs();
    verdict(
        linf < 1e-8 && mass_err < 1e-8 && elapsed < 5.0,
        format!("L∞ {linf:.2e}, ‖Q‖² error {mass_err:.2e}, {:.1} ms", 1e3 * elapsed),
    )
}

fn pohozaev() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (dim, tol) in [(1, 1e-6), (2, 1e-4)] {
        let gs = ground_state_on(&Arc::new(default_grid(dim).unwrap())).unwrap();
        let e0 = energy_of_ground_state(&gs).abs() / gs.mass_sq;
        let poh = (gs.grad_sq - dim as f64 / 2.0 * gs.mass_sq).abs() / gs.mass_sq;
        pass &= e0 < tol && poh < tol;
        parts.push(format!("{dim}D |E₀|/‖Q‖² {e0:.2e}, Pohozaev {poh:.2e}"));
    }
    verdict(pass, parts.join("; "))
}

fn mass_law(sims: &[&Simulation]) -> Verdict {
    let mut worst_dev: f64 = 0.0;
    let mut worst_rate: f64 = 0.0;
    let mut missing = Vec::new();
    for s in sims {
        match s.laws.iter().find(|r| r.law == LawId::MassDecay) {
            Some(r) => {
                worst_dev = worst_dev.max(r.max_deviation);
                if let Some(f) = r.fitted {
                    worst_rate = worst_rate.max((f - 2.0 * s.config.physics.damping).abs());
                }
            }
            None => missing.push(s.config.id.clone()),
        }
    }
    verdict(
        missing.is_empty() && worst_dev <= 1e-12 && worst_rate <= 1e-10,
        format!("{} runs, max deviation {worst_dev:.2e}, max |rate − 2a| {worst_rate:.2e}", sims.len()),
    )
}

fn gauge_equivalence() -> Verdict {
    let start = Instant::now();
    let rep = ah_equivalence(&scenario("ah_equivalence.toml"), 1.0).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        rep.round_trip < 1e-12 && rep.l2_difference < 1e-6 && elapsed < 120.0,
        format!("round trip {:.2e}, L² difference {:.2e}, {elapsed:.1} s", rep.round_trip, rep.l2_difference),
    )
}

fn conservative_limit() -> Verdict {
    let g = Arc::new(GridSpec::cubic(1, 20.0, 512).unwrap());
    let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
    let u0 = Field::from_fn(g, |x| Complex64::from_polar(0.8 * (-0.5 * x[0] * x[0]).exp(), 0.5 * x[0]));
    let s = SimState::new(u0, params, Backend::GaugeFrame).unwrap();
    let mut hooks = DiagnosticHooks::every(1e-3);
    let (_, traj) = evolve(s, 1.0, &StepController::fixed(1e-4), &mut hooks).unwrap();
    let reports = check_conservation(&traj).unwrap();
    let dev = |law| reports.iter().find(|r| r.law == law).map_or(f64::INFINITY, |r| r.max_deviation);
    let (de, dp) = (dev(LawId::EnergyConservation), dev(LawId::MomentumConservation));
    let virial = check_virial(&traj).unwrap().max_deviation;
    verdict(
        de < 1e-8 && dp < 1e-8 && virial < 0.05,
        format!("ΔE₀ {de:.2e}, ΔP {dp:.2e}, virial {:.2}%", 100.0 * virial),
    )
}

fn strang_order() -> Verdict {
    let rep = convergence_study(&scenario("gaussian_convergence.toml"), &[0.02, 0.01, 0.005], &[32, 64, 128, 256], 1024).unwrap();
    let orders_ok = rep.temporal_orders.iter().all(|o| (1.9..=2.1).contains(o));
    let mut spatial_ok = true;
    for (w, &ratio) in rep.spatial.windows(2).zip(&rep.spatial_ratios) {
        if w[1].1 < 1e-11 {
            break;
        }
        spatial_ok &= ratio >= 10.0;
    }
    let orders: Vec<String> = rep.temporal_orders.iter().map(|o| format!("{o:.3}")).collect();
    let ratios: Vec<String> = rep.spatial_ratios.iter().map(|r| format!("{r:.1e}")).collect();
    verdict(
        orders_ok && spatial_ok,
        format!("orders [{}], spatial drops [{}]", orders.join(", "), ratios.join(", ")),
    )
}

fn bounded_by_running_median(sim: &Simulation) -> bool {
    let mut seen = Vec::new();
    for s in sim.trajectory.samples() {
        let g = s.grad_norm();
        seen.push(g);
        let mut sorted = seen.clone();
        sorted.sort_by(f64::total_cmp);
        if g > 3.0 * sorted[sorted.len() / 2] {
            return false;
        }
    }
    true
}

fn threshold_behavior(globals: &[&Simulation], collapse: &Simulation, elapsed: f64) -> Verdict {
    let mut pass = elapsed < 600.0;
    let mut parts = Vec::new();
    for s in globals {
        let bounded = bounded_by_running_median(s);
        pass &= s.outcome == Outcome::Global && s.t_last() >= 10.0 && bounded;
        parts.push(format!("{}: {} to t = {}, median bound {}", s.config.id, s.outcome, s.t_last(), bounded));
    }
    pass &= collapse.outcome == Outcome::BlowUp && collapse.growth() > 1e3;
    parts.push(format!("{}: {} growth {:.0}×", collapse.config.id, collapse.outcome, collapse.growth()));
    parts.push(format!("{elapsed:.0} s"));
    verdict(pass, parts.join("; "))
}

fn blowup_bound(sims: &[&Simulation], probes: &[dnls::harness::experiments::Probe]) -> Verdict {
    let mut checked = 0;
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for s in sims.iter().filter(|s| s.outcome == Outcome::BlowUp) {
        checked += 1;
        let bound = s.t_star_bound.unwrap_or(f64::NEG_INFINITY);
        worst = worst.max(s.blowup.t_star_est - bound);
        pass &= s.bound_satisfied() == Some(true);
    }
    for p in probes.iter().filter(|p| p.outcome == Outcome::BlowUp) {
        if let (Some(est), Some(bound)) = (p.t_star_est, p.t_star_bound) {
            checked += 1;
            worst = worst.max(est - bound);
            pass &= p.bound_ok == Some(true);
        }
    }
    verdict(pass && checked > 0, format!("{checked} blow-up runs with a bound, max T*_est − bound {worst:.3}"))
}

fn loglog_data(t_star: f64, c: f64, noise: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 160;
    let mut t = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let s = 10f64.powf(-3.0 - 6.0 * i as f64 / (n - 1) as f64);
        let z: f64 = StandardNormal.sample(&mut rng);
        t.push(t_star - s);
        g.push((c * (1.0 / s).ln().ln() / s).sqrt() * (1.0 + noise * z));
    }
    (t, g)
}

fn rate_fitting(collapse: &Simulation) -> Verdict {
    let mut worst_t: f64 = 0.0;
    let mut worst_gamma: f64 = 0.0;
    for seed in 0..5 {
        let (t, g) = loglog_data(0.7, 2.5, 0.01, seed);
        let r = fit_series(&t, &g, StopReason::GradientThreshold, &BlowupFitOptions::default()).unwrap();
        worst_t = worst_t.max((r.t_star_est - 0.7).abs());
        worst_gamma = worst_gamma.max((r.rate_exponent - 0.5).abs());
    }
    let b = &collapse.blowup;
    let real_ok = collapse.outcome == Outcome::BlowUp
        && (0.45..=0.65).contains(&b.rate_exponent)
        && b.loglog_residual <= b.power_residual;
    verdict(
        worst_t < 1e-3 && worst_gamma < 0.03 && real_ok,
        format!(
            "manufactured |ΔT*| {worst_t:.1e}, |Δγ| {worst_gamma:.3}; run γ {:.4}, log-log rms {:.3e} vs power rms {:.3e}",
            b.rate_exponent, b.loglog_residual, b.power_residual
        ),
    )
}

fn mass_concentration(collapse: &Simulation, conformal: &Simulation) -> Verdict {
    let q2 = collapse.threshold * collapse.threshold;
    let resolved: Vec<_> = collapse.concentration.iter().filter(|p| p.reliable).collect();
    let tail = &resolved[resolved.len().saturating_sub(10)..];
    let monotone = tail.len() == 10 && tail.windows(2).all(|w| w[1].mass >= w[0].mass);
    let last = tail.last().map_or(0.0, |p| p.mass) / q2;
    let first = tail.first().map_or(0.0, |p| p.mass) / q2;
    let pc = conformal.concentration.last().map_or(0.0, |p| p.mass) / (conformal.threshold * conformal.threshold);
    verdict(
        monotone && last >= 0.9 && pc >= 0.99,
        format!(
            "damped run last {} windows nondecreasing: {monotone} ({first:.4} → {last:.4} ‖Q‖²); final ≥ 0.9: {}; pseudo-conformal {pc:.5} ‖Q‖²",
            tail.len(),
            last >= 0.9
        ),
    )
}

fn bisection() -> (Verdict, Vec<dnls::harness::experiments::Probe>) {
    let spec = BisectionSpec {
        a_lo: 0.001,
        a_hi: 2.0,
        t_cap: 20.0,
        resolution: 0.01,
        runs_budget: 16,
        extra_probes: vec![0.0, 0.00025, 0.0005],
    };
    match a_star_bisection(&scenario("bisection.toml"), &spec) {
        Ok(rep) => {
            let at = |a: f64| rep.probes.iter().find(|p| p.value == a).map(|p| p.outcome);
            let ends = at(rep.a_lo) == Some(Outcome::BlowUp) && at(rep.a_hi) == Some(Outcome::Global);
            let v = verdict(
                ends && rep.monotone && rep.all_below_blow_up,
                format!(
                    "a* in [{:.5}, {:.5}] after {} runs, monotone {}, all below blow up {}",
                    rep.a_lo,
                    rep.a_hi,
                    rep.probes.len(),
                    rep.monotone,
                    rep.all_below_blow_up
                ),
            );
            (v, rep.probes)
        }
        Err(e) => (verdict(false, format!("bisection failed: {e}")), Vec::new()),
    }
}

fn determinism(cfg: &ScenarioConfig) -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (_, da) = run_scenario(cfg, a.path()).unwrap();
    let (_, db) = run_scenario(cfg, b.path()).unwrap();
    let runs_equal = csv_files(&da) == csv_files(&db);

    let mut base = cfg.clone();
    base.t_end = 2.0;
    let values = vec![0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15];
    let (s1, s8) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    sweep(&SweepSpec { axis: SweepAxis::Amplitude, values: values.clone(), parallelism: 1 }, &base, s1.path()).unwrap();
    sweep(&SweepSpec { axis: SweepAxis::Amplitude, values, parallelism: 8 }, &base, s8.path()).unwrap();
    let (f1, f8) = (csv_files(s1.path()), csv_files(s8.path()));
    let sweep_equal = f1 == f8;
    verdict(
        runs_equal && sweep_equal,
        format!("rerun identical {runs_equal}; sweep of {} CSVs identical at parallelism 1 and 8 {sweep_equal}", f1.len()),
    )
}

fn main() -> ExitCode {
    let mut lines: Vec<(u32, &str, Verdict)> = Vec::new();
    lines.push((1, "ground-state oracle", ground_state_oracle()));
    lines.push((2, "Pohozaev and energy identities", pohozaev()));

    let start = Instant::now();
    let threshold = scenario("threshold.toml");
    let mut below = threshold.clone();
    below.id = "threshold_c0.9".into();
    below.initial = dnls::harness::InitialRecipe::ScaledGroundState { amplitude: 0.9 };
    let sim_below = simulate(&below).unwrap();
    let sim_at = simulate(&threshold).unwrap();
    let collapse = simulate(&scenario("negative_energy.toml")).unwrap();
    let threshold_time = start.elapsed().as_secs_f64();
    let conformal = simulate(&scenario("pseudo_conformal.toml")).unwrap();

    let (bisect, probes) = bisection();
    let runs = [&sim_below, &sim_at, &collapse, &conformal];
    lines.push((3, "exact mass law", mass_law(&runs)));
    lines.push((4, "gauge transform and backend equivalence", gauge_equivalence()));
    lines.push((5, "conservative limit", conservative_limit()));
    lines.push((6, "Strang and spectral convergence", strang_order()));
    lines.push((7, "threshold behavior", threshold_behavior(&[&sim_below, &sim_at], &collapse, threshold_time)));
    lines.push((8, "blow-up time bound", blowup_bound(&runs, &probes)));
    lines.push((9, "rate fitting", rate_fitting(&collapse)));
    lines.push((10, "mass concentration", mass_concentration(&collapse, &conformal)));
    lines.push((11, "damping bisection", bisect));
    lines.push((12, "determinism", determinism(&threshold)));

    let mut failed = Vec::new();
    for (n, name, v) in &lines {
        if !v.pass {
            failed.push(*n);
        }
        println!("criterion {n:>2} {:<4} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    let unexpected: Vec<u32> = failed.iter().copied().filter(|n| !KNOWN_RED.contains(n)).collect();
    println!("{} of {} criteria pass; failing {failed:?}, known red {KNOWN_RED:?}", lines.len() - failed.len(), lines.len());
    for n in KNOWN_RED.iter().filter(|n| !failed.contains(n)) {
        println!("criterion {n} is listed as known red but passed");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
