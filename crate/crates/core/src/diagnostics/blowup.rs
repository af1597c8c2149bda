//! Blow-up detection, rate fitting and the a priori bound on `T*`.
//!
//! Two models are fitted on the collapse window of `g(t) = ‖∇u(t)‖₂`:
//!
//! ```text
//! power:    g        = C (T − t)^{−γ}
//! log-log:  g²       = C · ln ln(1/(T − t)) / (T − t)
//! ```
//!
//! Both are fitted in `ln g`. For fixed `T` each model is linear in its
//! remaining parameters, so `T` is found by a one-dimensional search over
//! `ln(T − t_last)` (log-spaced scan followed by golden-section refinement),
//! with the linear parameters eliminated in closed form.

use serde::{Deserialize, Serialize};

use super::sample;
use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::propagator::PhysParams;
use crate::trajectory::{StopReason, TrajectoryRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupFitOptions {
    /// Collapse window: trailing samples with `g ≥ g_last / 10^decades`.
    pub window_decades: f64,
    pub min_points: usize,
    pub min_span_decades: f64,
    pub scan_points: usize,
}

impl Default for BlowupFitOptions {
    fn default() -> Self {
        Self { window_decades: 2.0, min_points: 20, min_span_decades: 1.0, scan_points: 400 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub blew_up: bool,
    pub t_star_est: f64,
    pub stop_reason: StopReason,
    pub rate_exponent: f64,
    /// RMS residual in `ln g` per degree of freedom.
    pub loglog_residual: f64,
    pub power_residual: f64,
    pub t_star_power: f64,
    pub t_star_loglog: f64,
    pub power_prefactor: f64,
    pub loglog_prefactor: f64,
    pub window_points: usize,
    pub window_decades: f64,
    pub last_time: f64,
    pub fit_reliable: bool,
}

impl BlowupReport {
    pub fn loglog_preferred(&self) -> bool {
        self.loglog_residual <= self.power_residual
    }
}

struct Fit {
    ssr: f64,
    coeffs: (f64, f64),
}

fn power_fit(s: &[f64], y: &[f64]) -> Fit {
    // y = c + γ·(−ln s)
    let x: Vec<f64> = s.iter().map(|v| -v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let gamma = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c = my - gamma * mx;
    let ssr = x.iter().zip(y).map(|(a, b)| (b - c - gamma * a).powi(2)).sum();
    Fit { ssr, coeffs: (c, gamma) }
}

fn loglog_fit(s: &[f64], y: &[f64]) -> Fit {
    // y = ½ ln C + ½ ln(ln ln(1/s)/s), defined for s < 1/e.
    if s.iter().any(|&v| !(v < (-1.0f64).exp())) {
        return Fit { ssr: f64::INFINITY, coeffs: (f64::NAN, f64::NAN) };
    }
    let shape: Vec<f64> = s.iter().map(|v| 0.5 * ((1.0 / v).ln().ln() / v).ln()).collect();
    let n = y.len() as f64;
    let half_ln_c = y.iter().zip(&shape).map(|(a, b)| a - b).sum::<f64>() / n;
    let ssr = y.iter().zip(&shape).map(|(a, b)| (a - b - half_ln_c).powi(2)).sum();
    Fit { ssr, coeffs: ((2.0 * half_ln_c).exp(), f64::NAN) }
}

/// Minimizes `ssr(T)` over `T = t_last + δ` on a log grid of `δ`.
fn search_t<F: Fn(&[f64]) -> Fit>(t: &[f64], scan: usize, fit: F) -> (f64, Fit) {
    let t_last = *t.last().expect("nonempty");
    let span = (t_last - t[0]).max(1e-300);
    let floor = 64.0 * f64::EPSILON * t_last.abs().max(1.0);
    let (lo, hi) = ((span * 1e-12).max(floor).ln(), (span * 10.0).max(2.0 * floor).ln());
    let eval = |ld: f64| {
        let tt = t_last + ld.exp();
        let s: Vec<f64> = t.iter().map(|v| tt - v).collect();
        let f = fit(&s);
        if f.ssr.is_nan() {
            Fit { ssr: f64::INFINITY, ..f }
        } else {
            f
        }
    };
    let grid: Vec<f64> = (0..scan).map(|i| lo + (hi - lo) * i as f64 / (scan - 1) as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| eval(g).ssr).collect();
    let best = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty scan");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(scan - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c).ssr, eval(d).ssr);
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c).ssr;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d).ssr;
        }
    }
    let mut ld = 0.5 * (a + b);
    if vals[best] < eval(ld).ssr {
        ld = grid[best];
    }
    (t_last + ld.exp(), eval(ld))
}

/// Fits both models to `(t_i, g_i)`; `stop` is the stop reason of the run.
pub fn fit_series(t: &[f64], g: &[f64], stop: StopReason, opts: &BlowupFitOptions) -> Result<BlowupReport> {
    if t.len() != g.len() || t.is_empty() {
        return Err(DnlsError::InsufficientData("time and gradient series must be nonempty and aligned".into()));
    }
    let g_last = *g.last().expect("nonempty");
    let last_time = *t.last().expect("nonempty");
    let cut = g_last / 10f64.powf(opts.window_decades);
    let mut start = t.len() - 1;
    while start > 0 && g[start - 1] >= cut && t[start - 1] < t[start] {
        start -= 1;
    }
    let (tw, gw) = (&t[start..], &g[start..]);
    let m = tw.len();
    let g_min = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let span = (g_last / gw.iter().cloned().fold(f64::INFINITY, f64::min)).log10();
    let grew = g_last >= 10.0 * g_min;
    let mut rep = BlowupReport {
        blew_up: stop.is_blowup() && grew,
        t_star_est: f64::NAN,
        stop_reason: stop,
        rate_exponent: f64::NAN,
        loglog_residual: f64::NAN,
        power_residual: f64::NAN,
        t_star_power: f64::NAN,
        t_star_loglog: f64::NAN,
        power_prefactor: f64::NAN,
        loglog_prefactor: f64::NAN,
        window_points: m,
        window_decades: span,
        last_time,
        fit_reliable: m >= opts.min_points && span >= opts.min_span_decades,
    };
    if m < 4 || !grew {
        rep.fit_reliable = false;
        return Ok(rep);
    }
    let y: Vec<f64> = gw.iter().map(|v| v.ln()).collect();
    let (tp, fp) = search_t(tw, opts.scan_points, |s| power_fit(s, &y));
    let (tl, fl) = search_t(tw, opts.scan_points, |s| loglog_fit(s, &y));
    rep.t_star_power = tp;
    rep.t_star_loglog = tl;
    rep.rate_exponent = fp.coeffs.1;
    rep.power_prefactor = fp.coeffs.0.exp();
    rep.loglog_prefactor = fl.coeffs.0;
    rep.power_residual = (fp.ssr / (m - 3) as f64).sqrt();
    rep.loglog_residual = (fl.ssr / (m - 2) as f64).sqrt();
    rep.t_star_est = if rep.loglog_residual <= rep.power_residual { tl } else { tp };
    Ok(rep)
}

/// Fits the gradient history of a trajectory.
pub fn detect_blowup_and_fit(traj: &TrajectoryRecord) -> Result<BlowupReport> {
    fit_series(&traj.times(), &traj.grad_norms(), traj.stop, &BlowupFitOptions::default())
}

/// `(1/a)·ln(‖u₀‖₂/‖Q‖₂)`, with both arguments L² norms.
pub fn t_star_upper_bound(mass0: f64, a: f64, threshold: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(DnlsError::InvalidParameter(format!("damping {a} must be positive")));
    }
    if !(mass0 > threshold) {
        return Err(DnlsError::NoBound { norm: mass0, threshold });
    }
    Ok((mass0 / threshold).ln() / a)
}

/// `𝓔_V(u₀) < ∫(E·x)|u₀|²`, equivalently `𝓔₀(u₀) < 0`.
pub fn blowup_sufficient_condition(u0: &Field, params: &PhysParams) -> Result<bool> {
    let s = sample(u0, 0.0, params)?;
    Ok(s.ev - s.stark_moment < 0.0)
}
