//! Multi-run experiments built on [`simulate`].

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use super::config::{InitialRecipe, ScenarioConfig};
use super::initial::build_initial;
use super::run::{simulate, Outcome};
use crate::diagnostics::blowup_sufficient_condition;
use crate::error::{DnlsError, Result};
use crate::evolve::{evolve, DiagnosticHooks, StepController};
use crate::field::Field;
use crate::gauge::{ah_forward, ah_inverse};
use crate::grid::GridSpec;
use crate::ground_state::ground_state_on;
use crate::propagator::{Backend, PhysParams, SimState};
use crate::spectral::{l2_norm, resample};
use crate::trajectory::StopReason;

/// One classified run of a scan or bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe {
    pub value: f64,
    pub outcome: Outcome,
    pub stop: StopReason,
    pub t_last: f64,
    pub growth: f64,
    pub t_star_est: Option<f64>,
    pub t_star_bound: Option<f64>,
    pub bound_ok: Option<bool>,
}

pub fn probes_csv(name: &str, probes: &[Probe]) -> String {
    let mut s = format!("{name},outcome,stop_reason,t_last,growth,T_star_est,T_star_bound,bound_ok\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in probes {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.value,
            p.outcome,
            p.stop,
            p.t_last,
            p.growth,
            cell(p.t_star_est),
            cell(p.t_star_bound),
            p.bound_ok.map(|b| b.to_string()).unwrap_or_default()
        );
    }
    s
}

fn probe(cfg: &ScenarioConfig, value: f64) -> Result<Probe> {
    let sim = simulate(cfg)?;
    let blew = sim.outcome == Outcome::BlowUp;
    Ok(Probe {
        value,
        outcome: sim.outcome,
        stop: sim.trajectory.stop,
        t_last: sim.t_last(),
        growth: sim.growth(),
        t_star_est: blew.then_some(sim.blowup.t_star_est),
        t_star_bound: sim.t_star_bound,
        bound_ok: sim.bound_satisfied(),
    })
}

fn with_damping(base: &ScenarioConfig, a: f64, t_cap: f64) -> ScenarioConfig {
    let mut c = base.clone();
    c.physics.damping = a;
    c.t_end = t_cap;
    c.id = format!("{}_a{a}", base.id);
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionSpec {
    pub a_lo: f64,
    pub a_hi: f64,
    pub t_cap: f64,
    /// Target bracket width.
    pub resolution: f64,
    /// Largest number of bisection runs after the two endpoints.
    pub runs_budget: usize,
    /// Additional damping values classified alongside the endpoints.
    pub extra_probes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectionReport {
    pub a_lo: f64,
    pub a_hi: f64,
    pub converged: bool,
    /// All probes sorted by damping.
    pub probes: Vec<Probe>,
    /// Every probe below the bracket blew up and every probe above it survived.
    pub monotone: bool,
    pub all_below_blow_up: bool,
}

impl BisectionReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "bracket [{}, {}] width {:.3e}{}\n",
            self.a_lo,
            self.a_hi,
            self.a_hi - self.a_lo,
            if self.converged { "" } else { " (budget exhausted before resolution)" }
        );
        let _ = writeln!(s, "all tested a below the bracket blow up: {}", self.all_below_blow_up);
        let _ = writeln!(s, "monotone outcome pattern: {}", self.monotone);
        for p in &self.probes {
            let _ = writeln!(s, "  a = {:<12} {:<10} t = {:.6} growth {:.3e}", p.value, p.outcome, p.t_last, p.growth);
        }
        s
    }
}

/// Bisects the damping between blow-up before `t_cap` and survival to it.
pub fn a_star_bisection(base: &ScenarioConfig, spec: &BisectionSpec) -> Result<BisectionReport> {
    if !(0.0 <= spec.a_lo && spec.a_lo < spec.a_hi) || !(spec.resolution > 0.0) || !(spec.t_cap > 0.0) {
        return Err(DnlsError::InvalidParameter(format!(
            "need 0 ≤ a_lo < a_hi, positive resolution and t_cap, got [{}, {}], {}, {}",
            spec.a_lo, spec.a_hi, spec.resolution, spec.t_cap
        )));
    }
    let grid = base.grid.build()?;
    let u0 = build_initial(&base.initial, &grid)?;
    if !blowup_sufficient_condition(&u0, &base.params()?)? {
        return Err(DnlsError::Precondition("initial data must have negative energy".into()));
    }
    let mut first: Vec<f64> = vec![spec.a_lo, spec.a_hi];
    first.extend(spec.extra_probes.iter().copied().filter(|a| *a >= 0.0));
    let mut probes: Vec<Probe> = first
        .par_iter()
        .map(|&a| probe(&with_damping(base, a, spec.t_cap), a))
        .collect::<Result<_>>()?;
    let (lo, hi) = (&probes[0], &probes[1]);
    if lo.outcome != Outcome::BlowUp || hi.outcome != Outcome::Global {
        return Err(DnlsError::Bracket(format!(
            "no sign change: a = {} gives {}, a = {} gives {}",
            spec.a_lo, lo.outcome, spec.a_hi, hi.outcome
        )));
    }
    let (mut a_lo, mut a_hi) = (spec.a_lo, spec.a_hi);
    let mut runs = 0;
    while a_hi - a_lo > spec.resolution && runs < spec.runs_budget {
        let mid = 0.5 * (a_lo + a_hi);
        let p = probe(&with_damping(base, mid, spec.t_cap), mid)?;
        match p.outcome {
            Outcome::BlowUp => a_lo = mid,
            Outcome::Global => a_hi = mid,
            Outcome::Unresolved => {
                return Err(DnlsError::Bracket(format!("probe at a = {mid} stopped with {}", p.stop)));
            }
        }
        probes.push(p);
        runs += 1;
    }
    probes.sort_by(|x, y| x.value.total_cmp(&y.value));
    let all_below_blow_up = probes.iter().filter(|p| p.value <= a_lo).all(|p| p.outcome == Outcome::BlowUp);
    let above_survive = probes.iter().filter(|p| p.value >= a_hi).all(|p| p.outcome == Outcome::Global);
    Ok(BisectionReport {
        a_lo,
        a_hi,
        converged: a_hi - a_lo <= spec.resolution,
        probes,
        monotone: all_below_blow_up && above_survive,
        all_below_blow_up,
    })
}

/// Replaces the amplitude of a scalable recipe.
pub fn with_amplitude(base: &ScenarioConfig, c: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match &mut cfg.initial {
        InitialRecipe::ScaledGroundState { amplitude }
        | InitialRecipe::ChirpedGroundState { amplitude, .. }
        | InitialRecipe::Gaussian { amplitude, .. } => *amplitude = c,
        other => {
            return Err(DnlsError::Config(format!("recipe {other:?} has no amplitude to scan")));
        }
    }
    cfg.id = format!("{}_c{c}", base.id);
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<Probe>,
    pub warnings: Vec<String>,
}

/// Classifies `c·(recipe)` for every `c`, keeping the base physics.
pub fn threshold_scan(base: &ScenarioConfig, cs: &[f64]) -> Result<ThresholdScan> {
    if cs.is_empty() {
        return Err(DnlsError::InvalidParameter("empty amplitude list".into()));
    }
    ground_state_on(&base.grid.build()?)?;
    let cfgs: Vec<ScenarioConfig> = cs.iter().map(|&c| with_amplitude(base, c)).collect::<Result<_>>()?;
    let mut rows: Vec<Probe> =
        cfgs.par_iter().zip(cs.par_iter()).map(|(cfg, &c)| probe(cfg, c)).collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut warnings = Vec::new();
    if let Some(first_blow) = rows.iter().find(|r| r.outcome != Outcome::Global) {
        for r in rows.iter().filter(|r| r.value > first_blow.value && r.outcome == Outcome::Global) {
            warnings.push(format!(
                "resolution warning: c = {} is global but c = {} is {}",
                r.value, first_blow.value, first_blow.outcome
            ));
        }
    }
    for r in &rows {
        if r.bound_ok == Some(false) {
            warnings.push(format!("c = {}: T* estimate {:?} exceeds the bound {:?}", r.value, r.t_star_est, r.t_star_bound));
        }
    }
    Ok(ThresholdScan { rows, warnings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    /// `(dt, relative L² error against the dt_min/8 run)`.
    pub temporal: Vec<(f64, f64)>,
    /// Observed orders between consecutive entries of `temporal`.
    pub temporal_orders: Vec<f64>,
    /// `(N, relative L² error against the reference grid)`.
    pub spatial: Vec<(usize, f64)>,
    /// Error ratios between consecutive entries of `spatial`.
    pub spatial_ratios: Vec<f64>,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,parameter,error,ratio_or_order\n");
        for (i, (dt, e)) in self.temporal.iter().enumerate() {
            let o = if i == 0 { String::new() } else { self.temporal_orders[i - 1].to_string() };
            let _ = writeln!(s, "temporal,{dt},{e},{o}");
        }
        for (i, (n, e)) in self.spatial.iter().enumerate() {
            let r = if i == 0 { String::new() } else { self.spatial_ratios[i - 1].to_string() };
            let _ = writeln!(s, "spatial,{n},{e},{r}");
        }
        s
    }
}

fn final_field(cfg: &ScenarioConfig, grid: &Arc<GridSpec>, dt: f64) -> Result<Field> {
    let u0 = build_initial(&cfg.initial, grid)?;
    let state = SimState::new(u0, cfg.params()?, cfg.backend())?;
    let mut ctrl = StepController::fixed(dt);
    ctrl.grad_stop = cfg.controller.grad_stop;
    let mut hooks = DiagnosticHooks::every(cfg.t_end);
    let (s, rec) = evolve(state, cfg.t_end, &ctrl, &mut hooks)?;
    if rec.stop != StopReason::Completed {
        return Err(DnlsError::StudyAborted(format!(
            "run with dt = {dt} on {:?} points stopped with {} at t = {}",
            grid.points(),
            rec.stop,
            s.t
        )));
    }
    Ok(s.physical_field())
}

fn rel_error(u: &Field, reference: &Field) -> Result<f64> {
    Ok(l2_norm(&u.sub(reference)?) / l2_norm(reference))
}

/// Temporal study on the base grid with fixed steps `dts`; spatial study
/// with step `controller.dt0` on the grids `ns` against `n_ref` points.
pub fn convergence_study(cfg: &ScenarioConfig, dts: &[f64], ns: &[usize], n_ref: usize) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let mut temporal = Vec::new();
    if !dts.is_empty() {
        let dt_ref = dts.iter().cloned().fold(f64::INFINITY, f64::min) / 8.0;
        let all: Vec<f64> = std::iter::once(dt_ref).chain(dts.iter().copied()).collect();
        let fields: Vec<Field> = all.par_iter().map(|&dt| final_field(cfg, &grid, dt)).collect::<Result<_>>()?;
        for (dt, f) in dts.iter().zip(&fields[1..]) {
            temporal.push((*dt, rel_error(f, &fields[0])?));
        }
    }
    let temporal_orders = temporal
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect();
    let mut spatial = Vec::new();
    if !ns.is_empty() {
        let mk = |n: usize| -> Result<Arc<GridSpec>> {
            let mut g = cfg.grid.clone();
            g.points = n;
            g.build()
        };
        let dt = cfg.controller.dt0;
        let all: Vec<usize> = std::iter::once(n_ref).chain(ns.iter().copied()).collect();
        let fields: Vec<Field> =
            all.par_iter().map(|&n| final_field(cfg, &mk(n)?, dt)).collect::<Result<_>>()?;
        for (n, f) in ns.iter().zip(&fields[1..]) {
            let reference = resample(&fields[0], f.grid_arc())?;
            spatial.push((*n, rel_error(f, &reference)?));
        }
    }
    let spatial_ratios = spatial.windows(2).map(|w| w[0].1 / w[1].1).collect();
    Ok(ConvergenceReport { temporal, temporal_orders, spatial, spatial_ratios })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhEquivalenceReport {
    pub t: f64,
    /// `‖ah_forward(φ(t)) − u_direct(t)‖₂`.
    pub l2_difference: f64,
    pub relative_difference: f64,
    /// `‖ah_inverse(ah_forward(u₀)) − u₀‖₂ / ‖u₀‖₂` at time `t`.
    pub round_trip: f64,
    pub warnings: Vec<String>,
}

/// Evolves the Stark-free equation and transforms it, evolves the Stark
/// equation directly, both with fixed step `controller.dt0`, and compares.
pub fn ah_equivalence(cfg: &ScenarioConfig, t: f64) -> Result<AhEquivalenceReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let params = cfg.params()?;
    if !params.has_stark() {
        return Err(DnlsError::Precondition("equivalence needs a nonzero field".into()));
    }
    let u0 = build_initial(&cfg.initial, &grid)?;
    let free = PhysParams { stark: vec![0.0; params.dim], ..params.clone() };
    let ctrl = StepController::fixed(cfg.controller.dt0);
    let run = |p: PhysParams, backend: Backend| -> Result<(Field, Vec<String>)> {
        let mut hooks = DiagnosticHooks::every(t);
        let (s, rec) = evolve(SimState::new(u0.clone(), p, backend)?, t, &ctrl, &mut hooks)?;
        if rec.stop != StopReason::Completed {
            return Err(DnlsError::StudyAborted(format!("equivalence run stopped with {}", rec.stop)));
        }
        Ok((s.physical_field(), rec.warnings))
    };
    let (free_run, direct_run) = rayon::join(
        || run(free, Backend::GaugeFrame),
        || run(params.clone(), Backend::DirectPotential),
    );
    let (phi, mut warnings) = free_run?;
    let (direct, w) = direct_run?;
    warnings.extend(w);
    let gauge = ah_forward(&phi, t, &params.stark);
    let diff = l2_norm(&gauge.sub(&direct)?);
    let back = ah_inverse(&ah_forward(&u0, t, &params.stark), t, &params.stark);
    Ok(AhEquivalenceReport {
        t,
        l2_difference: diff,
        relative_difference: diff / l2_norm(&direct),
        round_trip: rel_error(&back, &u0)?,
        warnings,
    })
}
