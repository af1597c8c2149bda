//! Single scenario runs and their artifact bundles.
//!
//! A bundle directory holds
//!
//! ```text
//! config.toml          echo of the scenario, rerunnable as is
//! trajectory.csv       sampled functionals
//! laws.csv, laws.txt   law-check reports
//! blowup.csv/.txt      fit report (runs that stopped on collapse)
//! concentration.csv    window masses of the snapshots
//! snapshots/           binary fields and index.csv
//! plot/                one two-column file per functional
//! summary.csv          one row describing the outcome
//! ```

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::ScenarioConfig;
use super::initial::build_initial;
use crate::diagnostics::{
    check_conservation, check_energy_rate, check_mass_law, check_momentum_law, check_virial, concentration_series,
    detect_blowup_and_fit, law_reports_csv, law_reports_text, write_plot_data, BlowupReport, ConcentrationPoint,
    LawCheckReport,
};
use crate::error::{DnlsError, Result};
use crate::evolve::{evolve, DiagnosticHooks};
use crate::ground_state::threshold_mass;
use crate::propagator::SimState;
use crate::snapshot;
use crate::spectral::l2_norm;
use crate::trajectory::{StopReason, TrajectoryRecord};

/// Allowance added to the a priori `T*` bound when checking fitted times.
pub const T_STAR_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Reached `t_end` without a collapse stop.
    Global,
    BlowUp,
    /// Stopped for another reason (step floor, divergence, collapse stop
    /// without growth).
    Unresolved,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Global => "global",
            Self::BlowUp => "blow_up",
            Self::Unresolved => "unresolved",
        }
    }

    /// Process exit status: 0 global, 2 blow-up, 1 anything else.
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Global => 0,
            Self::BlowUp => 2,
            Self::Unresolved => 1,
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a run produced, in memory.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub config: ScenarioConfig,
    pub trajectory: TrajectoryRecord,
    pub blowup: BlowupReport,
    pub laws: Vec<LawCheckReport>,
    pub concentration: Vec<ConcentrationPoint>,
    pub outcome: Outcome,
    /// `‖Q‖₂` on the reference grid of the dimension.
    pub threshold: f64,
    pub initial_norm: f64,
    /// `(1/a)·ln(‖u₀‖/‖Q‖)` when it exists.
    pub t_star_bound: Option<f64>,
    pub warnings: Vec<String>,
}

impl Simulation {
    pub fn growth(&self) -> f64 {
        match (self.trajectory.first(), self.trajectory.last()) {
            (Some(a), Some(b)) => b.grad_norm() / a.grad_norm(),
            _ => f64::NAN,
        }
    }

    pub fn t_last(&self) -> f64 {
        self.trajectory.last().map_or(f64::NAN, |s| s.t)
    }

    /// `T_star_est ≤ bound + tolerance`; `None` without a blow-up or a bound.
    pub fn bound_satisfied(&self) -> Option<bool> {
        if self.outcome != Outcome::BlowUp {
            return None;
        }
        self.t_star_bound.map(|b| self.blowup.t_star_est <= b + T_STAR_TOLERANCE)
    }

    pub fn summary(&self) -> SummaryRow {
        let first = self.trajectory.first();
        let blew = self.outcome == Outcome::BlowUp;
        SummaryRow {
            id: self.config.id.clone(),
            outcome: self.outcome.as_str(),
            stop_reason: self.trajectory.stop.as_str(),
            t_last: self.t_last(),
            steps: self.trajectory.steps,
            samples: self.trajectory.rows.len(),
            norm_ratio: self.initial_norm / self.threshold,
            e0_initial: first.map_or(f64::NAN, |s| s.e0),
            ev_initial: first.map_or(f64::NAN, |s| s.ev),
            grad_initial: first.map_or(f64::NAN, |s| s.grad_norm()),
            grad_final: self.trajectory.last().map_or(f64::NAN, |s| s.grad_norm()),
            growth: self.growth(),
            t_star_est: blew.then_some(self.blowup.t_star_est),
            t_star_bound: self.t_star_bound,
            bound_ok: self.bound_satisfied(),
            rate_exponent: blew.then_some(self.blowup.rate_exponent),
            loglog_residual: blew.then_some(self.blowup.loglog_residual),
            power_residual: blew.then_some(self.blowup.power_residual),
            warnings: self.warnings.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub id: String,
    pub outcome: &'static str,
    pub stop_reason: &'static str,
    pub t_last: f64,
    pub steps: u64,
    pub samples: usize,
    pub norm_ratio: f64,
    pub e0_initial: f64,
    pub ev_initial: f64,
    pub grad_initial: f64,
    pub grad_final: f64,
    pub growth: f64,
    pub t_star_est: Option<f64>,
    pub t_star_bound: Option<f64>,
    pub bound_ok: Option<bool>,
    pub rate_exponent: Option<f64>,
    pub loglog_residual: Option<f64>,
    pub power_residual: Option<f64>,
    pub warnings: usize,
}

fn cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SummaryRow {
    pub const HEADER: [&'static str; 19] = [
        "id",
        "outcome",
        "stop_reason",
        "t_last",
        "steps",
        "samples",
        "norm_ratio",
        "E0_initial",
        "EV_initial",
        "grad_initial",
        "grad_final",
        "growth",
        "T_star_est",
        "T_star_bound",
        "bound_ok",
        "rate_exponent",
        "loglog_residual",
        "power_residual",
        "warnings",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.id.clone(),
            self.outcome.to_string(),
            self.stop_reason.to_string(),
            self.t_last.to_string(),
            self.steps.to_string(),
            self.samples.to_string(),
            self.norm_ratio.to_string(),
            self.e0_initial.to_string(),
            self.ev_initial.to_string(),
            self.grad_initial.to_string(),
            self.grad_final.to_string(),
            self.growth.to_string(),
            cell(self.t_star_est),
            cell(self.t_star_bound),
            cell(self.bound_ok),
            cell(self.rate_exponent),
            cell(self.loglog_residual),
            cell(self.power_residual),
            self.warnings.to_string(),
        ]
    }
}

fn classify(stop: StopReason, report: &BlowupReport) -> Outcome {
    match stop {
        StopReason::Completed => Outcome::Global,
        _ if report.blew_up => Outcome::BlowUp,
        _ => Outcome::Unresolved,
    }
}

fn law_reports(traj: &TrajectoryRecord, warnings: &mut Vec<String>) -> Vec<LawCheckReport> {
    let p = &traj.params;
    let mut out = Vec::new();
    let mut keep = |r: Result<Vec<LawCheckReport>>, name: &str| match r {
        Ok(v) => out.extend(v),
        Err(e) => warnings.push(format!("{name} check skipped: {e}")),
    };
    keep(check_mass_law(traj).map(|r| vec![r]), "mass");
    keep(check_energy_rate(traj, p), "energy rate");
    if p.has_stark() {
        keep(check_momentum_law(traj, p).map(|r| vec![r]), "momentum");
    }
    if p.damping == 0.0 {
        keep(check_conservation(traj), "conservation");
        if !p.has_stark() && p.nonlinear {
            keep(check_virial(traj).map(|r| vec![r]), "virial");
        }
    }
    out
}

/// Runs a scenario in memory.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Simulation> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    let params = cfg.params()?;
    let u0 = build_initial(&cfg.initial, &grid)?;
    let initial_norm = l2_norm(&u0);
    let threshold = threshold_mass(params.dim)?;
    let state = SimState::new(u0, params.clone(), cfg.backend())?;
    let s = &cfg.sampling;
    let mut hooks = DiagnosticHooks::every(s.every).with_snapshots(s.snapshot_every, s.snapshot_grad_ratio);
    hooks.sample_grad_ratio = s.grad_ratio;
    let (_, traj) = evolve(state, cfg.t_end, &cfg.controller, &mut hooks)?;

    let mut warnings = traj.warnings.clone();
    let blowup = detect_blowup_and_fit(&traj)?;
    let outcome = classify(traj.stop, &blowup);
    let laws = law_reports(&traj, &mut warnings);
    let concentration = concentration_series(&traj, s.window_constant)?;
    let t_star_bound = if params.damping > 0.0 && initial_norm > threshold {
        Some((initial_norm / threshold).ln() / params.damping)
    } else {
        None
    };
    if outcome == Outcome::BlowUp && !blowup.fit_reliable {
        warnings.push(format!(
            "collapse window has {} points over {:.2} decades; rate fit unreliable",
            blowup.window_points, blowup.window_decades
        ));
    }
    Ok(Simulation {
        config: cfg.clone(),
        trajectory: traj,
        blowup,
        laws,
        concentration,
        outcome,
        threshold,
        initial_norm,
        t_star_bound,
        warnings,
    })
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SummaryRow::HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

fn concentration_csv(points: &[ConcentrationPoint], threshold: f64) -> String {
    let mut s = String::from("t,grad_norm,w,mass,mass_over_threshold,reliable\n");
    let q2 = threshold * threshold;
    for p in points {
        let _ = writeln!(s, "{},{},{},{},{},{}", p.t, p.grad_norm, p.w, p.mass, p.mass / q2, p.reliable);
    }
    s
}

/// Writes every artifact of `sim` into `dir`.
pub fn write_bundle(sim: &Simulation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), sim.config.to_toml()?)?;
    sim.trajectory.write_csv(BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
    fs::write(dir.join("laws.csv"), law_reports_csv(&sim.laws)?)?;
    fs::write(dir.join("laws.txt"), law_reports_text(&sim.laws))?;
    let stop = sim.trajectory.stop;
    if stop.is_blowup() || stop == StopReason::UnderResolved {
        fs::write(dir.join("blowup.csv"), sim.blowup.to_csv())?;
        let mut text = sim.blowup.to_text();
        if let Some(b) = sim.t_star_bound {
            let _ = writeln!(text, "T* bound         {b:.9} (+{T_STAR_TOLERANCE})");
        }
        fs::write(dir.join("blowup.txt"), text)?;
    }
    fs::write(dir.join("concentration.csv"), concentration_csv(&sim.concentration, sim.threshold))?;
    if !sim.trajectory.snapshots.is_empty() {
        let sd = dir.join("snapshots");
        fs::create_dir_all(&sd)?;
        let mut index = String::from("file,t,grad_norm\n");
        for (i, snap) in sim.trajectory.snapshots.iter().enumerate() {
            let name = format!("snap_{i:05}.bin");
            snapshot::save(&sd.join(&name), &snap.field)?;
            let _ = writeln!(index, "{name},{},{}", snap.t, snap.grad_norm);
        }
        fs::write(sd.join("index.csv"), index)?;
    }
    write_plot_data(&dir.join("plot"), &sim.trajectory)?;
    fs::write(dir.join("summary.csv"), summary_csv(&[sim.summary()])?)?;
    if !sim.warnings.is_empty() {
        fs::write(dir.join("warnings.txt"), sim.warnings.join("\n") + "\n")?;
    }
    Ok(())
}

/// Bundle directory: `output_dir` if set, else `<root>/<id>`.
pub fn bundle_dir(cfg: &ScenarioConfig, root: &Path) -> PathBuf {
    cfg.output_dir.clone().unwrap_or_else(|| root.join(&cfg.id))
}

/// Runs a scenario and writes its bundle.
pub fn run_scenario(cfg: &ScenarioConfig, root: &Path) -> Result<(Simulation, PathBuf)> {
    let sim = simulate(cfg)?;
    let dir = bundle_dir(cfg, root);
    write_bundle(&sim, &dir).map_err(|e| match e {
        DnlsError::Io(io) => DnlsError::Io(std::io::Error::new(io.kind(), format!("{}: {io}", dir.display()))),
        other => other,
    })?;
    Ok((sim, dir))
}

/// Reads `config.toml`, `trajectory.csv` and the stop reason from
/// `summary.csv` of a bundle.
pub fn load_bundle(dir: &Path) -> Result<(ScenarioConfig, TrajectoryRecord)> {
    let cfg = ScenarioConfig::from_file(&dir.join("config.toml"))?;
    let mut summary = csv::Reader::from_path(dir.join("summary.csv"))?;
    let col = summary
        .headers()?
        .iter()
        .position(|h| h == "stop_reason")
        .ok_or_else(|| DnlsError::Format("summary.csv has no stop_reason column".into()))?;
    let stop: StopReason = match summary.records().next() {
        Some(rec) => rec?.get(col).unwrap_or_default().parse()?,
        None => return Err(DnlsError::Format("summary.csv has no rows".into())),
    };
    let file = File::open(dir.join("trajectory.csv"))?;
    let traj = TrajectoryRecord::read_csv(std::io::BufReader::new(file), cfg.params()?, cfg.backend(), stop)?;
    Ok((cfg, traj))
}

/// Law checks of a loaded trajectory, with the reasons for skipped checks.
pub fn check_laws(traj: &TrajectoryRecord) -> (Vec<LawCheckReport>, Vec<String>) {
    let mut warnings = Vec::new();
    let reports = law_reports(traj, &mut warnings);
    (reports, warnings)
}
