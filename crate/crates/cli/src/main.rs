//! `dnls`: command-line driver for scenario files.
//!
//! Exit status is 0 for a global run or a successful command, 2 when a run
//! stopped on a detected blow-up and 1 on any error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use dnls::diagnostics::{detect_blowup_and_fit, law_reports_csv, law_reports_text};
use dnls::ground_state::ground_state_on;
use dnls::harness::config::BackendName;
use dnls::harness::experiments::probes_csv;
use dnls::harness::{
    a_star_bisection, ah_equivalence, check_laws, convergence_study, load_bundle, output_root, run_scenario, sweep,
    threshold_scan, BisectionSpec, ScenarioConfig, SweepAxis, SweepSpec,
};
use dnls::{snapshot, DnlsError, GridSpec, Result};

#[derive(Parser)]
#[command(name = "dnls", version, about = "Damped Stark NLS laboratory")]
struct Cli {
    /// Output root; defaults to $DNLS_OUT, then ./runs.
    #[arg(long, global = true)]
    out_root: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state Q and print its report.
    GroundState {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value_t = 20.0)]
        half_width: f64,
        /// Write Q as a binary snapshot.
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Run one scenario and write its bundle.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a scenario for every value of one parameter.
    Sweep {
        config: PathBuf,
        /// One of c, a, E, N, dt.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Bisect the damping between blow-up and survival.
    BisectA {
        config: PathBuf,
        #[arg(long, default_value_t = 0.001)]
        a_lo: f64,
        #[arg(long, default_value_t = 2.0)]
        a_hi: f64,
        #[arg(long, default_value_t = 20.0)]
        t_cap: f64,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
        #[arg(long, default_value_t = 16)]
        budget: usize,
        /// Extra damping values to classify, e.g. 0.
        #[arg(long, value_delimiter = ',')]
        probe: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Classify the recipe for a list of amplitudes.
    Scan {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compare the gauge-frame and direct-potential solutions at time t.
    AhEquivalence {
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-run the law checks of an existing bundle.
    CheckLaws { bundle: PathBuf },
    /// Re-fit the gradient history of an existing bundle.
    FitBlowup { bundle: PathBuf },
    /// Temporal and spatial convergence study.
    Convergence {
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        dts: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 2048)]
        n_ref: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Command-line replacements for scenario fields.
#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_parser = parse_backend)]
    backend: Option<BackendName>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    stark: Option<Vec<f64>>,
    #[arg(long)]
    dt0: Option<f64>,
    #[arg(long)]
    cfl_const: Option<f64>,
    #[arg(long)]
    grad_stop: Option<f64>,
    #[arg(long)]
    sample_every: Option<f64>,
}

fn parse_backend(s: &str) -> std::result::Result<BackendName, String> {
    match s {
        "gauge_frame" => Ok(BackendName::GaugeFrame),
        "direct_potential" => Ok(BackendName::DirectPotential),
        _ => Err(format!("unknown backend {s:?} (expected gauge_frame or direct_potential)")),
    }
}

impl Overrides {
    fn apply(&self, mut c: ScenarioConfig) -> Result<ScenarioConfig> {
        if let Some(v) = &self.id {
            c.id = v.clone();
        }
        if let Some(v) = self.t_end {
            c.t_end = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.output_dir {
            c.output_dir = Some(v.clone());
        }
        if let Some(v) = self.backend {
            c.backend = v;
        }
        if let Some(v) = self.points {
            c.grid.points = v;
        }
        if let Some(v) = self.half_width {
            c.grid.half_width = v;
        }
        if let Some(v) = self.damping {
            c.physics.damping = v;
        }
        if let Some(v) = &self.stark {
            c.physics.stark = v.clone();
        }
        if let Some(v) = self.dt0 {
            c.controller.dt0 = v;
        }
        if let Some(v) = self.cfl_const {
            c.controller.cfl_const = v;
        }
        if let Some(v) = self.grad_stop {
            c.controller.grad_stop = v;
        }
        if let Some(v) = self.sample_every {
            c.sampling.every = v;
        }
        c.validate()?;
        Ok(c)
    }
}

fn load(path: &Path, o: &Overrides) -> Result<ScenarioConfig> {
    o.apply(ScenarioConfig::from_file(path)?)
}

fn write_report(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<u8> {
    let root = cli.out_root.unwrap_or_else(output_root);
    match cli.cmd {
        Command::GroundState { dim, points, half_width, save } => {
            let grid = Arc::new(GridSpec::cubic(dim, half_width, points)?);
            let gs = ground_state_on(&grid)?;
            print!("{}", gs.csv_report());
            if let Some(p) = save {
                snapshot::save(&p, &gs.q)?;
            }
            Ok(0)
        }
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let (sim, dir) = run_scenario(&cfg, &root)?;
            println!("{}: {} at t = {} after {} steps", cfg.id, sim.outcome, sim.t_last(), sim.trajectory.steps);
            if sim.trajectory.stop.is_blowup() {
                print!("{}", sim.blowup.to_text());
            }
            for w in &sim.warnings {
                eprintln!("warning: {w}");
            }
            println!("bundle {}", dir.display());
            Ok(sim.outcome.exit_code() as u8)
        }
        Command::Sweep { config, axis, values, parallelism, overrides } => {
            let cfg = load(&config, &overrides)?;
            let spec = SweepSpec { axis: axis.parse::<SweepAxis>()?, values, parallelism };
            let dir = root.join(format!("{}_sweep_{}", cfg.id, spec.axis.as_str()));
            let out = sweep(&spec, &cfg, &dir)?;
            for r in &out.rows {
                match &r.result {
                    Ok(s) => println!("{} = {:<10} {:<10} t = {}", spec.axis.as_str(), r.value, s.outcome, s.t_last),
                    Err(e) => println!("{} = {:<10} error: {e}", spec.axis.as_str(), r.value),
                }
            }
            println!("summary {}", out.dir.join("summary.csv").display());
            Ok(0)
        }
        Command::BisectA { config, a_lo, a_hi, t_cap, resolution, budget, probe, overrides } => {
            let cfg = load(&config, &overrides)?;
            let spec = BisectionSpec { a_lo, a_hi, t_cap, resolution, runs_budget: budget, extra_probes: probe };
            let rep = a_star_bisection(&cfg, &spec)?;
            print!("{}", rep.to_text());
            write_report(
                &root.join(format!("{}_bisect_a", cfg.id)),
                &[("bisection.txt", rep.to_text()), ("probes.csv", probes_csv("a", &rep.probes))],
            )?;
            Ok(0)
        }
        Command::Scan { config, amplitudes, overrides } => {
            let cfg = load(&config, &overrides)?;
            let scan = threshold_scan(&cfg, &amplitudes)?;
            let table = probes_csv("c", &scan.rows);
            print!("{table}");
            for w in &scan.warnings {
                eprintln!("warning: {w}");
            }
            write_report(&root.join(format!("{}_scan", cfg.id)), &[("phase_table.csv", table)])?;
            Ok(0)
        }
        Command::AhEquivalence { config, t, overrides } => {
            let cfg = load(&config, &overrides)?;
            let rep = ah_equivalence(&cfg, t)?;
            let text = format!(
                "t = {}\nL2 difference {:e}\nrelative difference {:e}\nround trip {:e}\n",
                rep.t, rep.l2_difference, rep.relative_difference, rep.round_trip
            );
            print!("{text}");
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            write_report(&root.join(format!("{}_ah_equivalence", cfg.id)), &[("report.txt", text)])?;
            Ok(0)
        }
        Command::CheckLaws { bundle } => {
            let (_, traj) = load_bundle(&bundle)?;
            let (reports, skipped) = check_laws(&traj);
            print!("{}", law_reports_text(&reports));
            for w in skipped {
                eprintln!("warning: {w}");
            }
            fs::write(bundle.join("laws.csv"), law_reports_csv(&reports)?)?;
            Ok(0)
        }
        Command::FitBlowup { bundle } => {
            let (_, traj) = load_bundle(&bundle)?;
            let rep = detect_blowup_and_fit(&traj)?;
            print!("{}", rep.to_text());
            Ok(0)
        }
        Command::Convergence { config, dts, ns, n_ref, overrides } => {
            let cfg = load(&config, &overrides)?;
            if dts.is_empty() && ns.is_empty() {
                return Err(DnlsError::Config("give --dts and/or --ns".into()));
            }
            let rep = convergence_study(&cfg, &dts, &ns, n_ref)?;
            let table = rep.to_csv();
            print!("{table}");
            write_report(&root.join(format!("{}_convergence", cfg.id)), &[("convergence.csv", table)])?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
