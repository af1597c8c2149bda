//! Scenario files, single runs and multi-run experiments.

pub mod config;
pub mod experiments;
pub mod initial;
pub mod run;
pub mod sweep;

pub use config::{InitialRecipe, ScenarioConfig};
pub use experiments::{
    a_star_bisection, ah_equivalence, convergence_study, threshold_scan, AhEquivalenceReport, BisectionReport,
    BisectionSpec, ConvergenceReport, Probe, ThresholdScan,
};
pub use initial::build_initial;
pub use run::{check_laws, load_bundle, run_scenario, simulate, Outcome, Simulation, SummaryRow};
pub use sweep::{sweep, SweepAxis, SweepOutcome, SweepSpec};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "DNLS_OUT";

/// `$DNLS_OUT`, or `runs` in the working directory.
pub fn output_root() -> std::path::PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(Into::into).unwrap_or_else(|| "runs".into())
}
