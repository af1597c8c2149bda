//! Scenario configuration files.
//!
//! A scenario is a TOML document with a few top-level keys and the sections
//! `[grid]`, `[physics]`, `[initial]`, `[controller]` and `[sampling]`.
//! Unknown keys anywhere are errors.
//!
//! ```toml
//! id = "negative_energy"
//! t_end = 5.0
//! backend = "gauge_frame"        # or "direct_potential"
//! seed = 0
//!
//! [grid]
//! dim = 1
//! half_width = 20.0
//! points = 262144
//!
//! [physics]
//! damping = 0.01
//! stark = [0.0]
//!
//! [initial]
//! recipe = "chirped_ground_state" # scaled_ground_state, pseudo_conformal, gaussian, snapshot
//! amplitude = 1.2
//! chirp = 1.0
//!
//! [controller]
//! dt0 = 1e-3
//! cfl_const = 0.02
//! dt_min = 1e-14
//! spectral_fill_max = 1e-6
//! grad_stop = 5000.0
//!
//! [sampling]
//! every = 0.01
//! grad_ratio = 1.05
//! snapshot_grad_ratio = 1.3
//! ```

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::evolve::StepController;
use crate::grid::GridSpec;
use crate::ground_state::{critical_exponent, MAX_SPACING};
use crate::propagator::{Backend, PhysParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<Arc<GridSpec>> {
        Ok(Arc::new(GridSpec::cubic(self.dim, self.half_width, self.points)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub damping: f64,
    pub stark: Vec<f64>,
    #[serde(default = "yes")]
    pub nonlinear: bool,
    /// Defaults to the critical `1 + 4/n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "recipe", deny_unknown_fields)]
pub enum InitialRecipe {
    /// `c·Q`.
    #[serde(rename = "scaled_ground_state")]
    ScaledGroundState { amplitude: f64 },
    /// `c·Q·exp(−ib|x|²/4)`.
    #[serde(rename = "chirped_ground_state")]
    ChirpedGroundState { amplitude: f64, chirp: f64 },
    /// Pseudo-conformal profile `S(t)`.
    #[serde(rename = "pseudo_conformal")]
    PseudoConformal { theta: f64, blowup_time: f64, center: Vec<f64>, t: f64 },
    /// `A·exp(−|x−x₀|²/(2σ²) + i k·x)`.
    #[serde(rename = "gaussian")]
    Gaussian { amplitude: f64, width: f64, center: Vec<f64>, wavevector: Vec<f64> },
    /// Field read from a binary snapshot on the same grid.
    #[serde(rename = "snapshot")]
    Snapshot { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub every: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_grad_ratio: Option<f64>,
    /// Constant `c` of the window rule `w = c·‖∇u‖^{−1/2}`.
    #[serde(default = "one")]
    pub window_constant: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendName {
    GaugeFrame,
    DirectPotential,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::GaugeFrame => Backend::GaugeFrame,
            BackendName::DirectPotential => Backend::DirectPotential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub t_end: f64,
    #[serde(default = "gauge")]
    pub backend: BackendName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub initial: InitialRecipe,
    pub controller: StepController,
    pub sampling: SamplingConfig,
}

fn gauge() -> BackendName {
    BackendName::GaugeFrame
}

impl ScenarioConfig {
    /// Parses and validates a TOML document. Syntax and type errors carry
    /// line and column positions.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| DnlsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            DnlsError::Config(m) => DnlsError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| DnlsError::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<PhysParams> {
        let p = PhysParams {
            dim: self.grid.dim,
            damping: self.physics.damping,
            stark: self.physics.stark.clone(),
            exponent: self.physics.exponent.unwrap_or_else(|| critical_exponent(self.grid.dim)),
            nonlinear: self.physics.nonlinear,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn backend(&self) -> Backend {
        self.backend.into()
    }

    /// Checks every section against the grid before anything runs.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(DnlsError::Config(m));
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return cfg(format!("id {:?} must be a nonempty file-name-safe string", self.id));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return cfg(format!("t_end = {} must be positive", self.t_end));
        }
        let grid = self.grid.build().map_err(|e| DnlsError::Config(format!("[grid] {e}")))?;
        self.params().map_err(|e| DnlsError::Config(format!("[physics] {e}")))?;
        self.controller.validate().map_err(|e| DnlsError::Config(format!("[controller] {e}")))?;
        let s = &self.sampling;
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(s.every) || !s.snapshot_every.map_or(true, pos) || !pos(s.window_constant) {
            return cfg("[sampling] cadences and window_constant must be positive".into());
        }
        if [s.grad_ratio, s.snapshot_grad_ratio].iter().flatten().any(|&r| !(r > 1.0 && r.is_finite())) {
            return cfg("[sampling] gradient ratios must exceed 1".into());
        }
        self.validate_recipe(&grid)
    }

    fn validate_recipe(&self, grid: &GridSpec) -> Result<()> {
        let dim = grid.dim();
        let dx = grid.max_spacing();
        let err = |m: String| Err(DnlsError::Config(format!("[initial] {m}")));
        let needs_q = |dx: f64| {
            if dx >= MAX_SPACING {
                err(format!("ground state needs grid spacing below {MAX_SPACING}, got {dx}"))
            } else {
                Ok(())
            }
        };
        match &self.initial {
            InitialRecipe::ScaledGroundState { amplitude } => {
                if !amplitude.is_finite() {
                    return err("amplitude must be finite".into());
                }
                needs_q(dx)
            }
            InitialRecipe::ChirpedGroundState { amplitude, chirp } => {
                if !amplitude.is_finite() || !chirp.is_finite() {
                    return err("amplitude and chirp must be finite".into());
                }
                // Local wavenumber b|x|/2 must stay well inside the band.
                let kmax = 0.5 * chirp.abs() * grid.half_widths().iter().cloned().fold(0.0, f64::max);
                let nyq = (0..dim).map(|a| grid.nyquist(a)).fold(f64::INFINITY, f64::min);
                if kmax > 0.5 * nyq {
                    return err(format!("chirp {chirp} produces wavenumber {kmax} beyond half the Nyquist {nyq}"));
                }
                needs_q(dx)
            }
            InitialRecipe::PseudoConformal { blowup_time, center, t, .. } => {
                if center.len() != dim {
                    return err(format!("center has {} components, dimension is {dim}", center.len()));
                }
                let s = blowup_time - t;
                if !(s > 0.0) {
                    return err(format!("pseudo-conformal profile needs t < blowup_time, got T - t = {s}"));
                }
                if dx >= 0.2 * s {
                    return err(format!("profile width {s} is not resolved by spacing {dx}"));
                }
                needs_q(dx)
            }
            InitialRecipe::Gaussian { width, center, wavevector, amplitude } => {
                if center.len() != dim || wavevector.len() != dim {
                    return err("center and wavevector need one component per axis".into());
                }
                if !amplitude.is_finite() || !(*width >= 2.0 * dx) {
                    return err(format!("width {width} must be at least twice the spacing {dx}"));
                }
                for a in 0..dim {
                    if wavevector[a].abs() > 0.5 * grid.nyquist(a) {
                        return err(format!("wavevector component {} beyond half the Nyquist", wavevector[a]));
                    }
                }
                Ok(())
            }
            InitialRecipe::Snapshot { path } => {
                if path.as_os_str().is_empty() {
                    return err("snapshot path is empty".into());
                }
                Ok(())
            }
        }
    }
}
