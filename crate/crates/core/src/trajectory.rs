//! Time series recorded by [`crate::evolve::evolve`] and their CSV form.
//!
//! Column order of the trajectory CSV:
//! `t, mass_sq, grad_norm_sq, E0, EV, Px[, Py[, Pz]], variance, dt, spectral_fill`.
//! `dt` is the step that produced the row (0 for the initial row). Numbers are
//! written in the shortest form that parses back to the same `f64`.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSample;
use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::propagator::{Backend, PhysParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    GradientThreshold,
    SpectralFill,
    UnderResolved,
    Diverged,
}

impl StopReason {
    /// Gradient threshold and spectral exhaustion both signal collapse.
    pub fn is_blowup(self) -> bool {
        matches!(self, Self::GradientThreshold | Self::SpectralFill)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::GradientThreshold => "gradient_threshold",
            Self::SpectralFill => "spectral_fill",
            Self::UnderResolved => "under_resolved",
            Self::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = DnlsError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Self::Completed,
            Self::GradientThreshold,
            Self::SpectralFill,
            Self::UnderResolved,
            Self::Diverged,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| DnlsError::Format(format!("unknown stop reason {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub sample: DiagnosticsSample,
    pub dt: f64,
    pub spectral_fill: f64,
}

/// Physical field `u(t)` kept by the snapshot cadence.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub grad_norm: f64,
    pub field: Field,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub params: PhysParams,
    pub backend: Backend,
    pub rows: Vec<TrajectoryRow>,
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    pub warnings: Vec<String>,
    pub steps: u64,
}

impl TrajectoryRecord {
    pub fn new(params: PhysParams, backend: Backend) -> Self {
        Self {
            params,
            backend,
            rows: Vec::new(),
            snapshots: Vec::new(),
            stop: StopReason::Completed,
            warnings: Vec::new(),
            steps: 0,
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = &DiagnosticsSample> {
        self.rows.iter().map(|r| &r.sample)
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples().map(|s| s.t).collect()
    }

    pub fn grad_norms(&self) -> Vec<f64> {
        self.samples().map(|s| s.grad_norm()).collect()
    }

    pub fn first(&self) -> Option<&DiagnosticsSample> {
        self.rows.first().map(|r| &r.sample)
    }

    pub fn last(&self) -> Option<&DiagnosticsSample> {
        self.rows.last().map(|r| &r.sample)
    }

    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = ["t", "mass_sq", "grad_norm_sq", "E0", "EV"].iter().map(|s| s.to_string()).collect();
        for axis in ["Px", "Py", "Pz"].iter().take(dim) {
            h.push(axis.to_string());
        }
        h.extend(["variance", "dt", "spectral_fill"].iter().map(|s| s.to_string()));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::csv_header(self.params.dim))?;
        for r in &self.rows {
            let s = &r.sample;
            let mut rec = vec![s.t, s.mass_sq, s.grad_sq, s.e0, s.ev];
            rec.extend(&s.momentum);
            rec.extend([s.variance, r.dt, r.spectral_fill]);
            out.write_record(rec.iter().map(|v| v.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Rebuilds rows from CSV. `lp_sum` and `stark_moment` are recovered
    /// from the energy columns: `lp = (p+1)/2·(‖∇u‖² − 𝓔₀)` and
    /// `∫(E·x)|u|² = 𝓔_V − 𝓔₀`.
    pub fn read_csv<R: Read>(r: R, params: PhysParams, backend: Backend, stop: StopReason) -> Result<Self> {
        let dim = params.dim;
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header != Self::csv_header(dim) {
            return Err(DnlsError::Format(format!("unexpected trajectory header {header:?}")));
        }
        let coeff = params.nonlinear_coeff();
        let mut rows = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| DnlsError::Format(format!("row {}: {e}", line + 2)))?;
            let (t, mass_sq, grad_sq, e0, ev) = (v[0], v[1], v[2], v[3], v[4]);
            let momentum = v[5..5 + dim].to_vec();
            let lp_sum = if coeff > 0.0 { 0.5 * (params.exponent + 1.0) * (grad_sq - e0) / coeff } else { 0.0 };
            rows.push(TrajectoryRow {
                sample: DiagnosticsSample {
                    t,
                    mass_sq,
                    e0,
                    ev,
                    momentum,
                    grad_sq,
                    variance: v[5 + dim],
                    lp_sum,
                    stark_moment: ev - e0,
                },
                dt: v[6 + dim],
                spectral_fill: v[7 + dim],
            });
        }
        Ok(Self { rows, stop, ..Self::new(params, backend) })
    }
}
