//! Parallel one-axis sweeps over a base scenario.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::experiments::with_amplitude;
use super::run::{run_scenario, SummaryRow};
use crate::error::{DnlsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Recipe amplitude.
    #[serde(rename = "c")]
    Amplitude,
    #[serde(rename = "a")]
    Damping,
    /// `|E|`, keeping the direction of the base field (first axis if zero).
    #[serde(rename = "E")]
    FieldStrength,
    /// Points per axis.
    #[serde(rename = "N")]
    Points,
    /// Initial and largest step.
    #[serde(rename = "dt")]
    Step,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Amplitude => "c",
            Self::Damping => "a",
            Self::FieldStrength => "E",
            Self::Points => "N",
            Self::Step => "dt",
        }
    }

    /// Base config with this axis set to `v`.
    pub fn apply(self, base: &ScenarioConfig, v: f64) -> Result<ScenarioConfig> {
        let mut cfg = match self {
            Self::Amplitude => with_amplitude(base, v)?,
            _ => base.clone(),
        };
        match self {
            Self::Amplitude => {}
            Self::Damping => cfg.physics.damping = v,
            Self::FieldStrength => {
                let e = &mut cfg.physics.stark;
                let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    e.iter_mut().for_each(|x| *x *= v / norm);
                } else if let Some(first) = e.first_mut() {
                    *first = v;
                }
            }
            Self::Points => {
                if !(v >= 2.0 && v.fract() == 0.0) {
                    return Err(DnlsError::Config(format!("N = {v} is not a point count")));
                }
                cfg.grid.points = v as usize;
            }
            Self::Step => cfg.controller.dt0 = v,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = DnlsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(Self::Amplitude),
            "a" => Ok(Self::Damping),
            "E" | "e" => Ok(Self::FieldStrength),
            "N" | "n" => Ok(Self::Points),
            "dt" => Ok(Self::Step),
            _ => Err(DnlsError::Config(format!("unknown sweep axis {s:?} (expected c, a, E, N or dt)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub parallelism: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(DnlsError::Config("sweep value list is empty".into()));
        }
        if self.parallelism == 0 {
            return Err(DnlsError::Config("sweep parallelism must be at least 1".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(DnlsError::Config("sweep values must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub result: std::result::Result<SummaryRow, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutcome {
    pub dir: PathBuf,
    pub rows: Vec<SweepRow>,
}

pub fn sweep_summary_csv(axis: SweepAxis, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index", "axis", "value", "status"];
    header.extend(SummaryRow::HEADER);
    header.push("error");
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.index.to_string(), axis.as_str().to_string(), r.value.to_string()];
        match &r.result {
            Ok(s) => {
                rec.push("ok".into());
                rec.extend(s.record());
                rec.push(String::new());
            }
            Err(e) => {
                rec.push("error".into());
                rec.extend(std::iter::repeat(String::new()).take(SummaryRow::HEADER.len()));
                rec.push(e.clone());
            }
        }
        w.write_record(&rec)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

/// Runs every value of the axis into `<dir>/runs/<id>` and writes
/// `<dir>/summary.csv`. Failed runs are recorded and the sweep continues.
pub fn sweep(spec: &SweepSpec, base: &ScenarioConfig, dir: &Path) -> Result<SweepOutcome> {
    spec.validate()?;
    base.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| DnlsError::Config(format!("thread pool: {e}")))?;
    let runs_dir = dir.join("runs");
    let rows: Vec<SweepRow> = pool.install(|| {
        spec.values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let result = spec.axis.apply(base, value).and_then(|mut cfg| {
                    cfg.id = format!("{}_{}{index:03}", base.id, spec.axis.as_str());
                    cfg.output_dir = None;
                    run_scenario(&cfg, &runs_dir).map(|(sim, _)| sim.summary())
                });
                SweepRow { index, value, result: result.map_err(|e| e.to_string()) }
            })
            .collect()
    });
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.csv"), sweep_summary_csv(spec.axis, &rows)?)?;
    Ok(SweepOutcome { dir: dir.to_path_buf(), rows })
}
