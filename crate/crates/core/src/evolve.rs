//! Adaptive time integration with blow-up stops and diagnostic sampling.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{sample_state, DiagnosticsSample};
use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::propagator::{SimState, Stepper};
use crate::trajectory::{Snapshot, StopReason, TrajectoryRecord, TrajectoryRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepController {
    pub dt0: f64,
    pub cfl_const: f64,
    pub dt_min: f64,
    pub spectral_fill_max: f64,
    pub grad_stop: f64,
}

impl StepController {
    /// Constant step `dt` with no gradient-driven refinement or gradient stop.
    pub fn fixed(dt: f64) -> Self {
        Self {
            dt0: dt,
            cfl_const: f64::INFINITY,
            dt_min: dt * 1e-3,
            spectral_fill_max: 0.5,
            grad_stop: f64::INFINITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DnlsError::InvalidParameter(m.into()));
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return bad("dt0 must be positive and finite");
        }
        if !(self.cfl_const > 0.0) {
            return bad("cfl_const must be positive");
        }
        if !(self.dt_min > 0.0) {
            return bad("dt_min must be positive");
        }
        if !(self.spectral_fill_max > 0.0 && self.spectral_fill_max < 1.0) {
            return bad("spectral_fill_max must lie in (0, 1)");
        }
        if !(self.grad_stop > 0.0) {
            return bad("grad_stop must be positive");
        }
        Ok(())
    }

    /// `min(dt0, cfl/‖∇u‖²)`.
    pub fn dt_for(&self, grad_sq: f64) -> f64 {
        if grad_sq > 0.0 {
            self.dt0.min(self.cfl_const / grad_sq)
        } else {
            self.dt0
        }
    }
}

/// Receives every recorded sample together with the physical field.
pub trait Observer {
    fn observe(&mut self, sample: &DiagnosticsSample, u: &Field);
}

impl<F: FnMut(&DiagnosticsSample, &Field)> Observer for F {
    fn observe(&mut self, sample: &DiagnosticsSample, u: &Field) {
        self(sample, u)
    }
}

/// Sampling and snapshot cadence.
///
/// Samples are taken every `sample_every` time units and additionally
/// whenever `‖∇u‖` has changed by the factor `sample_grad_ratio` since the
/// previous sample, which keeps the record dense through a collapse. The
/// snapshot fields work the same way. A final sample and (if snapshots are
/// enabled) a final snapshot are always taken at the stop.
pub struct DiagnosticHooks<'a> {
    pub sample_every: f64,
    pub sample_grad_ratio: Option<f64>,
    pub snapshot_every: Option<f64>,
    pub snapshot_grad_ratio: Option<f64>,
    pub observers: Vec<&'a mut dyn Observer>,
}

impl DiagnosticHooks<'_> {
    pub fn every(sample_every: f64) -> Self {
        Self {
            sample_every,
            sample_grad_ratio: None,
            snapshot_every: None,
            snapshot_grad_ratio: None,
            observers: Vec::new(),
        }
    }

    pub fn with_grad_ratio(mut self, ratio: f64) -> Self {
        self.sample_grad_ratio = Some(ratio);
        self
    }

    pub fn with_snapshots(mut self, every: Option<f64>, grad_ratio: Option<f64>) -> Self {
        self.snapshot_every = every;
        self.snapshot_grad_ratio = grad_ratio;
        self
    }

    fn snapshots_enabled(&self) -> bool {
        self.snapshot_every.is_some() || self.snapshot_grad_ratio.is_some()
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.sample_every) || !self.snapshot_every.map_or(true, pos) {
            return Err(DnlsError::InvalidParameter("sampling cadence must be positive".into()));
        }
        let ratio_ok = |r: Option<f64>| r.map_or(true, |r| r > 1.0 && r.is_finite());
        if !ratio_ok(self.sample_grad_ratio) || !ratio_ok(self.snapshot_grad_ratio) {
            return Err(DnlsError::InvalidParameter("gradient ratios must exceed 1".into()));
        }
        Ok(())
    }
}

/// Time grid `t0 + kΔ` that the step sequence lands on exactly.
struct Cadence {
    t0: f64,
    every: f64,
    k: u64,
}

impl Cadence {
    fn next(&self) -> f64 {
        self.t0 + self.k as f64 * self.every
    }

    /// Consumes every cadence point at or before `t`; true if any was hit.
    fn hit(&mut self, t: f64) -> bool {
        let mut hit = false;
        while self.next() <= t + time_eps(t) {
            self.k += 1;
            hit = true;
        }
        hit
    }
}

fn time_eps(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

fn ratio_crossed(ratio: Option<f64>, now: f64, last: f64) -> bool {
    ratio.is_some_and(|r| now >= last * r || now * r <= last)
}

/// Integrates `s` to `t_end` (or to a stop) and records diagnostics.
pub fn evolve(
    mut s: SimState,
    t_end: f64,
    ctrl: &StepController,
    hooks: &mut DiagnosticHooks<'_>,
) -> Result<(SimState, TrajectoryRecord)> {
    if !(t_end > s.t) {
        return Err(DnlsError::Precondition(format!("t_end = {t_end} must exceed t = {}", s.t)));
    }
    ctrl.validate()?;
    hooks.validate()?;
    let mut stepper = Stepper::new(&s);
    let mut rec = TrajectoryRecord::new(s.params.clone(), s.backend);

    let info = stepper.inspect(&s)?;
    let mut grad_sq = info.physical_grad_sq(s.t, &s.params, s.backend);
    let mut fill = info.spectral_fill;
    let mut samples = Cadence { t0: s.t, every: hooks.sample_every, k: 1 };
    let mut snaps = hooks.snapshot_every.map(|every| Cadence { t0: s.t, every, k: 1 });
    record_sample(&mut rec, &s, 0.0, fill, hooks)?;
    if hooks.snapshots_enabled() {
        record_snapshot(&mut rec, &s, grad_sq.sqrt());
    }
    let mut last_sample_grad = grad_sq.sqrt();
    let mut last_snap_grad = last_sample_grad;
    let mut last_dt = 0.0;

    let stop = loop {
        let adaptive = ctrl.dt_for(grad_sq);
        if adaptive < ctrl.dt_min {
            break StopReason::UnderResolved;
        }
        let mut target = t_end.min(samples.next());
        if let Some(c) = &snaps {
            target = target.min(c.next());
        }
        let (dt, land) = if s.t + adaptive * (1.0 + 1e-9) >= target {
            (target - s.t, Some(target))
        } else {
            (adaptive, None)
        };
        let info = stepper.step(&mut s, dt);
        if let Some(tg) = land {
            s.t = tg;
        }
        last_dt = dt;
        if s.diverged || !s.field.is_finite() {
            s.diverged = true;
            break StopReason::Diverged;
        }
        grad_sq = info.physical_grad_sq(s.t, &s.params, s.backend);
        fill = info.spectral_fill;
        let grad = grad_sq.sqrt();

        let stop = if grad > ctrl.grad_stop {
            Some(StopReason::GradientThreshold)
        } else if fill > ctrl.spectral_fill_max {
            Some(StopReason::SpectralFill)
        } else if s.t >= t_end - time_eps(t_end) {
            Some(StopReason::Completed)
        } else {
            None
        };

        let time_hit = samples.hit(s.t);
        if time_hit || stop.is_some() || ratio_crossed(hooks.sample_grad_ratio, grad, last_sample_grad) {
            record_sample(&mut rec, &s, dt, fill, hooks)?;
            last_sample_grad = grad;
        }
        let snap_time_hit = snaps.as_mut().is_some_and(|c| c.hit(s.t));
        let snap_stop = stop.is_some() && hooks.snapshots_enabled();
        if snap_time_hit || snap_stop || ratio_crossed(hooks.snapshot_grad_ratio, grad, last_snap_grad) {
            record_snapshot(&mut rec, &s, grad);
            last_snap_grad = grad;
        }
        if let Some(r) = stop {
            break r;
        }
    };

    if stop == StopReason::UnderResolved && rec.last().is_some_and(|l| l.t < s.t) {
        record_sample(&mut rec, &s, last_dt, fill, hooks)?;
        if hooks.snapshots_enabled() {
            record_snapshot(&mut rec, &s, grad_sq.sqrt());
        }
    }
    rec.stop = stop;
    rec.steps = s.step_count;
    rec.warnings = s.warnings.clone();
    Ok((s, rec))
}

fn record_sample(
    rec: &mut TrajectoryRecord,
    s: &SimState,
    dt: f64,
    fill: f64,
    hooks: &mut DiagnosticHooks<'_>,
) -> Result<()> {
    let sample = sample_state(s)?;
    if !hooks.observers.is_empty() {
        let u = s.physical_field();
        for obs in hooks.observers.iter_mut() {
            obs.observe(&sample, &u);
        }
    }
    rec.rows.push(TrajectoryRow { sample, dt, spectral_fill: fill });
    Ok(())
}

fn record_snapshot(rec: &mut TrajectoryRecord, s: &SimState, grad_norm: f64) {
    rec.snapshots.push(Snapshot { t: s.t, grad_norm, field: s.physical_field() });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::propagator::{Backend, PhysParams};
    use crate::spectral::l2_norm;
    use num_complex::Complex64;
    use std::sync::Arc;

    fn gaussian(n: usize) -> Field {
        let g = Arc::new(GridSpec::cubic(1, 20.0, n).unwrap());
        Field::from_fn(g, |x| Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), 0.5 * x[0]))
    }

    #[test]
    fn lands_on_sample_times_and_t_end() {
        let params = PhysParams::critical(1, 0.1, vec![0.0]).unwrap();
        let s = SimState::new(gaussian(256), params, Backend::GaugeFrame).unwrap();
        let ctrl = StepController { dt0: 0.003, cfl_const: 1.0, dt_min: 1e-9, spectral_fill_max: 0.1, grad_stop: 1e6 };
        let mut hooks = DiagnosticHooks::every(0.1);
        let (s, rec) = evolve(s, 1.05, &ctrl, &mut hooks).unwrap();
        assert_eq!(rec.stop, StopReason::Completed);
        assert_eq!(s.t, 1.05);
        let times = rec.times();
        assert_eq!(times.len(), 12);
        for (i, t) in times.iter().take(11).enumerate() {
            assert!((t - 0.1 * i as f64).abs() < 1e-12, "{t}");
        }
        for w in rec.samples() {
            let expect = (-0.2 * w.t).exp() * rec.first().unwrap().mass_sq;
            assert!((w.mass_sq / expect - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn observers_and_snapshots() {
        let params = PhysParams::critical(1, 0.0, vec![0.3]).unwrap();
        let s = SimState::new(gaussian(256), params, Backend::GaugeFrame).unwrap();
        let mut count = 0usize;
        let mut masses = Vec::new();
        let mut obs = |smp: &DiagnosticsSample, u: &Field| {
            count += 1;
            masses.push((smp.mass_sq, crate::spectral::l2_norm_sq(u)));
        };
        let mut hooks = DiagnosticHooks::every(0.25).with_snapshots(Some(0.5), None);
        hooks.observers.push(&mut obs);
        let (_, rec) = evolve(s, 1.0, &StepController::fixed(0.01), &mut hooks).unwrap();
        drop(hooks);
        assert_eq!(count, 5);
        assert_eq!(rec.snapshots.len(), 3);
        for (a, b) in masses {
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn time_reversal() {
        let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
        let u0 = gaussian(512);
        let s = SimState::new(u0.clone(), params.clone(), Backend::GaugeFrame).unwrap();
        let ctrl = StepController::fixed(1e-3);
        let (s, _) = evolve(s, 0.5, &ctrl, &mut DiagnosticHooks::every(0.5)).unwrap();
        let back = SimState::new(s.field.conj(), params, Backend::GaugeFrame).unwrap();
        let (back, _) = evolve(back, 0.5, &ctrl, &mut DiagnosticHooks::every(0.5)).unwrap();
        let err = l2_norm(&back.field.conj().sub(&u0).unwrap());
        assert!(err < 1e-6, "{err:e}");
    }

    #[test]
    fn under_resolution_stop() {
        let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
        let s = SimState::new(gaussian(256), params, Backend::GaugeFrame).unwrap();
        let ctrl = StepController { dt0: 0.1, cfl_const: 1e-6, dt_min: 1e-4, spectral_fill_max: 0.1, grad_stop: 1e6 };
        let (_, rec) = evolve(s, 1.0, &ctrl, &mut DiagnosticHooks::every(0.1)).unwrap();
        assert_eq!(rec.stop, StopReason::UnderResolved);
        assert_eq!(rec.rows.len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
        let s = SimState::new(gaussian(64), params, Backend::GaugeFrame).unwrap();
        let ctrl = StepController::fixed(0.01);
        assert!(evolve(s.clone(), 0.0, &ctrl, &mut DiagnosticHooks::every(0.1)).is_err());
        assert!(evolve(s.clone(), 1.0, &ctrl, &mut DiagnosticHooks::every(-1.0)).is_err());
        let mut bad = ctrl.clone();
        bad.spectral_fill_max = 1.0;
        assert!(evolve(s, 1.0, &bad, &mut DiagnosticHooks::every(0.1)).is_err());
    }
}
