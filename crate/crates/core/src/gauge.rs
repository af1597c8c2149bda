//! Avron–Herbst gauge transforms and the pseudo-conformal profile.
//!
//! A solution `φ` of the damped equation without potential maps to a solution
//! of the Stark problem through
//!
//! ```text
//! u(t, x) = φ(t, x + t²E) · exp(−i(t E·x + |E|² t³/3))
//! φ(t, x) = u(t, x − t²E) · exp( i(t E·x − 2|E|² t³/3))
//! ```
//!
//! Shifts by `t²E` are executed as Fourier phase ramps, so arbitrary
//! (non-grid) displacements are exact for band-limited data. The inverse is
//! applied as the literal reverse of the forward sequence (undo the pointwise
//! phase on the grid, then shift back), which makes the round trip exact to
//! round-off for every field. Constant global phases are kept as written.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::fft::{transform_in_place, Direction};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::ground_state::{GroundState, RadialProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AhDirection {
    Forward,
    Inverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AhParams {
    pub stark: Vec<f64>,
    pub t: f64,
    pub direction: AhDirection,
}

impl AhParams {
    pub fn apply(&self, f: &Field) -> Result<Field> {
        if !self.t.is_finite() || self.stark.iter().any(|e| !e.is_finite()) {
            return Err(DnlsError::InvalidParameter("non-finite gauge parameters".into()));
        }
        Ok(match self.direction {
            AhDirection::Forward => ah_forward(f, self.t, &self.stark),
            AhDirection::Inverse => ah_inverse(f, self.t, &self.stark),
        })
    }
}

/// `g(x) = f(x + d)` via `f̂_k ↦ e^{i k·d} f̂_k`.
pub fn shift_spectral(f: &Field, d: &[f64]) -> Field {
    let g = f.grid();
    let mut data = f.data().to_vec();
    transform_in_place(g, &mut data, Direction::Forward);
    apply_shift_ramp(g, &mut data, d);
    transform_in_place(g, &mut data, Direction::Inverse);
    Field::from_vec(f.grid_arc().clone(), data).expect("length preserved")
}

/// Multiplies Fourier coefficients by `e^{i k·d}` (full wavenumbers,
/// Nyquist included, so integer grid shifts reduce to exact rolls).
pub(crate) fn apply_shift_ramp(g: &GridSpec, coeffs: &mut [Complex64], d: &[f64]) {
    if d.iter().all(|&v| v == 0.0) {
        return;
    }
    let axes: Vec<Vec<f64>> = (0..g.dim()).map(|a| g.axis_wavenumbers(a)).collect();
    let phase = g.tabulate(&axes, |k| k.iter().zip(d).map(|(a, b)| a * b).sum());
    for (z, ph) in coeffs.iter_mut().zip(phase) {
        *z *= Complex64::from_polar(1.0, ph);
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Stark-frame field from the potential-free solution at time `t`.
pub fn ah_forward(phi: &Field, t: f64, stark: &[f64]) -> Field {
    if t == 0.0 || stark.iter().all(|&e| e == 0.0) {
        return phi.clone();
    }
    let d: Vec<f64> = stark.iter().map(|e| t * t * e).collect();
    let shifted = shift_spectral(phi, &d);
    let ex = phi.grid().dot_x(stark);
    let c = norm_sq(stark) * t.powi(3) / 3.0;
    let data = shifted
        .data()
        .iter()
        .zip(&ex)
        .map(|(z, &e)| z * Complex64::from_polar(1.0, -(t * e + c)))
        .collect();
    Field::from_vec(phi.grid_arc().clone(), data).expect("length preserved")
}

/// Potential-free field from the Stark-frame solution at time `t`.
pub fn ah_inverse(u: &Field, t: f64, stark: &[f64]) -> Field {
    if t == 0.0 || stark.iter().all(|&e| e == 0.0) {
        return u.clone();
    }
    // u(x − d)·e^{i tE·x} = [u·e^{i tE·y}](x − d)·e^{i tE·d}, tE·d = t³|E|².
    let ex = u.grid().dot_x(stark);
    let undone = Field::from_vec(
        u.grid_arc().clone(),
        u.data().iter().zip(&ex).map(|(z, &e)| z * Complex64::from_polar(1.0, t * e)).collect(),
    )
    .expect("length preserved");
    let d: Vec<f64> = stark.iter().map(|e| -t * t * e).collect();
    let shifted = shift_spectral(&undone, &d);
    let e2t3 = norm_sq(stark) * t.powi(3);
    let c = e2t3 - 2.0 * e2t3 / 3.0;
    shifted.scaled(Complex64::from_polar(1.0, c))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoConformalParams {
    pub theta: f64,
    pub blowup_time: f64,
    pub center: Vec<f64>,
    pub t: f64,
}

/// Spacing-to-width ratio above which the contracted profile is unresolved.
const PROFILE_RESOLUTION: f64 = 0.2;

/// `S(t,x) = e^{iθ}/(T−t)^{n/2} · Q((x−x₀)/(T−t)) · e^{−i|x−x₀|²/(4(T−t))} · e^{i/(T−t)}`.
pub fn pseudo_conformal_profile(
    grid: &Arc<GridSpec>,
    pc: &PseudoConformalParams,
    gs: &GroundState,
) -> Result<Field> {
    let s = pc.blowup_time - pc.t;
    if !(s > 0.0) {
        return Err(DnlsError::InvalidParameter(format!(
            "profile needs t < T, got T − t = {s}"
        )));
    }
    if grid.dim() != gs.dim || pc.center.len() != grid.dim() {
        return Err(DnlsError::GridMismatch("profile dimension mismatch".into()));
    }
    if grid.max_spacing() >= PROFILE_RESOLUTION * s {
        return Err(DnlsError::Resolution(format!(
            "width T − t = {s} is not resolved by spacing {}",
            grid.max_spacing()
        )));
    }
    let profile = RadialProfile::from_field(&gs.q, 8)?;
    let n = grid.dim() as f64;
    let amp = s.powf(-0.5 * n);
    let global = Complex64::from_polar(amp, pc.theta + 1.0 / s);
    Ok(Field::from_fn(grid.clone(), |x| {
        let r2: f64 = x.iter().zip(&pc.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let q = profile.eval(r2.sqrt() / s);
        global * Complex64::from_polar(q, -r2 / (4.0 * s))
    }))
}
