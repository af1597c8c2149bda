//! Strang-split spectral time stepping.
//!
//! One step of size `h` is `K(h/2) ∘ N(h) ∘ K(h/2)` where `K` is the free
//! flow `e^{ihΔ}` applied in Fourier space and `N` solves the pointwise ODE
//! `i u_t = −|u|^{p−1} u − i a u` in closed form. With the direct Stark
//! backend the exactly solvable phase `e^{−i(E·x)h}` is folded into `N`.
//!
//! With the gauge backend the stored field is the potential-free frame
//! function `φ`; the physical field is `ah_forward(φ, t, E)`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};
use crate::fft::{transform_in_place, Direction};
use crate::field::Field;
use crate::gauge::ah_forward;
use crate::grid::GridSpec;
use crate::ground_state::critical_exponent;
use crate::spectral::boundary_fraction;

/// Relative position of the interior window edge used for seam checks.
pub const SEAM_WINDOW: f64 = 15.0 / 16.0;
/// Largest boundary mass fraction tolerated by the direct backend.
pub const SEAM_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub dim: usize,
    pub damping: f64,
    pub stark: Vec<f64>,
    pub exponent: f64,
    /// When false the `|u|^{p−1}u` term is switched off (linear Stark flow).
    pub nonlinear: bool,
}

impl PhysParams {
    /// Critical exponent `p = 1 + 4/n`, nonlinearity on.
    pub fn critical(dim: usize, damping: f64, stark: Vec<f64>) -> Result<Self> {
        let p = Self { dim, damping, stark, exponent: critical_exponent(dim), nonlinear: true };
        p.validate()?;
        Ok(p)
    }

    pub fn linear(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > crate::grid::MAX_DIM {
            return Err(DnlsError::InvalidParameter(format!("dimension {}", self.dim)));
        }
        if self.stark.len() != self.dim {
            return Err(DnlsError::InvalidParameter(format!(
                "Stark vector has {} components, dimension is {}",
                self.stark.len(),
                self.dim
            )));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(DnlsError::InvalidParameter(format!("damping {}", self.damping)));
        }
        if !(self.exponent > 1.0 && self.exponent.is_finite()) {
            return Err(DnlsError::InvalidParameter(format!("exponent {}", self.exponent)));
        }
        if self.stark.iter().any(|e| !e.is_finite()) {
            return Err(DnlsError::InvalidParameter("non-finite Stark vector".into()));
        }
        Ok(())
    }

    pub fn stark_norm(&self) -> f64 {
        self.stark.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn has_stark(&self) -> bool {
        self.stark.iter().any(|&e| e != 0.0)
    }

    /// Coefficient of `‖u‖_{p+1}^{p+1}` in the energy and its rate laws.
    pub fn nonlinear_coeff(&self) -> f64 {
        if self.nonlinear {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    GaugeFrame,
    DirectPotential,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    /// `φ` for [`Backend::GaugeFrame`], `u` for [`Backend::DirectPotential`].
    pub field: Field,
    pub params: PhysParams,
    pub backend: Backend,
    pub step_count: u64,
    pub diverged: bool,
    pub warnings: Vec<String>,
}

impl SimState {
    /// State at `t = 0` from physical initial data (the gauge is the identity there).
    pub fn new(u0: Field, params: PhysParams, backend: Backend) -> Result<Self> {
        params.validate()?;
        if u0.grid().dim() != params.dim {
            return Err(DnlsError::GridMismatch(format!(
                "field dimension {} vs parameter dimension {}",
                u0.grid().dim(),
                params.dim
            )));
        }
        u0.ensure_finite()?;
        let mut s = Self {
            t: 0.0,
            field: u0,
            params,
            backend,
            step_count: 0,
            diverged: false,
            warnings: Vec::new(),
        };
        s.check_seam();
        Ok(s)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        self.field.grid_arc()
    }

    /// The solution `u(t)` of the Stark problem.
    pub fn physical_field(&self) -> Field {
        match self.backend {
            Backend::GaugeFrame => ah_forward(&self.field, self.t, &self.params.stark),
            Backend::DirectPotential => self.field.clone(),
        }
    }

    fn check_seam(&mut self) {
        if self.backend != Backend::DirectPotential || !self.params.has_stark() {
            return;
        }
        let b = boundary_fraction(&self.field, SEAM_WINDOW);
        if b >= SEAM_TOLERANCE && !self.warnings.iter().any(|w| w.starts_with("seam")) {
            self.warnings.push(format!(
                "seam contamination: boundary mass fraction {b:.3e} at t = {:.6}",
                self.t
            ));
        }
    }
}

/// Free flow: every mode multiplied by `exp(−i|k|²τ)`.
pub fn kinetic_substep(f: &Field, tau: f64) -> Field {
    let g = f.grid();
    let mut data = f.data().to_vec();
    transform_in_place(g, &mut data, Direction::Forward);
    for (z, k2) in data.iter_mut().zip(g.k_squared()) {
        *z *= Complex64::from_polar(1.0, -k2 * tau);
    }
    transform_in_place(g, &mut data, Direction::Inverse);
    Field::from_vec(f.grid_arc().clone(), data).expect("length preserved")
}

/// `∫₀^τ e^{−(p−1)as} ds`, the accumulated phase weight for unit modulus.
fn phase_weight(tau: f64, a: f64, p: f64) -> f64 {
    let r = (p - 1.0) * a;
    if r == 0.0 {
        tau
    } else {
        -(-r * tau).exp_m1() / r
    }
}

/// `ρ^{p−1}` from `ρ²` with integer fast paths.
#[inline]
fn rho_pow(rho_sq: f64, half_pm1: f64, int_pow: Option<i32>) -> f64 {
    match int_pow {
        Some(k) => rho_sq.powi(k),
        None => rho_sq.powf(half_pm1),
    }
}

fn integer_half(p: f64) -> Option<i32> {
    let h = 0.5 * (p - 1.0);
    (h.fract() == 0.0 && h.abs() < 16.0).then_some(h as i32)
}

/// Pointwise closed-form flow of `i u_t = −|u|^{p−1}u − iau` over `τ`.
pub fn nonlinear_damped_substep(f: &Field, tau: f64, a: f64, p: f64) -> Field {
    let mut data = f.data().to_vec();
    nonlinear_in_place(&mut data, tau, a, p, 1.0, None);
    Field::from_vec(f.grid_arc().clone(), data).expect("length preserved")
}

fn nonlinear_in_place(
    data: &mut [Complex64],
    tau: f64,
    a: f64,
    p: f64,
    coeff: f64,
    stark_phase: Option<&[f64]>,
) {
    let decay = (-a * tau).exp();
    let w = coeff * phase_weight(tau, a, p);
    let half = 0.5 * (p - 1.0);
    let ip = integer_half(p);
    match stark_phase {
        None => {
            for z in data.iter_mut() {
                let theta = w * rho_pow(z.norm_sqr(), half, ip);
                *z *= Complex64::from_polar(decay, theta);
            }
        }
        Some(ex) => {
            for (z, &e) in data.iter_mut().zip(ex) {
                let theta = w * rho_pow(z.norm_sqr(), half, ip) - e * tau;
                *z *= Complex64::from_polar(decay, theta);
            }
        }
    }
}

/// Pointwise multiplication by `exp(−i(E·x)τ)`.
pub fn stark_substep_direct(f: &Field, tau: f64, stark: &[f64]) -> Field {
    if stark.iter().all(|&e| e == 0.0) {
        return f.clone();
    }
    let ex = f.grid().dot_x(stark);
    let data = f
        .data()
        .iter()
        .zip(&ex)
        .map(|(z, &e)| z * Complex64::from_polar(1.0, -e * tau))
        .collect();
    Field::from_vec(f.grid_arc().clone(), data).expect("length preserved")
}

/// Spectral quantities of the stored field after a step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepInfo {
    pub mass_sq: f64,
    pub grad_sq: f64,
    pub momentum: Vec<f64>,
    pub spectral_fill: f64,
}

impl StepInfo {
    /// `‖∇u‖²` of the physical field. In the gauge frame
    /// `∇u = (∇φ_s − i tE φ_s)·phase`, hence the quadratic correction.
    pub fn physical_grad_sq(&self, t: f64, params: &PhysParams, backend: Backend) -> f64 {
        match backend {
            Backend::DirectPotential => self.grad_sq,
            Backend::GaugeFrame => {
                let ep: f64 = params.stark.iter().zip(&self.momentum).map(|(e, p)| e * p).sum();
                let e2 = params.stark_norm().powi(2);
                (self.grad_sq - 2.0 * t * ep + t * t * e2 * self.mass_sq).max(0.0)
            }
        }
    }
}

/// Reusable stepping engine with tables precomputed for one grid.
pub struct Stepper {
    grid: Arc<GridSpec>,
    k_sq: Vec<f64>,
    k_axes: Vec<Vec<f64>>,
    high_band: Vec<bool>,
    stark_x: Option<Vec<f64>>,
    half_tau: f64,
    half_phase: Vec<Complex64>,
}

impl Stepper {
    pub fn new(state: &SimState) -> Self {
        let grid = state.grid().clone();
        let dim = grid.dim();
        let k_axes = (0..dim)
            .map(|a| {
                let mut dir = vec![0.0; dim];
                dir[a] = 1.0;
                grid.dot_k(&dir)
            })
            .collect();
        let stark_x = (state.backend == Backend::DirectPotential && state.params.has_stark())
            .then(|| grid.dot_x(&state.params.stark));
        Self {
            k_sq: grid.k_squared(),
            high_band: grid.high_band_mask(),
            k_axes,
            stark_x,
            half_tau: f64::NAN,
            half_phase: Vec::new(),
            grid,
        }
    }

    fn kinetic(&mut self, data: &mut [Complex64], tau: f64) {
        if tau != self.half_tau {
            self.half_phase = self.k_sq.iter().map(|k| Complex64::from_polar(1.0, -k * tau)).collect();
            self.half_tau = tau;
        }
        for (z, ph) in data.iter_mut().zip(&self.half_phase) {
            *z *= ph;
        }
    }

    /// Advances `state` by `dt` and returns spectral diagnostics of the new field.
    pub fn step(&mut self, state: &mut SimState, dt: f64) -> StepInfo {
        let params = &state.params;
        let data = state.field.data_mut();
        transform_in_place(&self.grid, data, Direction::Forward);
        self.kinetic(data, 0.5 * dt);
        transform_in_place(&self.grid, data, Direction::Inverse);
        nonlinear_in_place(
            data,
            dt,
            params.damping,
            params.exponent,
            params.nonlinear_coeff(),
            self.stark_x.as_deref(),
        );
        transform_in_place(&self.grid, data, Direction::Forward);
        self.kinetic(data, 0.5 * dt);
        let info = self.spectral_info(data);
        transform_in_place(&self.grid, data, Direction::Inverse);
        state.t += dt;
        state.step_count += 1;
        if !info.mass_sq.is_finite() || !info.grad_sq.is_finite() {
            state.diverged = true;
        } else if self.stark_x.is_some() {
            state.check_seam();
        }
        info
    }

    fn spectral_info(&self, coeffs: &[Complex64]) -> StepInfo {
        let dv = self.grid.cell_volume();
        let mut mass = 0.0;
        let mut grad = 0.0;
        let mut top = 0.0;
        let mut mom = vec![0.0; self.k_axes.len()];
        for (i, z) in coeffs.iter().enumerate() {
            let e = z.norm_sqr();
            mass += e;
            grad += self.k_sq[i] * e;
            if self.high_band[i] {
                top += e;
            }
            for (m, k) in mom.iter_mut().zip(&self.k_axes) {
                *m += k[i] * e;
            }
        }
        StepInfo {
            spectral_fill: if mass > 0.0 { top / mass } else { 0.0 },
            mass_sq: mass * dv,
            grad_sq: grad * dv,
            momentum: mom.into_iter().map(|m| m * dv).collect(),
        }
    }

    /// Spectral diagnostics of the current stored field without stepping.
    pub fn inspect(&self, state: &SimState) -> Result<StepInfo> {
        state.field.ensure_finite()?;
        let mut data = state.field.data().to_vec();
        transform_in_place(&self.grid, &mut data, Direction::Forward);
        Ok(self.spectral_info(&data))
    }
}

/// One Strang step; a non-finite result is returned flagged as diverged.
pub fn strang_step(mut s: SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DnlsError::InvalidParameter(format!("time step {dt}")));
    }
    let mut stepper = Stepper::new(&s);
    stepper.step(&mut s, dt);
    if !s.field.is_finite() {
        s.diverged = true;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::petviashvili;
    use crate::spectral::{l2_norm, momentum};

    fn grid1(l: f64, n: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::cubic(1, l, n).unwrap())
    }

    #[test]
    fn plane_wave_dispersion() {
        let g = grid1(10.0, 64);
        let k1 = 4.0 * std::f64::consts::PI / 10.0;
        let f = Field::from_fn(g.clone(), |x| Complex64::from_polar(1.0, k1 * x[0]));
        let out = kinetic_substep(&f, 0.3);
        for (z, &x) in out.data().iter().zip(&g.axis_coords(0)) {
            let expect = Complex64::from_polar(1.0, k1 * x - k1 * k1 * 0.3);
            assert!((z - expect).norm() < 1e-12);
        }
        let same = kinetic_substep(&f, 0.0);
        assert!(same.sub(&f).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn free_gaussian_matches_closed_form() {
        // i u_t = −u_xx with u(0) = e^{−x²/2}: u = (1+2iτ)^{−1/2} e^{−x²/(2(1+2iτ))}.
        let g = grid1(30.0, 1024);
        let f = Field::from_fn(g.clone(), |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        let tau = 0.5;
        let out = kinetic_substep(&f, tau);
        let w = Complex64::new(1.0, 2.0 * tau);
        let exact = Field::from_fn(g, |x| (-(x[0] * x[0]) / (2.0 * w)).exp() / w.sqrt());
        assert!(l2_norm(&out.sub(&exact).unwrap()) < 1e-10);
    }

    #[test]
    fn nonlinear_substep_closed_form() {
        let g = grid1(5.0, 16);
        let f = Field::from_fn(g.clone(), |_| Complex64::new(1.0, 0.0));
        let out = nonlinear_damped_substep(&f, 0.1, 0.0, 5.0);
        for z in out.data() {
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!((z.arg() - 0.1).abs() < 1e-15);
        }
        let f = Field::from_fn(g.clone(), |x| Complex64::new(x[0].cos(), 0.3 * x[0]));
        let out = nonlinear_damped_substep(&f, 2.0, 0.5, 5.0);
        assert!((l2_norm(&out) / l2_norm(&f) - (-1.0f64).exp()).abs() < 1e-15);
        let z = Field::zeros(g);
        assert_eq!(nonlinear_damped_substep(&z, 1.0, 0.2, 5.0).sup_norm(), 0.0);
    }

    #[test]
    fn damped_phase_solves_ode() {
        // ρ' = −aρ, θ' = ρ^{p−1}; compare with fine RK4.
        let (a, p, rho0, tau) = (0.3, 3.0, 1.4, 1.7);
        let (mut rho, mut th) = (rho0, 0.0);
        let n = 20000;
        let h = tau / n as f64;
        let rhs = |r: f64| (-a * r, r.powf(p - 1.0));
        for _ in 0..n {
            let k1 = rhs(rho);
            let k2 = rhs(rho + 0.5 * h * k1.0);
            let k3 = rhs(rho + 0.5 * h * k2.0);
            let k4 = rhs(rho + h * k3.0);
            rho += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            th += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let f = Field::from_vec(grid1(1.0, 2), vec![Complex64::new(rho0, 0.0); 2]).unwrap();
        let out = nonlinear_damped_substep(&f, tau, a, p);
        assert!((out.data()[0].norm() - rho).abs() < 1e-12);
        assert!((out.data()[0].arg() - th).abs() < 1e-10);
    }

    #[test]
    fn stark_substep_properties() {
        let g = grid1(20.0, 512);
        let f = Field::from_fn(g, |x| Complex64::from_polar((-x[0] * x[0]).exp(), 0.8 * x[0]));
        assert_eq!(stark_substep_direct(&f, 0.4, &[0.0]).data(), f.data());
        let (e, tau) = (0.7, 0.25);
        let out = stark_substep_direct(&f, tau, &[e]);
        for (a, b) in out.data().iter().zip(f.data()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        let m = crate::spectral::l2_norm_sq(&f);
        let k0 = momentum(&f).unwrap()[0] / m;
        let k1 = momentum(&out).unwrap()[0] / m;
        assert!((k1 - (k0 - e * tau)).abs() < 1e-6, "{k0} {k1}");
    }

    #[test]
    fn soliton_modulus_is_stationary() {
        let g = grid1(20.0, 1024);
        let gs = petviashvili(&g, 1, 1e-10, 2000).unwrap();
        let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
        let mut s = SimState::new(gs.q.clone(), params, Backend::GaugeFrame).unwrap();
        let mut stepper = Stepper::new(&s);
        for _ in 0..1000 {
            stepper.step(&mut s, 1e-3);
        }
        let diff = l2_norm(&s.field.modulus().sub(&gs.q).unwrap());
        assert!(diff < 1e-4, "{diff:e}");
        assert!((s.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_damping_factor() {
        let g = grid1(20.0, 256);
        let u0 = Field::from_fn(g, |x| Complex64::from_polar(1.3 * (-x[0] * x[0] / 2.0).exp(), x[0]));
        for backend in [Backend::GaugeFrame, Backend::DirectPotential] {
            let params = PhysParams::critical(1, 0.1, vec![0.2]).unwrap();
            let mut s = SimState::new(u0.clone(), params, backend).unwrap();
            for _ in 0..100 {
                s = strang_step(s, 0.01).unwrap();
            }
            let ratio = l2_norm(&s.field) / l2_norm(&u0);
            assert!((ratio / (-0.1f64).exp() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn step_rejects_bad_dt_and_flags_divergence() {
        let g = grid1(5.0, 16);
        let params = PhysParams::critical(1, 0.0, vec![0.0]).unwrap();
        let s = SimState::new(Field::zeros(g.clone()), params.clone(), Backend::GaugeFrame).unwrap();
        assert!(strang_step(s.clone(), 0.0).is_err());
        let mut bad = s;
        bad.field.data_mut()[2] = Complex64::new(f64::INFINITY, 0.0);
        let out = strang_step(bad, 0.1).unwrap();
        assert!(out.diverged);
    }

    #[test]
    fn seam_warning_for_edge_mass() {
        let g = grid1(10.0, 128);
        let u0 = Field::from_fn(g, |x| Complex64::new((-(x[0] - 9.5).powi(2)).exp(), 0.0));
        let params = PhysParams::critical(1, 0.0, vec![0.5]).unwrap();
        let s = SimState::new(u0.clone(), params.clone(), Backend::DirectPotential).unwrap();
        assert_eq!(s.warnings.len(), 1);
        let s = SimState::new(u0, params, Backend::GaugeFrame).unwrap();
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn gauge_gradient_correction() {
        let g = grid1(20.0, 512);
        let phi = Field::from_fn(g, |x| Complex64::from_polar((-x[0] * x[0]).exp(), 0.3 * x[0]));
        let params = PhysParams::critical(1, 0.0, vec![0.6]).unwrap();
        let mut s = SimState::new(phi, params.clone(), Backend::GaugeFrame).unwrap();
        s.t = 0.8;
        let info = Stepper::new(&s).inspect(&s).unwrap();
        let direct = crate::spectral::grad_norm_sq(&s.physical_field()).unwrap();
        let corrected = info.physical_grad_sq(s.t, &params, Backend::GaugeFrame);
        assert!((direct - corrected).abs() < 1e-10 * direct);
    }
}
