//! Observable functionals and law checkers.
//!
//! For a field `u` with parameters `(a, E, p)`:
//!
//! ```text
//! 𝓜   = ‖u‖²                       𝓟  = Im ∫ ū ∇u
//! 𝓔₀  = ‖∇u‖² − 2/(p+1)‖u‖_{p+1}^{p+1}
//! 𝓔_V = 𝓔₀ + ∫ (E·x)|u|²           J  = ∫ |x|²|u|²
//! ```

mod blowup;
mod concentration;
mod laws;
mod report;

pub use blowup::{
    blowup_sufficient_condition, detect_blowup_and_fit, fit_series, t_star_upper_bound, BlowupFitOptions,
    BlowupReport,
};
pub use concentration::{concentration_series, mass_in_window, sup_mass_in_window, ConcentrationPoint, WindowMass};
pub use laws::{
    check_conservation, check_energy_rate, check_mass_law, check_momentum_law, check_virial, LawCheckReport, LawId,
};
pub use report::{law_reports_csv, law_reports_text, write_plot_data};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fft::{transform_in_place, Direction};
use crate::field::Field;
use crate::propagator::{Backend, PhysParams, SimState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub mass_sq: f64,
    pub e0: f64,
    pub ev: f64,
    pub momentum: Vec<f64>,
    pub grad_sq: f64,
    pub variance: f64,
    pub lp_sum: f64,
    pub stark_moment: f64,
}

impl DiagnosticsSample {
    pub fn grad_norm(&self) -> f64 {
        self.grad_sq.sqrt()
    }

    fn assemble(t: f64, mass_sq: f64, grad_sq: f64, momentum: Vec<f64>, moments: Moments, params: &PhysParams) -> Self {
        let e0 = grad_sq - params.nonlinear_coeff() * 2.0 / (params.exponent + 1.0) * moments.lp_sum;
        Self {
            t,
            mass_sq,
            e0,
            ev: e0 + moments.stark_moment,
            momentum,
            grad_sq,
            variance: moments.variance,
            lp_sum: moments.lp_sum,
            stark_moment: moments.stark_moment,
        }
    }
}

struct Moments {
    lp_sum: f64,
    variance: f64,
    stark_moment: f64,
}

fn moments(data: &[num_complex::Complex64], g: &crate::grid::GridSpec, params: &PhysParams) -> Moments {
    let dv = g.cell_volume();
    let x2 = g.x_squared();
    let ex = g.dot_x(&params.stark);
    let half = 0.5 * (params.exponent + 1.0);
    let (mut lp, mut var, mut st) = (0.0, 0.0, 0.0);
    for ((z, r2), e) in data.iter().zip(&x2).zip(&ex) {
        let m = z.norm_sqr();
        lp += m.powf(half);
        var += r2 * m;
        st += e * m;
    }
    Moments { lp_sum: lp * dv, variance: var * dv, stark_moment: st * dv }
}

fn spectral_sums(coeffs: &[num_complex::Complex64], g: &crate::grid::GridSpec) -> (f64, f64, Vec<f64>) {
    let dv = g.cell_volume();
    let k2 = g.k_squared();
    let dim = g.dim();
    let ks: Vec<Vec<f64>> = (0..dim)
        .map(|a| {
            let mut d = vec![0.0; dim];
            d[a] = 1.0;
            g.dot_k(&d)
        })
        .collect();
    let (mut m, mut gr) = (0.0, 0.0);
    let mut p = vec![0.0; dim];
    for (i, z) in coeffs.iter().enumerate() {
        let e = z.norm_sqr();
        m += e;
        gr += k2[i] * e;
        for (pa, k) in p.iter_mut().zip(&ks) {
            *pa += k[i] * e;
        }
    }
    (m * dv, gr * dv, p.into_iter().map(|v| v * dv).collect())
}

/// All functionals of the physical field `u` at time `t`.
pub fn sample(u: &Field, t: f64, params: &PhysParams) -> Result<DiagnosticsSample> {
    u.ensure_finite()?;
    let g = u.grid();
    let mut coeffs = u.data().to_vec();
    transform_in_place(g, &mut coeffs, Direction::Forward);
    let (_, grad, mom) = spectral_sums(&coeffs, g);
    let mass = crate::spectral::l2_norm_sq(u);
    Ok(DiagnosticsSample::assemble(t, mass, grad, mom, moments(u.data(), g, params), params))
}

/// Functionals of `u = ah_forward(φ, t, E)` evaluated from the frame field.
///
/// With `d = t²E`, `|u(x)| = |φ(x + d)|`, so on the whole space
///
/// ```text
/// ‖∇u‖²      = ‖∇φ‖² − 2tE·𝓟_φ + t²|E|²𝓜
/// 𝓟_u        = 𝓟_φ − tE𝓜
/// J_u        = J_φ − 2d·X_φ + |d|²𝓜,      X_φ = ∫ x|φ|²
/// ∫(E·x)|u|² = E·X_φ − (E·d)𝓜
/// ```
///
/// Neither the non-periodic phase `e^{−itE·x}` nor the shift is ever applied
/// on the grid, so the values stay meaningful after `|d|` exceeds the box.
pub fn sample_frame(phi: &Field, t: f64, params: &PhysParams) -> Result<DiagnosticsSample> {
    phi.ensure_finite()?;
    let g = phi.grid();
    let mut coeffs = phi.data().to_vec();
    transform_in_place(g, &mut coeffs, Direction::Forward);
    let (_, grad_phi, p_phi) = spectral_sums(&coeffs, g);
    let mass = crate::spectral::l2_norm_sq(phi);
    let frame = moments(phi.data(), g, params);
    let centroid: Vec<f64> = (0..g.dim())
        .map(|a| {
            let mut dir = vec![0.0; g.dim()];
            dir[a] = 1.0;
            crate::spectral::weighted_mass(phi, &g.dot_x(&dir))
        })
        .collect();
    let d: Vec<f64> = params.stark.iter().map(|e| t * t * e).collect();
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let e2 = dot(&params.stark, &params.stark);
    let grad = (grad_phi - 2.0 * t * dot(&params.stark, &p_phi) + t * t * e2 * mass).max(0.0);
    let mom = p_phi.iter().zip(&params.stark).map(|(p, e)| p - t * e * mass).collect();
    let m = Moments {
        lp_sum: frame.lp_sum,
        variance: frame.variance - 2.0 * dot(&d, &centroid) + dot(&d, &d) * mass,
        stark_moment: dot(&params.stark, &centroid) - dot(&params.stark, &d) * mass,
    };
    Ok(DiagnosticsSample::assemble(t, mass, grad, mom, m, params))
}

/// Physical diagnostics of a simulation state, whatever its backend.
pub fn sample_state(s: &SimState) -> Result<DiagnosticsSample> {
    match s.backend {
        Backend::GaugeFrame => sample_frame(&s.field, s.t, &s.params),
        Backend::DirectPotential => sample(&s.field, s.t, &s.params),
    }
}
