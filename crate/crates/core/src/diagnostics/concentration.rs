//! Mass in balls `|x − c| < w`, pointwise and maximized over centers.
//!
//! Distances are periodic (minimum image), so the supremum over grid centers
//! is a circular convolution of `|u|²` with the ball indicator.

use num_complex::Complex64;

use crate::error::{DnlsError, Result};
use crate::fft::{transform_in_place, Direction};
use crate::field::Field;
use crate::grid::GridSpec;
use crate::trajectory::TrajectoryRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct WindowMass {
    pub mass: f64,
    pub center: Vec<f64>,
    /// False when `w` is below the grid spacing.
    pub reliable: bool,
}

fn periodic_offsets(g: &GridSpec, axis: usize, c: f64) -> Vec<f64> {
    let period = 2.0 * g.half_widths()[axis];
    g.axis_coords(axis)
        .into_iter()
        .map(|x| {
            let d = (x - c).rem_euclid(period);
            d.min(period - d)
        })
        .collect()
}

fn check_w(g: &GridSpec, w: f64) -> Result<bool> {
    if !(w > 0.0) {
        return Err(DnlsError::InvalidParameter(format!("window radius {w} must be positive")));
    }
    Ok(w >= g.max_spacing())
}

/// `∫_{|x − center| < w} |u|²`.
pub fn mass_in_window(u: &Field, center: &[f64], w: f64) -> Result<WindowMass> {
    let g = u.grid();
    if center.len() != g.dim() {
        return Err(DnlsError::GridMismatch("window center dimension".into()));
    }
    let reliable = check_w(g, w)?;
    let axes: Vec<Vec<f64>> = (0..g.dim()).map(|a| periodic_offsets(g, a, center[a])).collect();
    let r2 = g.tabulate(&axes, |d| d.iter().map(|v| v * v).sum());
    let w2 = w * w;
    let mass = g.cell_volume()
        * u.data().iter().zip(&r2).filter(|(_, &d)| d < w2).map(|(z, _)| z.norm_sqr()).sum::<f64>();
    Ok(WindowMass { mass, center: center.to_vec(), reliable })
}

/// `sup_c ∫_{|x − c| < w} |u|²` over grid centers `c`.
pub fn sup_mass_in_window(u: &Field, w: f64) -> Result<WindowMass> {
    let g = u.grid();
    let reliable = check_w(g, w)?;
    let origin: Vec<f64> = (0..g.dim()).map(|a| g.axis_coords(a)[0]).collect();
    let axes: Vec<Vec<f64>> = (0..g.dim()).map(|a| periodic_offsets(g, a, origin[a])).collect();
    let r2 = g.tabulate(&axes, |d| d.iter().map(|v| v * v).sum());
    let w2 = w * w;
    let mut ball: Vec<Complex64> = r2.iter().map(|&d| Complex64::new(if d < w2 { 1.0 } else { 0.0 }, 0.0)).collect();
    let mut dens: Vec<Complex64> = u.data().iter().map(|z| Complex64::new(z.norm_sqr(), 0.0)).collect();
    transform_in_place(g, &mut ball, Direction::Forward);
    transform_in_place(g, &mut dens, Direction::Forward);
    // corr[j] = Σ_i dens[i]·ball[i − j]; ball is even, so this is a convolution.
    for (d, b) in dens.iter_mut().zip(&ball) {
        *d *= b;
    }
    transform_in_place(g, &mut dens, Direction::Inverse);
    let scale = (g.len() as f64).sqrt() * g.cell_volume();
    let (best, val) = dens
        .iter()
        .enumerate()
        .map(|(i, z)| (i, z.re * scale))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let idx = g.multi_index(best);
    let center = (0..g.dim()).map(|a| g.axis_coords(a)[idx[a]]).collect();
    Ok(WindowMass { mass: val.max(0.0), center, reliable })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationPoint {
    pub t: f64,
    pub grad_norm: f64,
    pub w: f64,
    pub mass: f64,
    pub reliable: bool,
}

/// Sup-window masses of every snapshot with `w(t) = c·‖∇u(t)‖^{−1/2}`.
pub fn concentration_series(traj: &TrajectoryRecord, c: f64) -> Result<Vec<ConcentrationPoint>> {
    if !(c > 0.0) {
        return Err(DnlsError::InvalidParameter(format!("window constant {c} must be positive")));
    }
    traj.snapshots
        .iter()
        .map(|s| {
            let w = c / s.grad_norm.sqrt();
            let m = sup_mass_in_window(&s.field, w)?;
            Ok(ConcentrationPoint { t: s.t, grad_norm: s.grad_norm, w, mass: m.mass, reliable: m.reliable })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::closed_form_q1;
    use std::sync::Arc;

    fn q_field(n: usize) -> Field {
        let g = Arc::new(GridSpec::cubic(1, 20.0, n).unwrap());
        Field::from_fn(g, |x| Complex64::new(closed_form_q1(x[0]), 0.0))
    }

    #[test]
    fn full_and_partial_windows() {
        let q = q_field(1024);
        let total = crate::spectral::l2_norm_sq(&q);
        let full = mass_in_window(&q, &[0.0], 100.0).unwrap();
        assert!((full.mass - total).abs() < 1e-12 * total);
        let five = mass_in_window(&q, &[0.0], 5.0).unwrap();
        assert!(five.mass >= 0.99 * total);
        let tiny = mass_in_window(&q, &[0.0], 1e-3).unwrap();
        assert!(!tiny.reliable);
        assert!(mass_in_window(&q, &[0.0], 0.0).is_err());
    }

    #[test]
    fn monotone_in_radius() {
        let q = q_field(512);
        let mut prev = 0.0;
        for i in 1..60 {
            let m = mass_in_window(&q, &[0.7], 0.1 * i as f64).unwrap().mass;
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn sup_matches_direct_and_is_translation_invariant() {
        let q = q_field(512);
        let w = 0.8;
        let s = sup_mass_in_window(&q, w).unwrap();
        let direct = mass_in_window(&q, &s.center, w).unwrap();
        assert!((s.mass - direct.mass).abs() < 1e-12);
        assert!(s.center[0].abs() < 1e-12);
        let moved = q.rolled(&[37]);
        let t = sup_mass_in_window(&moved, w).unwrap();
        assert!((t.mass - s.mass).abs() < 1e-10);
    }
}
