//! Spectral derivatives, norms and inner products.
//!
//! Quadrature is the uniform Riemann sum with weight `Π dx`, which is exact
//! for band-limited periodic fields.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::{forward_transform, inverse_transform, SpectralField};
use crate::field::Field;

/// Spectral Laplacian, multiplier `-|k|²`.
pub fn laplacian(f: &Field) -> Result<Field> {
    let mut s = forward_transform(f)?;
    let k2 = f.grid().k_squared();
    for (z, k) in s.coeffs_mut().iter_mut().zip(&k2) {
        *z *= -k;
    }
    Ok(inverse_transform(&s))
}

/// `∂f/∂x_axis`, multiplier `i·k_axis` (Nyquist mode dropped).
pub fn partial(f: &Field, axis: usize) -> Result<Field> {
    let mut s = forward_transform(f)?;
    let mut dir = vec![0.0; f.grid().dim()];
    dir[axis] = 1.0;
    let k = f.grid().dot_k(&dir);
    for (z, kk) in s.coeffs_mut().iter_mut().zip(&k) {
        *z *= Complex64::new(0.0, *kk);
    }
    Ok(inverse_transform(&s))
}

/// `Σ_axes ‖∂_axis f‖²` by Parseval, consistent with `-Re⟨Δf, f⟩`.
pub fn grad_norm_sq(f: &Field) -> Result<f64> {
    let s = forward_transform(f)?;
    Ok(grad_norm_sq_spectral(&s))
}

pub fn grad_norm_sq_spectral(s: &SpectralField) -> f64 {
    let k2 = s.grid().k_squared();
    s.grid().cell_volume()
        * s.coeffs().iter().zip(&k2).map(|(z, k)| k * z.norm_sqr()).sum::<f64>()
}

/// `Im ∫ f̄ ∇f`, one component per axis.
pub fn momentum(f: &Field) -> Result<Vec<f64>> {
    let s = forward_transform(f)?;
    Ok(momentum_spectral(&s))
}

pub fn momentum_spectral(s: &SpectralField) -> Vec<f64> {
    let g = s.grid();
    let dv = g.cell_volume();
    (0..g.dim())
        .map(|axis| {
            let mut dir = vec![0.0; g.dim()];
            dir[axis] = 1.0;
            let k = g.dot_k(&dir);
            dv * s.coeffs().iter().zip(&k).map(|(z, kk)| kk * z.norm_sqr()).sum::<f64>()
        })
        .collect()
}

pub fn l2_norm_sq(f: &Field) -> f64 {
    f.grid().cell_volume() * f.data().iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub fn l2_norm(f: &Field) -> f64 {
    l2_norm_sq(f).sqrt()
}

/// `‖f‖_q^q = ∫ |f|^q`.
pub fn lp_norm_pow(f: &Field, q: f64) -> f64 {
    let half = 0.5 * q;
    f.grid().cell_volume() * f.data().iter().map(|z| z.norm_sqr().powf(half)).sum::<f64>()
}

/// `‖f‖_q`.
pub fn lp_norm(f: &Field, q: f64) -> f64 {
    lp_norm_pow(f, q).powf(1.0 / q)
}

/// `⟨f, g⟩ = ∫ conj(f)·g`.
pub fn inner(f: &Field, g: &Field) -> Result<Complex64> {
    f.grid().check_same(g.grid())?;
    let dv = f.grid().cell_volume();
    let s: Complex64 = f.data().iter().zip(g.data()).map(|(a, b)| a.conj() * b).sum();
    Ok(s * dv)
}

/// `∫ w(x)·|f|²` for a per-sample weight.
pub fn weighted_mass(f: &Field, weight: &[f64]) -> f64 {
    f.grid().cell_volume()
        * f.data().iter().zip(weight).map(|(z, w)| w * z.norm_sqr()).sum::<f64>()
}

/// Fraction of `‖f‖²` held by the top eighth of the resolved band.
pub fn spectral_fill(s: &SpectralField) -> f64 {
    let mask = s.grid().high_band_mask();
    let mut top = 0.0;
    let mut all = 0.0;
    for (z, m) in s.coeffs().iter().zip(&mask) {
        let e = z.norm_sqr();
        all += e;
        if *m {
            top += e;
        }
    }
    if all > 0.0 {
        top / all
    } else {
        0.0
    }
}

/// Fraction of `‖f‖²` on samples with `|x_axis| >= frac·L` for some axis.
pub fn boundary_fraction(f: &Field, frac: f64) -> f64 {
    let mask = f.grid().boundary_mask(frac);
    let mut edge = 0.0;
    let mut all = 0.0;
    for (z, m) in f.data().iter().zip(&mask) {
        let e = z.norm_sqr();
        all += e;
        if *m {
            edge += e;
        }
    }
    if all > 0.0 {
        edge / all
    } else {
        0.0
    }
}

/// Band-limited resampling onto a grid with the same box but a different
/// point count: coefficients are zero-padded or truncated. For a field whose
/// spectrum fits the coarser band this is exact. The Nyquist coefficient is
/// split evenly when padding.
pub fn resample(f: &Field, target: &std::sync::Arc<crate::grid::GridSpec>) -> Result<Field> {
    let src = f.grid();
    if src.dim() != target.dim() || src.half_widths() != target.half_widths() {
        return Err(crate::error::DnlsError::GridMismatch(
            "resampling requires the same box".into(),
        ));
    }
    let s = forward_transform(f)?;
    let dim = src.dim();
    let scale = (target.len() as f64 / src.len() as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
    for (flat, &z) in s.coeffs().iter().enumerate() {
        let idx = src.multi_index(flat);
        // Each source mode maps to one or two target modes (Nyquist split).
        let mut targets: Vec<(Vec<usize>, f64)> = vec![(Vec::with_capacity(dim), 1.0)];
        for a in 0..dim {
            let ns = src.points()[a];
            let nt = target.points()[a];
            let m = idx[a] as isize;
            let signed = if m < (ns / 2) as isize { m } else { m - ns as isize };
            let mut next = Vec::new();
            for (t, w) in targets {
                if nt > ns && signed == -((ns / 2) as isize) {
                    for sgn in [-1isize, 1] {
                        let kk = sgn * (ns / 2) as isize;
                        let mut tt = t.clone();
                        tt.push(kk.rem_euclid(nt as isize) as usize);
                        next.push((tt, w * 0.5));
                    }
                } else if nt < ns && (signed < -((nt / 2) as isize) || signed >= (nt / 2) as isize) {
                    continue;
                } else {
                    let mut tt = t.clone();
                    tt.push(signed.rem_euclid(nt as isize) as usize);
                    next.push((tt, w));
                }
            }
            targets = next;
        }
        for (t, w) in targets {
            out[target.flat_index(&t)] += z * (w * scale);
        }
    }
    Ok(inverse_transform(&SpectralField::from_coeffs(target.clone(), out)))
}
