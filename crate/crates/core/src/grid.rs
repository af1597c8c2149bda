//! Uniform periodic grids on `[-L, L)` per axis.
//!
//! Samples are stored row-major (the last axis varies fastest). Wavenumbers use
//! the standard FFT layout: index `j < N/2` maps to `j·π/L`, index `j >= N/2`
//! maps to `(j - N)·π/L`, so index 0 is always the zero mode and index `N/2` is
//! the Nyquist mode `-N/2·π/L`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DnlsError, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_widths: Vec<f64>,
    points: Vec<usize>,
}

impl GridSpec {
    pub fn new(half_widths: Vec<f64>, points: Vec<usize>) -> Result<Self> {
        let dim = half_widths.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(DnlsError::InvalidGrid(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if points.len() != dim {
            return Err(DnlsError::InvalidGrid(format!(
                "{} half-widths but {} point counts",
                dim,
                points.len()
            )));
        }
        for (&l, &n) in half_widths.iter().zip(&points) {
            if !(l.is_finite() && l > 0.0) {
                return Err(DnlsError::InvalidGrid(format!("half-width must be positive, got {l}")));
            }
            if n < 2 || !n.is_power_of_two() {
                return Err(DnlsError::InvalidGrid(format!(
                    "points per axis must be a power of two >= 2, got {n}"
                )));
            }
        }
        Ok(Self { half_widths, points })
    }

    /// Same half-width and point count on every axis.
    pub fn cubic(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        Self::new(vec![half_width; dim], vec![points; dim])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    /// Total number of samples, `Π N_axis`.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_widths[axis] / self.points[axis] as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Quadrature weight `Π dx_axis`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Index of `x = 0` on every axis.
    pub fn center_index(&self) -> Vec<usize> {
        self.points.iter().map(|n| n / 2).collect()
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        let l = self.half_widths[axis];
        let dx = self.spacing(axis);
        (0..self.points[axis]).map(|j| -l + j as f64 * dx).collect()
    }

    pub fn axis_wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.points[axis];
        let base = PI / self.half_widths[axis];
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as isize } else { j as isize - n as isize };
                m as f64 * base
            })
            .collect()
    }

    /// Wavenumbers with the Nyquist entry set to zero, used for odd-order
    /// derivatives so that real fields keep real derivatives.
    pub fn axis_wavenumbers_odd(&self, axis: usize) -> Vec<f64> {
        let mut k = self.axis_wavenumbers(axis);
        k[self.points[axis] / 2] = 0.0;
        k
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.points[a + 1];
        }
        s
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.points[a];
            flat /= self.points[a];
        }
        idx
    }

    /// Flattened per-sample array built from one value per axis coordinate,
    /// combined with `combine` (e.g. sum of squares).
    pub fn tabulate<F>(&self, per_axis: &[Vec<f64>], mut combine: F) -> Vec<f64>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = self.dim();
        let mut out = Vec::with_capacity(self.len());
        let mut idx = vec![0usize; dim];
        let mut vals = vec![0.0; dim];
        for _ in 0..self.len() {
            for a in 0..dim {
                vals[a] = per_axis[a][idx[a]];
            }
            out.push(combine(&vals));
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < self.points[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        out
    }

    /// `|k|²` for every mode in FFT layout.
    pub fn k_squared(&self) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_wavenumbers(a)).collect();
        self.tabulate(&axes, |k| k.iter().map(|v| v * v).sum())
    }

    /// `|x|²` for every grid point.
    pub fn x_squared(&self) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_coords(a)).collect();
        self.tabulate(&axes, |x| x.iter().map(|v| v * v).sum())
    }

    /// `v·x` for every grid point.
    pub fn dot_x(&self, v: &[f64]) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_coords(a)).collect();
        self.tabulate(&axes, |x| x.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// `v·k` for every mode, with Nyquist entries zeroed.
    pub fn dot_k(&self, v: &[f64]) -> Vec<f64> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_wavenumbers_odd(a)).collect();
        self.tabulate(&axes, |k| k.iter().zip(v).map(|(a, b)| a * b).sum())
    }

    /// Marks samples whose coordinate on some axis has `|x| >= frac·L`.
    pub fn boundary_mask(&self, frac: f64) -> Vec<bool> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|a| {
                let l = self.half_widths[a];
                self.axis_coords(a)
                    .into_iter()
                    .map(|x| if x.abs() >= frac * l { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        self.tabulate(&axes, |v| v.iter().cloned().fold(0.0, f64::max))
            .into_iter()
            .map(|v| v > 0.5)
            .collect()
    }

    /// Marks modes in the top eighth of the resolved band on any axis.
    pub fn high_band_mask(&self) -> Vec<bool> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|a| {
                let cut = 0.875 * self.nyquist(a);
                self.axis_wavenumbers(a)
                    .into_iter()
                    .map(|k| if k.abs() > cut { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        self.tabulate(&axes, |v| v.iter().cloned().fold(0.0, f64::max))
            .into_iter()
            .map(|v| v > 0.5)
            .collect()
    }

    /// Hashable identity, used by caches.
    pub fn key(&self) -> Vec<u64> {
        self.half_widths
            .iter()
            .map(|l| l.to_bits())
            .chain(self.points.iter().map(|&n| n as u64))
            .collect()
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(DnlsError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_points_is_box_length() {
        let g = GridSpec::new(vec![20.0, 7.5], vec![1024, 64]).unwrap();
        for a in 0..2 {
            assert_eq!(g.spacing(a) * g.points()[a] as f64, 2.0 * g.half_widths()[a]);
        }
    }

    #[test]
    fn wavenumber_layout() {
        let g = GridSpec::cubic(1, PI, 8).unwrap();
        let k = g.axis_wavenumbers(0);
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.axis_wavenumbers_odd(0)[4], 0.0);
    }

    #[test]
    fn center_is_origin() {
        let g = GridSpec::cubic(2, 15.0, 256).unwrap();
        let c = g.center_index();
        assert_eq!(g.axis_coords(0)[c[0]], 0.0);
        assert_eq!(g.x_squared()[g.flat_index(&c)], 0.0);
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(vec![1.0, 2.0, 3.0], vec![4, 8, 2]).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::cubic(0, 1.0, 8).is_err());
        assert!(GridSpec::cubic(4, 1.0, 8).is_err());
        assert!(GridSpec::cubic(1, 1.0, 12).is_err());
        assert!(GridSpec::cubic(1, -1.0, 8).is_err());
    }
}
