use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{DnlsError, Result};
use crate::grid::GridSpec;

/// Complex samples on a fixed grid, row-major.
///
/// The grid is shared behind an `Arc` and never changes once the field exists.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<GridSpec>,
    data: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, data }
    }

    pub fn from_vec(grid: Arc<GridSpec>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(DnlsError::GridMismatch(format!(
                "{} samples for a grid of {} points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_real(grid: Arc<GridSpec>, data: &[f64]) -> Result<Self> {
        Self::from_vec(grid, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: Arc<GridSpec>, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let axes: Vec<Vec<f64>> = (0..grid.dim()).map(|a| grid.axis_coords(a)).collect();
        let mut data = Vec::with_capacity(grid.len());
        let mut idx = vec![0usize; grid.dim()];
        let mut x = vec![0.0; grid.dim()];
        for _ in 0..grid.len() {
            for a in 0..grid.dim() {
                x[a] = axes[a][idx[a]];
            }
            data.push(f(&x));
            for a in (0..grid.dim()).rev() {
                idx[a] += 1;
                if idx[a] < grid.points()[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(DnlsError::Diverged)
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64,
    {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Pointwise modulus as a real-valued field.
    pub fn modulus(&self) -> Self {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    /// Largest `|f_j|`.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Integer roll: `out[j] = self[j - shift]` per axis (periodic).
    pub fn rolled(&self, shift: &[isize]) -> Self {
        let g = &self.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for (flat, &z) in self.data.iter().enumerate() {
            let idx = g.multi_index(flat);
            let moved: Vec<usize> = idx
                .iter()
                .zip(shift)
                .zip(g.points())
                .map(|((&i, &s), &n)| (i as isize + s).rem_euclid(n as isize) as usize)
                .collect();
            out[g.flat_index(&moved)] = z;
        }
        Self { grid: g.clone(), data: out }
    }
}
