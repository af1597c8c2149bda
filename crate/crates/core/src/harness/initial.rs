//! Initial data from a recipe.

use std::sync::Arc;

use num_complex::Complex64;

use super::config::InitialRecipe;
use crate::error::{DnlsError, Result};
use crate::field::Field;
use crate::gauge::{pseudo_conformal_profile, PseudoConformalParams};
use crate::grid::GridSpec;
use crate::ground_state::ground_state_on;
use crate::snapshot;

pub fn build_initial(recipe: &InitialRecipe, grid: &Arc<GridSpec>) -> Result<Field> {
    match recipe {
        InitialRecipe::ScaledGroundState { amplitude } => {
            let gs = ground_state_on(grid)?;
            Ok(gs.q.scaled(Complex64::new(*amplitude, 0.0)))
        }
        InitialRecipe::ChirpedGroundState { amplitude, chirp } => {
            let gs = ground_state_on(grid)?;
            let r2 = grid.x_squared();
            let data = gs
                .q
                .data()
                .iter()
                .zip(&r2)
                .map(|(q, &r2)| q * Complex64::from_polar(*amplitude, -chirp * r2 / 4.0))
                .collect();
            Field::from_vec(grid.clone(), data)
        }
        InitialRecipe::PseudoConformal { theta, blowup_time, center, t } => {
            let gs = ground_state_on(grid)?;
            let pc = PseudoConformalParams { theta: *theta, blowup_time: *blowup_time, center: center.clone(), t: *t };
            pseudo_conformal_profile(grid, &pc, &gs)
        }
        InitialRecipe::Gaussian { amplitude, width, center, wavevector } => {
            Ok(Field::from_fn(grid.clone(), |x| {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                let phase: f64 = x.iter().zip(wavevector).map(|(a, k)| a * k).sum();
                Complex64::from_polar(amplitude * (-0.5 * r2 / (width * width)).exp(), phase)
            }))
        }
        InitialRecipe::Snapshot { path } => {
            let f = snapshot::load(path)?;
            f.grid().check_same(grid).map_err(|e| {
                DnlsError::Config(format!("snapshot {} does not match [grid]: {e}", path.display()))
            })?;
            Field::from_vec(grid.clone(), f.into_data())
        }
    }
}
