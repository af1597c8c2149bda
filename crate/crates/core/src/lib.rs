//! Pseudo-spectral laboratory for the L²-critical damped nonlinear
//! Schrödinger equation with a Stark potential,
//!
//! ```text
//! i u_t = −Δu + (E·x) u − |u|^{p−1} u − i a u,   p = 1 + 4/n,
//! ```
//!
//! on periodic boxes in one to three dimensions.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod field;
pub mod gauge;
pub mod harness;
pub mod grid;
pub mod ground_state;
pub mod propagator;
pub mod snapshot;
pub mod spectral;
pub mod trajectory;

pub use diagnostics::{sample, DiagnosticsSample};
pub use error::{DnlsError, Result};
pub use fft::{forward_transform, inverse_transform, SpectralField};
pub use evolve::{evolve, DiagnosticHooks, StepController};
pub use field::Field;
pub use grid::GridSpec;
pub use num_complex::Complex64;
pub use propagator::{Backend, PhysParams, SimState};
pub use trajectory::{StopReason, TrajectoryRecord};
