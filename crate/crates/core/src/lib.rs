//! Simulation and optimization toolkit for a measurement-induced cubic phase gate.
//!
//! Conventions: hbar = 1, `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`, vacuum
//! quadrature variance 1/2. Multi-mode amplitudes are stored row-major with
//! the last mode varying fastest.

pub mod ancilla;
pub mod error;
pub mod fock;
pub mod gate;
pub mod gaussian;
pub mod grid_io;
pub mod linalg;
pub mod parallel;
pub mod phase_space;
pub mod sampling;
pub mod validation;

pub use error::{CubistError, Result};
pub use num_complex::Complex64 as C64;

/// Quadrature variance of the vacuum; reference level for dB figures.
pub const SHOT_NOISE: f64 = 0.5;
