use serde::{Deserialize, Serialize};

use crate::fock::StateVector;

/// First and second moments of the output quadratures of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputMoments {
    pub x_mean: f64,
    pub x_sq: f64,
    pub p_mean: f64,
    pub p_sq: f64,
}

/// Outcome of one run of the gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateShotRecord {
    pub q: f64,
    /// `arctan(6T₂γq/√R₂)`, as used for the second detector.
    pub theta: f64,
    pub y: f64,
    pub p_disp: f64,
    /// Overlap with the ideal target.
    pub fidelity: f64,
    pub moments: OutputMoments,
    /// Normalized Fock expansion of the output.
    pub output_state: StateVector,
    /// Weight the Fock expansion misses before renormalization.
    pub fock_leakage: f64,
}
