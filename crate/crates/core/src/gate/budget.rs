use serde::{Deserialize, Serialize};

use super::config::{GateConfig, ResolvedAncilla};
use crate::ancilla::{nlq_moments, operator_moments};
use crate::error::Result;
use crate::fock::{quadrature_ops, OperatorMatrix, StateVector};
use crate::linalg;
use crate::C64;

/// Additive contributions to the output variance of `p₀″`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// `Var(P + 3γ_c X²)/T₁` of the input.
    pub ideal: f64,
    /// `(R₁T₂/R₂) Var(p₂ − 3γx₂²)/T₁` of the prepared ancilla.
    pub ancilla: f64,
    /// Residual from the finitely squeezed mode 1.
    pub squeezer: f64,
    pub total: f64,
}

fn cubic_shift_operator(gamma_c: f64, dim: usize) -> Result<OperatorMatrix> {
    let (x, p) = quadrature_ops(dim + 2)?;
    let full = p.entries() + x.entries() * x.entries() * C64::new(3.0 * gamma_c, 0.0);
    OperatorMatrix::hermitian(linalg::crop(&full, dim))
}

/// Variance decomposition of the output p quadrature for independent input,
/// squeezed and ancilla modes. Mode 1 enters through `⟨x₁²⟩ = s²/2` and
/// `⟨x₁⁴⟩ = 3⟨x₁²⟩²`.
pub fn noise_budget(
    input: &StateVector,
    squeeze_db: f64,
    ancilla: &ResolvedAncilla,
    config: &GateConfig,
) -> Result<NoiseBudget> {
    config.validate()?;
    let (t1, t2, r1, r2, g) = (config.t1, config.t2, config.r1(), config.r2(), config.gamma);
    let gc = config.gamma_c();
    let (m1, m2) = operator_moments(input, 2, |d| cubic_shift_operator(gc, d))?;
    let ideal = (m2 - m1 * m1) / t1;

    let raw = ancilla.state()?.normalized()?;
    let (_, var_nlq) = nlq_moments(&raw, ancilla.lambda / g.cbrt(), g, ancilla.p0)?;
    let anc = r1 * t2 / r2 * var_nlq / t1;

    let (_, x0_sq) = operator_moments(input, 1, |d| Ok(quadrature_ops(d)?.0))?;
    let s = 10f64.powf(-squeeze_db / 20.0);
    let v = 0.5 * s * s;
    let a = 0.5 * (t1 / r1).sqrt();
    let c = 6.0 * g * r1 * t1.sqrt() * (t2 / r2).powf(1.5);
    let squeezer = c * c * (x0_sq * v + 2.0 * a * a * v * v) / t1;

    Ok(NoiseBudget { ideal, ancilla: anc, squeezer, total: ideal + anc + squeezer })
}
