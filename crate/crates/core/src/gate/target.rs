use super::config::{GateConfig, TargetFrame};
use crate::error::{CubistError, Result};
use crate::fock::{hermite_functions, quadrature_ops, OperatorMatrix, StateVector};
use crate::gaussian::squeeze_op;
use crate::linalg;
use crate::C64;

/// Fock levels added on top of the input while applying the target unitaries.
pub const TARGET_MARGIN: usize = 40;

/// `e^{iγ x³}|ψ⟩` on `dim` levels, from the eigenbasis of the truncated X.
/// The input is padded to `dim` first; `dim` must exceed the input's by at
/// least 8 since the phase couples `n` to `n ± 3`.
pub fn cubic_phase_state(input: &StateVector, gamma: f64, dim: usize) -> Result<StateVector> {
    if dim < input.dim() + 8 {
        return Err(crate::error::invalid(format!(
            "cubic phase needs at least 8 extra levels ({} -> {dim})",
            input.dim()
        )));
    }
    let (padded, _) = input.resized(dim)?;
    let (x, _) = quadrature_ops(dim)?;
    let (nodes, vecs) = linalg::hermitian_eigen(x.entries());
    let phases = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        nodes.iter().map(|&v| C64::from_polar(1.0, gamma * v * v * v)),
    ));
    let u = &vecs * phases * vecs.adjoint();
    padded.apply(&OperatorMatrix::new(u)?, 0)
}

/// `S(√T₁) e^{iγ_c x³}|input⟩`, cropped to the output dimension of the config
/// and renormalized. Errors if the crop discards more than 1e−3.
pub fn ideal_cubic_output(input: &StateVector, config: &GateConfig) -> Result<StateVector> {
    config.validate()?;
    input.require_normalized()?;
    let out_dim = config.resolved_dims()[0];
    let work = input.dim().max(out_dim) + TARGET_MARGIN;
    let cubic = cubic_phase_state(input, config.gamma_c(), work)?;
    let squeezed = cubic.apply(&squeeze_op(config.t1.sqrt(), work)?, 0)?;
    let (mut out, lost) = squeezed.resized(out_dim)?;
    if lost > 1e-3 {
        return Err(CubistError::Truncation { leakage: lost, tolerance: 1e-3 });
    }
    out.normalize()?;
    Ok(out)
}

/// Position wavefunction of the ideal output, for overlaps on a grid.
#[derive(Debug, Clone)]
pub struct TargetWavefunction {
    coeffs: Vec<C64>,
    gamma_c: f64,
    scale: f64,
}

impl TargetWavefunction {
    pub fn new(input: &StateVector, config: &GateConfig) -> Result<Self> {
        input.require_normalized()?;
        Ok(TargetWavefunction {
            coeffs: input.amplitudes().to_vec(),
            gamma_c: config.gamma_c(),
            scale: config.t1.sqrt(),
        })
    }

    /// `e^{iγ_c u³} ψ(u)` at `u`.
    pub fn cubic(&self, u: f64, herm: &mut Vec<f64>) -> Result<C64> {
        herm.resize(self.coeffs.len(), 0.0);
        hermite_functions(u, herm)?;
        let psi: C64 = self.coeffs.iter().zip(herm.iter()).map(|(c, h)| c * h).sum();
        Ok(psi * C64::from_polar(1.0, self.gamma_c * u * u * u))
    }

    /// `Σ τ*(x_r) ψ(x_r) h` between the target and samples `psi` on the uniform
    /// nodes `xs` (spacing `h`), evaluated in the requested frame.
    pub fn overlap(&self, xs: &[f64], h: f64, psi: &[C64], frame: TargetFrame) -> Result<C64> {
        let s = self.scale;
        let mut herm = Vec::new();
        let mut acc = C64::new(0.0, 0.0);
        match frame {
            TargetFrame::Squeezed => {
                for (&x, &v) in xs.iter().zip(psi) {
                    acc += self.cubic(x / s, &mut herm)?.conj() / s.sqrt() * v;
                }
                Ok(acc * h)
            }
            TargetFrame::Unsqueezed => {
                // relabel the output onto u = x/s: ψ_u(u) = √s ψ(su), spacing h/s
                for (&x, &v) in xs.iter().zip(psi) {
                    acc += self.cubic(x / s, &mut herm)?.conj() * (v * s.sqrt());
                }
                Ok(acc * (h / s))
            }
        }
    }

    /// Position range holding the target up to `sigmas` standard deviations
    /// of the input position distribution.
    pub fn support(&self, x_mean: f64, x_sd: f64, sigmas: f64) -> (f64, f64) {
        let s = self.scale;
        (s * (x_mean - sigmas * x_sd), s * (x_mean + sigmas * x_sd))
    }

    /// Momentum bound of the target over the support: `(|p̄| + kσ_p + 3|γ_c| u²)/s`.
    pub fn bandwidth(&self, x_range: (f64, f64), p_mean: f64, p_sd: f64, sigmas: f64) -> f64 {
        let u = (x_range.0.abs().max(x_range.1.abs())) / self.scale;
        (p_mean.abs() + sigmas * p_sd + 3.0 * self.gamma_c.abs() * u * u) / self.scale
    }
}
