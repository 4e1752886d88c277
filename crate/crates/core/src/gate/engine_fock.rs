//! Truncated Fock-space engine. Exact within its cutoffs, which limits it to
//! mild mode-1 squeezing; used to cross-check the grid engine.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use rand::Rng;

use super::config::{GateConfig, ResolvedAncilla, TargetFrame};
use super::heisenberg::{adaptive_theta, feedforward_displacement};
use super::record::{GateShotRecord, OutputMoments};
use super::target::{cubic_phase_state, ideal_cubic_output, TARGET_MARGIN};
use crate::ancilla::operator_moments;
use crate::error::{invalid, CubistError, Result};
use crate::fock::{fidelity, homodyne_pdf, project_quadrature, quadrature_ops, tensor, GridSpec, HomodyneSampler, StateVector};
use crate::gaussian::{beam_splitter_op, displacement_op, squeeze_op, squeezed_vacuum};
use crate::sampling::TabulatedPdf;
use crate::C64;

/// Total truncation weight tolerated while preparing the joint state.
pub const LEAKAGE_TOLERANCE: f64 = 1e-4;
/// Levels added while displacing the output.
const DISPLACE_MARGIN: usize = 40;

#[derive(Debug, Clone)]
pub struct FockEngine {
    config: GateConfig,
    input: StateVector,
    joint: StateVector,
    q_table: TabulatedPdf,
    target: StateVector,
    /// Weight lost or parked in the top levels while preparing `joint`.
    pub preparation_leakage: f64,
}

/// Pre-squeezed, kicked ancilla `e^{ip₀x}√λ ψ(λx)` on `dim` levels.
pub fn prepared_ancilla(ancilla: &ResolvedAncilla, dim: usize) -> Result<(StateVector, f64)> {
    let raw = ancilla.state()?.normalized()?;
    let work = (2 * dim).max(raw.dim() + 40);
    let (padded, _) = raw.resized(work)?;
    let squeezed = padded.apply(&squeeze_op(1.0 / ancilla.lambda, work)?, 0)?;
    let kick = displacement_op(C64::new(0.0, ancilla.p0 / SQRT_2), work)?;
    let kicked = squeezed.apply(&kick.op, 0)?;
    let (mut out, lost) = kicked.resized(dim)?;
    out.normalize()?;
    Ok((out, lost))
}

impl FockEngine {
    pub fn new(input: &StateVector, config: &GateConfig, ancilla: &ResolvedAncilla) -> Result<Self> {
        config.validate()?;
        if input.n_modes() != 1 || input.is_scalar() {
            return Err(invalid("gate input must be a single-mode state"));
        }
        input.require_normalized()?;
        let [d0, d1, d2] = config.resolved_dims();
        let (mut m0, lost0) = input.resized(d0)?;
        m0.normalize()?;
        let (m1, lost1) = squeezed_vacuum(config.squeeze_factor(), d1)?;
        let (m2, lost2) = prepared_ancilla(ancilla, d2)?;
        let mut leakage = lost0 + lost1 + lost2;
        let joint = tensor(&[m0.clone(), m1, m2])?
            .apply_two(&beam_splitter_op(config.t1, d0, d1)?, 0, 1)?
            .apply_two(&beam_splitter_op(config.t2, d1, d2)?, 1, 2)?;
        for (mode, d) in [d0, d1, d2].into_iter().enumerate() {
            leakage += joint.tail_weight(mode, d - 2)?;
        }
        if leakage > LEAKAGE_TOLERANCE {
            return Err(CubistError::Truncation { leakage, tolerance: LEAKAGE_TOLERANCE });
        }
        let grid = GridSpec::auto(&joint, 1, 0.0)?;
        let nodes = grid.nodes();
        let pdf = homodyne_pdf(&joint, 1, 0.0, &nodes)?;
        let q_table = TabulatedPdf::new(nodes, pdf)?;
        if q_table.total_mass() < HomodyneSampler::MIN_MASS {
            return Err(CubistError::Coverage("first-detector grid misses part of the marginal".into()));
        }
        let target = ideal_cubic_output(&m0, config)?;
        Ok(FockEngine { config: config.clone(), input: m0, joint, q_table, target, preparation_leakage: leakage })
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GateShotRecord> {
        let q = self.q_table.sample(rng);
        let (cond, theta) = self.after_first(q)?;
        let sampler = HomodyneSampler::new(&cond, 1, FRAC_PI_2 - theta, None)?;
        let y = sampler.draw(rng);
        self.finish(q, theta, y, sampler.conditional(y)?)
    }

    pub fn conditional_output(&self, q: f64, y: f64) -> Result<GateShotRecord> {
        let (cond, theta) = self.after_first(q)?;
        let (mut out, density) = project_quadrature(&cond, 1, FRAC_PI_2 - theta, y)?;
        if !(density > 0.0) {
            return Err(CubistError::Coverage(format!("zero density at y = {y}")));
        }
        out.normalize()?;
        self.finish(q, theta, y, out)
    }

    fn after_first(&self, q: f64) -> Result<(StateVector, f64)> {
        let (mut cond, density) = project_quadrature(&self.joint, 1, 0.0, q)?;
        if !(density > 0.0) {
            return Err(CubistError::Coverage(format!("zero density at q = {q}")));
        }
        cond.normalize()?;
        Ok((cond, adaptive_theta(q, &self.config)))
    }

    fn finish(&self, q: f64, theta: f64, y: f64, out: StateVector) -> Result<GateShotRecord> {
        let p_disp = feedforward_displacement(q, y, theta, &self.config)?;
        let d0 = out.dim();
        let mut leakage = 0.0;
        let out = if self.config.feedforward {
            let work = d0 + DISPLACE_MARGIN;
            let (padded, _) = out.resized(work)?;
            let shifted = padded.apply(&displacement_op(C64::new(0.0, p_disp / SQRT_2), work)?.op, 0)?;
            let (mut cropped, lost) = shifted.resized(d0)?;
            leakage += lost;
            cropped.normalize()?;
            cropped
        } else {
            out
        };
        let fid = match self.config.target {
            TargetFrame::Squeezed => fidelity(&out, &self.target)?,
            TargetFrame::Unsqueezed => {
                let work = d0 + TARGET_MARGIN;
                let (padded, _) = out.resized(work)?;
                let back = padded.apply(&squeeze_op(1.0 / self.config.t1.sqrt(), work)?, 0)?;
                let cubic = cubic_phase_state(&self.input, self.config.gamma_c(), work)?;
                fidelity(&back, &cubic)?
            }
        };
        let (x_mean, x_sq) = operator_moments(&out, 1, |d| Ok(quadrature_ops(d)?.0))?;
        let (p_mean, p_sq) = operator_moments(&out, 1, |d| Ok(quadrature_ops(d)?.1))?;
        Ok(GateShotRecord {
            q,
            theta,
            y,
            p_disp,
            fidelity: fid,
            moments: OutputMoments { x_mean, x_sq, p_mean, p_sq },
            output_state: out,
            fock_leakage: leakage,
        })
    }
}
