//! Classical-variable form of the gate: quadratures as numbers pushed through
//! the beam splitters, the adaptive measurement and the feedforward.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::GateConfig;
use crate::error::{CubistError, Result};
use crate::gaussian::symplectic_of_circuit;

/// Phase-space point `(x₀, p₀, x₁, p₁, x₂, p₂)`.
pub type PhasePoint = [f64; 6];

/// `θ = arctan(6T₂γq/√R₂)`.
pub fn adaptive_theta(q: f64, config: &GateConfig) -> f64 {
    (6.0 * config.t2 * config.gamma * q / config.r2().sqrt()).atan()
}

/// `p_disp = √R₁ y/(√(T₁R₂) cos θ) + 3γ√(R₁T₂)(T₂ − R₂) q²/(√T₁ R₂^{3/2})`.
pub fn feedforward_displacement(q: f64, y: f64, theta: f64, config: &GateConfig) -> Result<f64> {
    let c = theta.cos();
    if c.abs() < 1e-12 {
        return Err(CubistError::SingularPhase(c));
    }
    let (t1, t2, r1, r2, g) = (config.t1, config.t2, config.r1(), config.r2(), config.gamma);
    let linear = r1.sqrt() * y / ((t1 * r2).sqrt() * c);
    let quadratic = 3.0 * g * (r1 * t2).sqrt() * (t2 - r2) * q * q / (t1.sqrt() * r2.powf(1.5));
    Ok(linear + quadratic)
}

/// Output `(x₀″, p₀″)` by running the circuit step by step: beam splitters,
/// `q = x₁′`, `θ(q)`, `y = x₂′ sin θ + p₂′ cos θ`, then the displacement.
pub fn circuit_output(point: &PhasePoint, config: &GateConfig) -> Result<(f64, f64)> {
    let map = symplectic_of_circuit(config.t1, config.t2)?;
    let out = map.apply(point);
    let q = out[2];
    let theta = adaptive_theta(q, config);
    let y = out[4] * theta.sin() + out[5] * theta.cos();
    let p_disp = feedforward_displacement(q, y, theta, config)?;
    Ok((out[0], out[1] + p_disp))
}

/// Closed-form output quadratures of the unbalanced gate.
pub fn closed_form_output(point: &PhasePoint, config: &GateConfig) -> (f64, f64) {
    let [x0, p0, x1, _p1, x2, p2] = *point;
    let (t1, t2, r1, r2, g) = (config.t1, config.t2, config.r1(), config.r2(), config.gamma);
    let x = t1.sqrt() * (x0 - (r1 / t1).sqrt() * x1);
    let ideal = p0 + 3.0 * g * (r1 * t2 / r2).powf(1.5) * x0 * x0;
    let ancilla = (r1 * t2 / r2).sqrt() * (p2 - 3.0 * g * x2 * x2);
    let residual = 6.0 * g * r1 * t1.sqrt() * (t2 / r2).powf(1.5) * (x0 * x1 + 0.5 * (t1 / r1).sqrt() * x1 * x1);
    (x, (ideal + ancilla + residual) / t1.sqrt())
}

/// Output quadratures of the balanced gate.
pub fn balanced_output(point: &PhasePoint, gamma: f64) -> (f64, f64) {
    let [x0, p0, x1, _p1, x2, p2] = *point;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = s * x0 - s * x1;
    let p = 2f64.sqrt() * (p0 + 3.0 * gamma / (2.0 * 2f64.sqrt()) * x0 * x0)
        + (p2 - 3.0 * gamma * x2 * x2)
        + 3.0 * gamma * (x0 * x1 + 0.5 * x1 * x1);
    (x, p)
}

fn random_points(seed: u64, trials: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let mut pt = [0.0; 6];
            for v in pt.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = 2.0 * z;
            }
            pt
        })
        .collect()
}

/// Largest difference between [`circuit_output`] and [`closed_form_output`]
/// over `trials` Gaussian-distributed points (seeded by `config.seed`).
pub fn verify_heisenberg_identity(config: &GateConfig, trials: usize) -> Result<f64> {
    config.validate()?;
    let mut worst = 0.0f64;
    for pt in random_points(config.seed, trials.max(1)) {
        let (xa, pa) = circuit_output(&pt, config)?;
        let (xb, pb) = closed_form_output(&pt, config);
        worst = worst.max((xa - xb).abs()).max((pa - pb).abs());
    }
    Ok(worst)
}

/// Largest difference between the closed form at `T₁ = T₂ = 1/2` and the
/// balanced output formula.
pub fn verify_balanced_reduction(gamma: f64, trials: usize, seed: u64) -> f64 {
    let config = GateConfig { gamma, t1: 0.5, t2: 0.5, ..Default::default() };
    random_points(seed, trials.max(1))
        .iter()
        .map(|pt| {
            let (xa, pa) = closed_form_output(pt, &config);
            let (xb, pb) = balanced_output(pt, gamma);
            (xa - xb).abs().max((pa - pb).abs())
        })
        .fold(0.0, f64::max)
}
