//! Self-checks runnable from the command line: sampler goodness of fit and
//! algebraic identities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ancilla::{optimize_ancilla, OptimizerConfig};
use crate::error::{invalid, Result};
use crate::fock::{homodyne_pdf, HomodyneSampler, StateVector};
use crate::gate::{verify_balanced_reduction, verify_heisenberg_identity, GateConfig};
use crate::phase_space::{airy, generalized_projector_wigner, projector_wigner, wigner_of_state, ProjectorParams, WignerGrid};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Sampler,
    All,
}

impl std::str::FromStr for Suite {
    type Err = crate::CubistError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Suite::Identities),
            "sampler" => Ok(Suite::Sampler),
            "all" => Ok(Suite::All),
            _ => Err(invalid(format!("unknown suite '{s}'"))),
        }
    }
}

/// One check. `passed` is `value < threshold` for residuals and
/// `value > threshold` for p-values (see `kind`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Residual,
    PValue,
}

impl Check {
    fn residual(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), kind: CheckKind::Residual, value, threshold, passed: value < threshold }
    }

    fn p_value(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), kind: CheckKind::PValue, value, threshold, passed: value > threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub const SAMPLER_DRAWS: usize = 100_000;
pub const SAMPLER_BINS: usize = 40;
pub const P_VALUE_FLOOR: f64 = 1e-3;

/// Pearson chi-square of homodyne draws against the analytic marginal,
/// using bins of equal expected probability. Returns `(statistic, p-value)`.
pub fn homodyne_chi_square<R: Rng + ?Sized>(
    state: &StateVector,
    angle: f64,
    draws: usize,
    bins: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if bins < 2 || draws < bins {
        return Err(invalid("chi-square needs at least 2 bins and as many draws"));
    }
    let sampler = HomodyneSampler::new(state, 0, angle, None)?;
    // analytic CDF on a fine trapezoid grid
    let sigma = state.quadrature_second_moment(0, angle)?.sqrt();
    let n = 40_001;
    let (lo, hi) = (-10.0 * sigma, 10.0 * sigma);
    let h = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|k| lo + h * k as f64).collect();
    let pdf = homodyne_pdf(state, 0, angle, &xs)?;
    let mut cdf = vec![0.0; n];
    for k in 1..n {
        cdf[k] = cdf[k - 1] + 0.5 * h * (pdf[k] + pdf[k - 1]);
    }
    let total = cdf[n - 1];
    // interior edges at equal-probability quantiles
    let mut edges = Vec::with_capacity(bins - 1);
    let mut k = 0;
    for b in 1..bins {
        let target = total * b as f64 / bins as f64;
        while cdf[k + 1] < target {
            k += 1;
        }
        let t = (target - cdf[k]) / (cdf[k + 1] - cdf[k]);
        edges.push(xs[k] + t * h);
    }
    let mut counts = vec![0usize; bins];
    for _ in 0..draws {
        let v = sampler.draw(rng);
        counts[edges.partition_point(|&e| e <= v)] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((bins - 1) as f64).map_err(|e| invalid(e.to_string()))?;
    Ok((stat, dist.sf(stat)))
}

/// Random normalized state on `dim` levels with Gaussian complex coefficients.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    let coeffs: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    StateVector::new(vec![dim], coeffs)?.normalized()
}

pub fn sampler_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = random_state(6, &mut rng)?;
    let cases = [
        ("vacuum x", StateVector::vacuum(8)?, 0.0),
        ("fock 1 x", StateVector::fock(8, 1)?, 0.0),
        ("random dim 6, angle pi/3", random, std::f64::consts::FRAC_PI_3),
    ];
    let mut checks = Vec::new();
    for (name, state, angle) in cases {
        let (_, p) = homodyne_chi_square(&state, angle, SAMPLER_DRAWS, SAMPLER_BINS, &mut rng)?;
        checks.push(Check::p_value(format!("chi-square {name}"), p, P_VALUE_FLOOR));
    }
    checks.push(Check::residual("Ai(0)", (airy(0.0)? - 0.355_028_053_887_817_2).abs(), 1e-10));
    Ok(checks)
}

/// Unbalanced projector at `T = 1/2, θ = 0` against the balanced one.
pub fn projector_reduction_residual(ancilla: &StateVector, q: f64, y: f64) -> Result<f64> {
    let (x, p) = WignerGrid::default_axes();
    let w = wigner_of_state(ancilla, x, p)?;
    let balanced = projector_wigner(&w, q, y, None)?;
    let params = ProjectorParams::new(q, y, 0.5, 0.0)?;
    let general = generalized_projector_wigner(&w, &params, Some((balanced.x_axis, balanced.p_axis)))?;
    Ok(balanced.values.iter().zip(&general.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

pub fn identity_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let balanced = GateConfig { seed, ..Default::default() };
    checks.push(Check::residual(
        "heisenberg balanced",
        verify_heisenberg_identity(&balanced, 1000)?,
        1e-10,
    ));
    checks.push(Check::residual("closed form equals balanced formula", verify_balanced_reduction(0.1, 1000, seed), 1e-10));
    for k in 0..5 {
        let config = GateConfig {
            gamma: rng.random_range(0.01..0.5),
            t1: rng.random_range(0.1..0.9),
            t2: rng.random_range(0.1..0.9),
            seed: seed.wrapping_add(k + 1),
            ..Default::default()
        };
        let r = verify_heisenberg_identity(&config, 1000)?;
        checks.push(Check::residual(
            format!("heisenberg T1={:.3} T2={:.3} gamma={:.3}", config.t1, config.t2, config.gamma),
            r,
            1e-10,
        ));
    }
    let opt3 = optimize_ancilla(3, &OptimizerConfig::default())?.state()?;
    for (name, state) in [("vacuum", StateVector::vacuum(4)?), ("fock 1", StateVector::fock(4, 1)?), ("optimized 3", opt3)] {
        let r = projector_reduction_residual(&state, 0.3, -0.2)?;
        checks.push(Check::residual(format!("projector reduction {name}"), r, 1e-6));
    }
    Ok(checks)
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Identities | Suite::All) {
        checks.extend(identity_suite(seed)?);
    }
    if matches!(suite, Suite::Sampler | Suite::All) {
        checks.extend(sampler_suite(seed)?);
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { suite, seed, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_pass() {
        let r = run_suite(Suite::Identities, 7).unwrap();
        assert!(r.passed, "{:#?}", r.checks);
    }
}
