use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Engine, GateConfig, ResolvedAncilla};
use super::engine_fock::FockEngine;
use super::engine_grid::GridEngine;
use super::record::GateShotRecord;
use crate::error::{CubistError, Result};
use crate::fock::StateVector;

#[derive(Debug, Clone)]
enum Simulator {
    Grid(GridEngine),
    Fock(Box<FockEngine>),
}

/// Everything a shot needs, resolved once and shared read-only across shots.
#[derive(Debug, Clone)]
pub struct GateSetup {
    config: GateConfig,
    ancilla: ResolvedAncilla,
    simulator: Simulator,
}

impl GateSetup {
    pub fn new(input: &StateVector, config: &GateConfig) -> Result<Self> {
        config.validate()?;
        let ancilla = ResolvedAncilla::resolve(config)?;
        Self::with_ancilla(input, config, ancilla)
    }

    /// Skips ancilla resolution, e.g. to reuse one optimizer result.
    pub fn with_ancilla(input: &StateVector, config: &GateConfig, ancilla: ResolvedAncilla) -> Result<Self> {
        config.validate()?;
        let simulator = match config.engine {
            Engine::Grid => Simulator::Grid(GridEngine::new(input, config, &ancilla)?),
            Engine::Fock => Simulator::Fock(Box::new(FockEngine::new(input, config, &ancilla)?)),
        };
        Ok(GateSetup { config: config.clone(), ancilla, simulator })
    }

    pub fn config(&self) -> &GateConfig {
        &self.config
    }

    pub fn ancilla(&self) -> &ResolvedAncilla {
        &self.ancilla
    }

    pub fn shot<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<GateShotRecord> {
        match &self.simulator {
            Simulator::Grid(e) => e.shot(rng),
            Simulator::Fock(e) => e.shot(rng),
        }
    }

    /// Output for prescribed detector outcomes.
    pub fn conditional_output(&self, q: f64, y: f64) -> Result<GateShotRecord> {
        match &self.simulator {
            Simulator::Grid(e) => e.conditional_output(q, y),
            Simulator::Fock(e) => e.conditional_output(q, y),
        }
    }

    /// Runs shots `0..config.shots` on the current rayon pool.
    pub fn run(&self) -> GateRun {
        let outcomes: Vec<std::result::Result<GateShotRecord, String>> = (0..self.config.shots)
            .into_par_iter()
            .map(|k| self.shot(&mut shot_rng(self.config.seed, k as u64)).map_err(|e| e.to_string()))
            .collect();
        let summary = GateRunSummary::from_outcomes(&self.config, &self.ancilla, &outcomes);
        GateRun { summary, outcomes }
    }
}

/// Generator for shot `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn shot_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One shot with a caller-supplied generator. Resolves the ancilla each call;
/// use [`GateSetup`] for repeated shots.
pub fn run_gate_shot<R: rand::Rng + ?Sized>(
    input: &StateVector,
    config: &GateConfig,
    rng: &mut R,
) -> Result<GateShotRecord> {
    GateSetup::new(input, config)?.shot(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
}

impl SampleMoments {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        if values.is_empty() {
            return SampleMoments { mean: f64::NAN, variance: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n;
        let variance = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        SampleMoments { mean, variance }
    }
}

/// Shot-averaged output moments. `var_x`, `var_p` are the unconditional
/// variances `E⟨Q²⟩ − (E⟨Q⟩)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputSummary {
    pub mean_x: f64,
    pub mean_x_sq: f64,
    pub mean_p: f64,
    pub mean_p_sq: f64,
    pub var_x: f64,
    pub var_p: f64,
    /// Delta-method standard errors of `var_x`, `var_p`.
    pub var_x_std_error: f64,
    pub var_p_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotFailure {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRunSummary {
    pub config: GateConfig,
    pub ancilla: ResolvedAncilla,
    pub gamma_c: f64,
    pub n_shots: usize,
    pub n_completed: usize,
    pub n_failed: usize,
    pub mean_fidelity: f64,
    pub fidelity_std: f64,
    /// `fidelity_std / √n_completed`
    pub std_error: f64,
    pub q: SampleMoments,
    pub y: SampleMoments,
    pub output: OutputSummary,
    pub failures: Vec<ShotFailure>,
}

fn variance_with_error(first: &[f64], second: &[f64]) -> (f64, f64) {
    let n = first.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let m1 = first.iter().sum::<f64>() / n as f64;
    let m2 = second.iter().sum::<f64>() / n as f64;
    // influence of one shot on m2 − m1²
    let infl: Vec<f64> = first.iter().zip(second).map(|(a, b)| b - 2.0 * m1 * a).collect();
    let se = SampleMoments::of(&infl).variance.sqrt() / (n as f64).sqrt();
    (m2 - m1 * m1, se)
}

impl GateRunSummary {
    pub fn from_outcomes(
        config: &GateConfig,
        ancilla: &ResolvedAncilla,
        outcomes: &[std::result::Result<GateShotRecord, String>],
    ) -> Self {
        let ok: Vec<&GateShotRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        let failures: Vec<ShotFailure> = outcomes
            .iter()
            .enumerate()
            .filter_map(|(index, o)| o.as_ref().err().map(|m| ShotFailure { index, message: m.clone() }))
            .collect();
        let pick = |f: fn(&GateShotRecord) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
        let fid = SampleMoments::of(&pick(|r| r.fidelity));
        let n = ok.len();
        let fidelity_std = fid.variance.sqrt();
        let xs = pick(|r| r.moments.x_mean);
        let xs2 = pick(|r| r.moments.x_sq);
        let ps = pick(|r| r.moments.p_mean);
        let ps2 = pick(|r| r.moments.p_sq);
        let (var_x, var_x_se) = variance_with_error(&xs, &xs2);
        let (var_p, var_p_se) = variance_with_error(&ps, &ps2);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        GateRunSummary {
            config: config.clone(),
            ancilla: ancilla.clone(),
            gamma_c: config.gamma_c(),
            n_shots: outcomes.len(),
            n_completed: n,
            n_failed: failures.len(),
            mean_fidelity: fid.mean,
            fidelity_std,
            std_error: fidelity_std / (n as f64).sqrt(),
            q: SampleMoments::of(&pick(|r| r.q)),
            y: SampleMoments::of(&pick(|r| r.y)),
            output: OutputSummary {
                mean_x: mean(&xs),
                mean_x_sq: mean(&xs2),
                mean_p: mean(&ps),
                mean_p_sq: mean(&ps2),
                var_x,
                var_p,
                var_x_std_error: var_x_se,
                var_p_std_error: var_p_se,
            },
            failures,
        }
    }

    pub fn failure_rate(&self) -> f64 {
        self.n_failed as f64 / self.n_shots.max(1) as f64
    }
}

/// Summary plus the per-shot outcomes in shot order.
#[derive(Debug, Clone)]
pub struct GateRun {
    pub summary: GateRunSummary,
    pub outcomes: Vec<std::result::Result<GateShotRecord, String>>,
}

impl GateRun {
    /// `index,q,theta,y,p_disp,fidelity`; failed shots keep their index with empty fields.
    pub fn shots_csv(&self) -> String {
        let mut out = String::from("index,q,theta,y,p_disp,fidelity\n");
        for (k, o) in self.outcomes.iter().enumerate() {
            match o {
                Ok(r) => out.push_str(&format!(
                    "{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    r.q, r.theta, r.y, r.p_disp, r.fidelity
                )),
                Err(_) => out.push_str(&format!("{k},,,,,\n")),
            }
        }
        out
    }
}

/// Full batch with per-shot records.
pub fn run_gate_batch_detailed(input: &StateVector, config: &GateConfig) -> Result<GateRun> {
    if config.shots == 0 {
        return Err(CubistError::InvalidArgument("shots must be >= 1".into()));
    }
    Ok(GateSetup::new(input, config)?.run())
}

/// Runs `config.shots` shots; per-shot failures are counted, not fatal.
pub fn run_gate_batch(input: &StateVector, config: &GateConfig) -> Result<GateRunSummary> {
    Ok(run_gate_batch_detailed(input, config)?.summary)
}
