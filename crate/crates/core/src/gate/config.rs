use serde::{Deserialize, Serialize};

use crate::ancilla::{best_prescale, nlq_stats, optimize_ancilla, OptimizerConfig};
use crate::error::{invalid, CubistError, Result};
use crate::fock::StateVector;
use crate::grid_io::complex_pairs;
use crate::C64;

/// Photon-number content of the non-Gaussian ancilla before its Gaussian
/// pre-squeeze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AncillaState {
    /// Vacuum; with the automatic pre-squeeze this is the best Gaussian ancilla.
    Gaussian,
    /// Output of the ancilla optimizer for cutoff `n`.
    Optimized { n: usize },
    /// Explicit Fock coefficients (normalized on use).
    Explicit {
        #[serde(with = "complex_pairs")]
        coefficients: Vec<C64>,
    },
}

/// Pre-squeeze factor `λ` of the ancilla wavefunction `√λ ψ(λx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PreSqueeze {
    /// `λ = λ′ γ̃^{1/3}` with `λ′` from the optimizer (optimized ancillas) or
    /// the variance-minimizing rescale of the state (all others).
    #[default]
    Auto,
    Fixed(f64),
}

/// Ancilla choice together with its Gaussian preparation.
///
/// `gamma_tilde` is the cubic strength the ancilla is prepared for; it
/// defaults to the gate's `gamma`, which is what the ancilla noise term
/// `p₂ − 3γx₂²` of the gate output asks for. `p0` defaults to the value
/// cancelling `⟨λP − 3γ̃X²/λ²⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncillaSpec {
    #[serde(flatten)]
    pub state: AncillaState,
    #[serde(default)]
    pub pre_squeeze: PreSqueeze,
    #[serde(default)]
    pub p0: Option<f64>,
    #[serde(default)]
    pub gamma_tilde: Option<f64>,
}

impl AncillaSpec {
    pub fn new(state: AncillaState) -> Self {
        AncillaSpec { state, pre_squeeze: PreSqueeze::Auto, p0: None, gamma_tilde: None }
    }

    pub fn gaussian() -> Self {
        Self::new(AncillaState::Gaussian)
    }

    pub fn optimized(n: usize) -> Self {
        Self::new(AncillaState::Optimized { n })
    }

    /// `vacuum`, `gaussian`, `optimized-N` (also `optimized(N)`).
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        if t == "vacuum" || t == "gaussian" {
            return Ok(Self::gaussian());
        }
        let rest = t
            .strip_prefix("optimized-")
            .or_else(|| t.strip_prefix("optimized(").and_then(|r| r.strip_suffix(')')))
            .or_else(|| t.strip_prefix('n'));
        match rest.and_then(|r| r.parse::<usize>().ok()) {
            Some(n) => Ok(Self::optimized(n)),
            None => Err(CubistError::Parse(format!(
                "unknown ancilla '{text}' (expected vacuum, gaussian or optimized-N)"
            ))),
        }
    }

    /// Highest Fock level of the raw ancilla, when known without solving.
    pub fn cutoff(&self) -> usize {
        match &self.state {
            AncillaState::Gaussian => 0,
            AncillaState::Optimized { n } => *n,
            AncillaState::Explicit { coefficients } => coefficients.len().saturating_sub(1),
        }
    }
}

/// How the output is compared with the ideal gate. Fidelity is invariant
/// under the common unitary, so both frames give the same number up to
/// rounding; the choice only fixes which pair of wavefunctions is overlapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetFrame {
    /// Output vs `S(√T₁) e^{iγ_c x³}|ψ⟩`.
    #[default]
    Squeezed,
    /// `S(√T₁)⁻¹` output vs `e^{iγ_c x³}|ψ⟩`.
    Unsqueezed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Position-grid wavefunctions; exact up to sampling resolution at any squeezing.
    #[default]
    Grid,
    /// Truncated Fock space; only practical for mild squeezing.
    Fock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub gamma: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    /// Mode-1 x-squeezing in dB.
    pub squeeze_db: f64,
    pub ancilla: AncillaSpec,
    /// Per-mode truncation (input, squeezed, ancilla). `None` means
    /// `(14, 14, N + 9)`. The grid engine only uses the first entry, for the
    /// Fock expansion of the output.
    pub dims: Option<[usize; 3]>,
    pub seed: u64,
    pub shots: usize,
    pub engine: Engine,
    pub feedforward: bool,
    pub target: TargetFrame,
}

impl Default for GateConfig {
    fn default() -> Self {
        GateConfig {
            gamma: 0.1,
            t1: 0.5,
            t2: 0.5,
            squeeze_db: 15.0,
            ancilla: AncillaSpec::optimized(3),
            dims: None,
            seed: 0,
            shots: 500,
            engine: Engine::Grid,
            feedforward: true,
            target: TargetFrame::Squeezed,
        }
    }
}

impl GateConfig {
    pub const MIN_DIM: usize = 8;

    pub fn r1(&self) -> f64 {
        1.0 - self.t1
    }

    pub fn r2(&self) -> f64 {
        1.0 - self.t2
    }

    /// `γ_c = γ (R₁T₂/R₂)^{3/2}`, the cubic strength of the target.
    pub fn gamma_c(&self) -> f64 {
        self.gamma * (self.r1() * self.t2 / self.r2()).powf(1.5)
    }

    /// Amplitude squeeze factor of mode 1, `10^{−dB/20}`.
    pub fn squeeze_factor(&self) -> f64 {
        10f64.powf(-self.squeeze_db / 20.0)
    }

    pub fn resolved_dims(&self) -> [usize; 3] {
        self.dims.unwrap_or([14, 14, self.ancilla.cutoff() + 9])
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma == 0.0 || !self.gamma.is_finite() {
            return Err(invalid(format!("gamma must be finite and non-zero, got {}", self.gamma)));
        }
        for (name, t) in [("T1", self.t1), ("T2", self.t2)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid(format!("{name} must lie in (0,1), got {t}")));
            }
        }
        if !(self.squeeze_db >= 0.0 && self.squeeze_db.is_finite()) {
            return Err(invalid(format!("squeeze_db must be finite and >= 0, got {}", self.squeeze_db)));
        }
        if let Some(d) = self.resolved_dims().iter().find(|&&d| d < Self::MIN_DIM) {
            return Err(invalid(format!("every mode needs dim >= {}, got {d}", Self::MIN_DIM)));
        }
        if self.shots == 0 {
            return Err(invalid("shots must be >= 1"));
        }
        if let PreSqueeze::Fixed(l) = self.ancilla.pre_squeeze {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("pre-squeeze must be positive, got {l}")));
            }
        }
        if let Some(g) = self.ancilla.gamma_tilde {
            if g == 0.0 || !g.is_finite() {
                return Err(invalid("gamma_tilde must be finite and non-zero"));
            }
        }
        Ok(())
    }
}

/// Ancilla after resolving the automatic choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAncilla {
    #[serde(with = "complex_pairs")]
    pub coefficients: Vec<C64>,
    pub lambda: f64,
    pub p0: f64,
    pub gamma_tilde: f64,
    /// `λ / γ̃^{1/3}`
    pub lambda_prime: f64,
}

impl ResolvedAncilla {
    pub fn resolve(config: &GateConfig) -> Result<Self> {
        let spec = &config.ancilla;
        let gamma_tilde = spec.gamma_tilde.unwrap_or(config.gamma);
        let g3 = gamma_tilde.cbrt();
        let (coefficients, auto_prime) = match &spec.state {
            AncillaState::Gaussian => {
                let vac = StateVector::vacuum(2)?;
                (vec![C64::new(1.0, 0.0)], best_prescale(&vac)?)
            }
            AncillaState::Optimized { n } => {
                let opt = optimize_ancilla(*n, &OptimizerConfig::default())?;
                (opt.coefficients, opt.lambda_opt)
            }
            AncillaState::Explicit { coefficients } => {
                let s = StateVector::from_coefficients(coefficients)?.normalized()?;
                let l = best_prescale(&s)?;
                (s.amplitudes().to_vec(), l)
            }
        };
        let lambda = match spec.pre_squeeze {
            PreSqueeze::Auto => auto_prime * g3.abs(),
            PreSqueeze::Fixed(l) => l,
        };
        let lambda_prime = lambda / g3;
        let p0 = match spec.p0 {
            Some(p) => p,
            None => {
                let state = StateVector::from_coefficients(&coefficients)?;
                let (mean, _) = nlq_stats(&state, lambda_prime)?;
                -g3 * mean
            }
        };
        Ok(ResolvedAncilla { coefficients, lambda, p0, gamma_tilde, lambda_prime })
    }

    pub fn state(&self) -> Result<StateVector> {
        StateVector::from_coefficients(&self.coefficients)
    }
}
