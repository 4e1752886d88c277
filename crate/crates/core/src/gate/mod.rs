//! The adaptive cubic gate: input mode 0, x-squeezed mode 1, non-Gaussian
//! ancilla mode 2; BS(T₁) on (0,1), BS(T₂) on (1,2), x-homodyne on 1′, a
//! q-dependent rotated homodyne on 2′ and a p displacement on 0′.

mod batch;
mod budget;
mod config;
mod engine_fock;
mod engine_grid;
mod heisenberg;
mod record;
mod target;

pub use batch::{
    run_gate_batch, run_gate_batch_detailed, run_gate_shot, shot_rng, GateRun, GateRunSummary, GateSetup,
    OutputSummary, SampleMoments, ShotFailure,
};
pub use budget::{noise_budget, NoiseBudget};
pub use config::{AncillaSpec, AncillaState, Engine, GateConfig, PreSqueeze, ResolvedAncilla, TargetFrame};
pub use engine_fock::{prepared_ancilla, FockEngine, LEAKAGE_TOLERANCE};
pub use engine_grid::GridEngine;
pub use heisenberg::{
    adaptive_theta, balanced_output, circuit_output, closed_form_output, feedforward_displacement,
    verify_balanced_reduction, verify_heisenberg_identity, PhasePoint,
};
pub use record::{GateShotRecord, OutputMoments};
pub use target::{cubic_phase_state, ideal_cubic_output, TargetWavefunction, TARGET_MARGIN};
