//! Wigner functions, the Airy-form ideal cubic state and measurement projectors.

mod airy;
mod projector;
mod wigner;

pub use airy::airy;
pub use projector::{
    generalized_projector_wigner, projector_wigner, pure_projection_state, pure_projection_wavefunction,
    ProjectorParams,
};
pub use wigner::{
    ideal_cubic_wigner, wigner_of_state, wigner_of_state_mapped, wigner_point, WignerGrid,
};
