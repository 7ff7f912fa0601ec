//! Tracking controllers: the standard PD+ law, the structure-preserving
//! projector-based nat-PD+ law, its variance-adaptive extension, and the
//! closed-loop wiring (including the curvature-space reduction for the rod).

mod closed_loop;
mod gains;
mod laws;
mod primitives;

pub use closed_loop::ClosedLoop;
pub use gains::{adaptive_gain, GainAdaptation};
pub use laws::{
    effective_gains, nat_pdp_torque, pdp_torque, tracking_errors, ControllerKind, ControllerSpec,
    Reference,
};
pub use primitives::{heaviside, projector, ProjectorDomainError};
