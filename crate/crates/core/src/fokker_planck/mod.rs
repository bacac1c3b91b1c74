//! Grid PDE solvers for the Kramers, quantum-corrected Kramers, and
//! Smoluchowski limits.
//!
//! The phase-space solver splits each step into streaming, momentum
//! friction-diffusion (Chang-Cooper flux form, exact discrete Maxwell
//! equilibrium), and optional position diffusion. The overdamped solver is
//! a plain periodic heat equation with the corrected diffusion coefficient.
//! [`high_friction_compare`] ties the two together.

mod collision_op;
mod grid;
mod kramers;
mod smoluchowski;
mod transport;

pub use collision_op::MomentumOperator;
pub use grid::{PhaseMoments, PhaseSpaceField, PhaseSpaceGrid, PositionField};
pub use kramers::{
    kramers_solve, max_stable_dt, quantum_kramers_solve, KramersRun, MomentSeries,
};
pub use smoluchowski::{
    high_friction_compare, max_stable_dt_position, smoluchowski_solve, HighFrictionComparison,
    HighFrictionPoint, PositionMoments, SmoluchowskiRun,
};
pub use transport::TransportScheme;

use crate::physics::PhysicsError;

/// Failure modes of the grid solvers.
#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    /// The requested timestep violates the explicit stability bound; the
    /// largest safe value for this grid is included.
    #[error("timestep {dt:.6e} exceeds the stability bound; largest safe value here is {max_dt:.6e}")]
    UnstableTimestep { dt: f64, max_dt: f64 },
}
