//! Numerical laboratory for the linear Boltzmann equation of a tracer in a
//! dilute gas, in both its classical and quantum (density-matrix) forms, and
//! for the chain of diffusive limits it supports:
//!
//! * heavy-tracer limit of the collision kernel, which turns the jump process
//!   into Kramers-type drift-diffusion in momentum,
//! * the quantum correction to that limit, a position-diffusion term with
//!   coefficient `D_xx = eta * beta * hbar^2 / (16 M)`,
//! * the high-friction (Smoluchowski) limit in position space with corrected
//!   diffusion coefficient `1/(eta M beta) + D_xx`.
//!
//! The same physics is computed three independent ways so the routes can be
//! cross-validated: Monte Carlo jump-process sampling ([`collision`]), grid
//! PDE solvers ([`fokker_planck`]), and exact Gaussian moment propagation
//! plus momentum-grid density matrices ([`quantum`]). [`physics`] holds the
//! shared kernel definitions and transport coefficients; [`runner`] wires
//! everything into config-driven experiments for the `qlbe` binary.

pub mod collision;
pub mod fokker_planck;
pub mod physics;
pub mod quantum;
pub mod runner;

pub use physics::{
    CrossSectionModel, PhysicalParams, PhysicsError, StructureFactorForm,
};
