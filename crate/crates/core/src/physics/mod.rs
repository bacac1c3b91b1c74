//! Shared physical inputs of every solver in the crate: parameter set,
//! scattering cross-section models, the dynamic structure factor of the gas,
//! and the transport coefficients derived from them.

mod coefficients;
mod cross_section;
mod params;
mod structure_factor;
mod vector;

pub mod quadrature;

pub use coefficients::{
    friction_coefficient, friction_constant_sigma_closed_form, position_diffusion_coefficient,
    quantum_correction_ratio, smoluchowski_diffusion,
};
pub use cross_section::CrossSectionModel;
pub use params::PhysicalParams;
pub use structure_factor::{
    detailed_balance_residual, differential_cross_section, energy_transfer,
    log_structure_factor_energy, log_structure_factor_scalar, structure_factor,
    structure_factor_brownian, structure_factor_energy, structure_factor_mb,
    structure_factor_scalar, StructureFactorForm,
};
pub use vector::{MomentumVector, TransferVector, Vec3};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PhysicsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureConvergence { achieved: f64, requested: f64 },
}
