//! Quantum-side solvers: Gaussian moment propagation with an uncertainty
//! certificate, the spectral (position-frequency) form of the quantum
//! linear Boltzmann equation, the momentum-basis density-matrix evolution,
//! and the discrete Wigner transform connecting the two pictures.

mod gaussian;
pub(crate) mod kernel1d;
mod nalbe;
mod spectral;
mod wigner;

pub use gaussian::{gaussian_propagate, GaussianRecord, GaussianRun, GaussianState};
pub use nalbe::{
    nonabelian_grid_evolve, MomentumDensityMatrix, NalbeDiagnostics, NalbeRun,
};
pub use spectral::{
    wigner_spectral_evolve, SpectralMode, SpectralRecord, WignerSpectralField,
    WignerSpectralRun, WignerSpectralSolver,
};
pub use wigner::{wigner_transform, WignerField};

use crate::physics::{PhysicalParams, PhysicsError};

/// Failure modes of the quantum solvers.
#[derive(Debug, thiserror::Error)]
pub enum QuantumError {
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    /// Explicit collision update would amplify; the largest safe step is
    /// included.
    #[error("timestep {dt:.6e} exceeds the stability bound; largest safe value here is {max_dt:.6e}")]
    UnstableTimestep { dt: f64, max_dt: f64 },
    /// The covariance matrix dropped below the minimum-uncertainty bound,
    /// which a completely positive evolution can never do.
    #[error("uncertainty certificate violated at t = {t:.6e}: det = {det:.6e} < bound {bound:.6e}")]
    CertificateViolation { t: f64, det: f64, bound: f64 },
    /// The density matrix developed a negative eigenvalue beyond rounding.
    #[error("density matrix lost positivity at t = {t:.6e}: min eigenvalue {min_eig:.6e} (max {max_eig:.6e})")]
    PositivityLost { t: f64, min_eig: f64, max_eig: f64 },
    /// The adaptive integrator could not proceed.
    #[error("integration failed at t = {t:.6e}: {message}")]
    Integration { t: f64, message: String },
}

/// Decoherence rate of a spatial superposition of separation `delta_x`:
/// (eta / hbar^2) (M / beta) delta_x^2.
///
/// This is the long-wavelength rate at which off-diagonal position
/// coherence decays under the same friction that thermalises the momentum.
pub fn coherence_decay_rate(
    delta_x: f64,
    eta: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    params.validate()?;
    params.require_quantum()?;
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and >= 0, got {eta}"
        )));
    }
    if !delta_x.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "separation must be finite, got {delta_x}"
        )));
    }
    Ok(eta / (params.hbar * params.hbar) * params.thermal_momentum_sq() * delta_x * delta_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coherence_rate_scales_quadratically_and_needs_hbar() {
        let params = PhysicalParams::default_lab();
        let r1 = coherence_decay_rate(1.0, 0.05, &params).unwrap();
        let r2 = coherence_decay_rate(2.0, 0.05, &params).unwrap();
        assert_relative_eq!(r2, 4.0 * r1, max_relative = 1e-14);
        // M = beta = hbar = 1: rate = eta delta_x^2.
        assert_relative_eq!(r1, 0.05, max_relative = 1e-14);
        assert_eq!(coherence_decay_rate(0.0, 0.05, &params).unwrap(), 0.0);

        let classical = PhysicalParams::new(1.0, 0.1, 1.0, 1.0, 0.0).unwrap();
        assert!(coherence_decay_rate(1.0, 0.05, &classical).is_err());
        assert!(coherence_decay_rate(1.0, -1.0, &params).is_err());
        assert!(coherence_decay_rate(f64::NAN, 0.05, &params).is_err());
    }
}
