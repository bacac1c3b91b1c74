//! Transport coefficients of the Brownian limit: the friction rate η, the
//! quantum position-diffusion coefficient D_xx = ηβħ²/16M, and the corrected
//! high-friction diffusion coefficient 1/(ηMβ) + D_xx.

use super::quadrature::integrate_adaptive;
use super::{CrossSectionModel, PhysicalParams, PhysicsError};

/// Friction rate η = (1/6)(n/M³)β√(βm/2π) ∫d³q q Σ(q) e^(−(β/8m)(1+2α)q²),
/// evaluated as a radial quadrature to relative tolerance 1e−10. The cutoff
/// puts the neglected Gaussian tail below e^(−100) of the integrand scale.
pub fn friction_coefficient(
    params: &PhysicalParams,
    xs: &CrossSectionModel,
) -> Result<f64, PhysicsError> {
    params.validate()?;
    xs.validate()?;
    let beta = params.inv_temperature;
    let m = params.gas_mass;
    let big_m = params.test_mass;
    let n = params.gas_density;
    let alpha = params.mass_ratio();
    let a = beta * (1.0 + 2.0 * alpha) / (8.0 * m);
    let q_max = 10.0 * (8.0 * m / (beta * (1.0 + 2.0 * alpha))).sqrt();
    let radial = integrate_adaptive(
        |q| q.powi(3) * xs.evaluate(q) * (-a * q * q).exp(),
        0.0,
        q_max,
        1e-10,
        1e-300,
    )?;
    let prefactor = (1.0 / 6.0) * (n / big_m.powi(3))
        * beta
        * (beta * m / (2.0 * std::f64::consts::PI)).sqrt()
        * 4.0
        * std::f64::consts::PI;
    Ok(prefactor * radial.value)
}

/// Closed form of `friction_coefficient` for constant Σ = σ0:
/// η = (64π/3) n σ0 m² √(βm/2π) / (M³ β (1+2α)²).
pub fn friction_constant_sigma_closed_form(params: &PhysicalParams, sigma0: f64) -> f64 {
    let beta = params.inv_temperature;
    let m = params.gas_mass;
    let big_m = params.test_mass;
    let n = params.gas_density;
    let alpha = params.mass_ratio();
    (64.0 * std::f64::consts::PI / 3.0) * n * sigma0 * m * m
        * (beta * m / (2.0 * std::f64::consts::PI)).sqrt()
        / (big_m.powi(3) * beta * (1.0 + 2.0 * alpha).powi(2))
}

/// Position-diffusion coefficient of the quantum Kramers equation:
/// D_xx = ηβħ²/(16M) = (η/4)·Δx²_th. Zero in the classical limit ħ = 0.
pub fn position_diffusion_coefficient(
    eta: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and >= 0, got {eta}"
        )));
    }
    Ok(eta * params.inv_temperature * params.hbar * params.hbar / (16.0 * params.test_mass))
}

/// High-friction diffusion coefficient for the position marginal:
/// D = 1/(ηMβ) + D_xx, combining the Einstein term with the quantum
/// position-diffusion correction.
pub fn smoluchowski_diffusion(eta: f64, params: &PhysicalParams) -> Result<f64, PhysicsError> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and > 0, got {eta}"
        )));
    }
    let einstein = 1.0 / (eta * params.test_mass * params.inv_temperature);
    Ok(einstein + position_diffusion_coefficient(eta, params)?)
}

/// Ratio of the corrected to the classical diffusion coefficient:
/// D/D_Einstein = 1 + (ηβħ)²/16, the square ratio of the relaxation time
/// scale ħβ/4 to the friction time 1/η.
pub fn quantum_correction_ratio(eta: f64, params: &PhysicalParams) -> Result<f64, PhysicsError> {
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(PhysicsError::InvalidParameter(format!(
            "friction rate must be finite and >= 0, got {eta}"
        )));
    }
    let t = eta * params.inv_temperature * params.hbar;
    Ok(1.0 + t * t / 16.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn defaults() -> PhysicalParams {
        PhysicalParams::default_lab()
    }

    #[test]
    fn quadrature_matches_closed_form_for_constant_sigma() {
        let params = defaults();
        let xs = CrossSectionModel::constant(1.0).unwrap();
        let eta = friction_coefficient(&params, &xs).unwrap();
        let closed = friction_constant_sigma_closed_form(&params, 1.0);
        assert_relative_eq!(eta, closed, max_relative = 1e-10);
        // Frozen oracle for M = beta = n = sigma0 = 1, m = 0.1.
        assert_relative_eq!(eta, 5.871595996453351e-2, max_relative = 1e-10);
    }

    #[test]
    fn frozen_oracles_for_other_parameter_points() {
        // sigma0 = 30 with default masses.
        let params = defaults();
        let xs30 = CrossSectionModel::constant(30.0).unwrap();
        assert_relative_eq!(
            friction_coefficient(&params, &xs30).unwrap(),
            1.7614787989360052,
            max_relative = 1e-10
        );
        // Lighter gas, alpha = 0.01.
        let light = PhysicalParams::new(1.0, 0.01, 1.0, 1.0, 1.0).unwrap();
        let xs = CrossSectionModel::constant(1.0).unwrap();
        assert_relative_eq!(
            friction_coefficient(&light, &xs).unwrap(),
            2.5699123666600025e-4,
            max_relative = 1e-10
        );
    }

    #[test]
    fn zero_cross_section_gives_zero_friction() {
        let params = defaults();
        let xs = CrossSectionModel::constant(0.0).unwrap();
        assert_eq!(friction_coefficient(&params, &xs).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_sigma_matches_fixed_grid_simpson_oracle() {
        let params = defaults();
        let xs = CrossSectionModel::gaussian(2.0, 1.3).unwrap();
        let eta = friction_coefficient(&params, &xs).unwrap();

        let beta = params.inv_temperature;
        let m = params.gas_mass;
        let alpha = params.mass_ratio();
        let a = beta * (1.0 + 2.0 * alpha) / (8.0 * m);
        let q_max = 10.0 * (8.0 * m / (beta * (1.0 + 2.0 * alpha))).sqrt();
        let n_panels = 20_000usize;
        let h = q_max / n_panels as f64;
        let f = |q: f64| q.powi(3) * xs.evaluate(q) * (-a * q * q).exp();
        let mut acc = f(0.0) + f(q_max);
        for i in 1..n_panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        let simpson = acc * h / 3.0;
        let prefactor = (1.0 / 6.0) * beta
            * (beta * m / (2.0 * std::f64::consts::PI)).sqrt()
            * 4.0
            * std::f64::consts::PI;
        assert_relative_eq!(eta, prefactor * simpson, max_relative = 1e-6);

        // Gaussian Sigma also has a closed form: shift a by 1/(2 q_w^2).
        let a_eff = a + 0.5 / (1.3f64 * 1.3);
        let closed = prefactor * 2.0 / (2.0 * a_eff * a_eff);
        assert_relative_eq!(eta, closed, max_relative = 1e-10);
    }

    #[test]
    fn position_diffusion_follows_frozen_oracle_and_classical_limit() {
        let params = defaults();
        let eta = 5.871595996453351e-2;
        let dxx = position_diffusion_coefficient(eta, &params).unwrap();
        assert_relative_eq!(dxx, 3.669747497783344e-3, max_relative = 1e-12);
        // D_xx = (eta/4) * thermal_position_sq as an identity.
        assert_relative_eq!(
            dxx,
            0.25 * eta * params.thermal_position_sq(),
            max_relative = 1e-14
        );
        let classical = PhysicalParams::new(1.0, 0.1, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(position_diffusion_coefficient(eta, &classical).unwrap(), 0.0);
        assert!(position_diffusion_coefficient(-1.0, &params).is_err());
    }

    #[test]
    fn corrected_diffusion_and_ratio_are_consistent() {
        // Frozen oracles at sigma0 = 30 defaults.
        let params = defaults();
        let eta = 1.7614787989360052;
        let d = smoluchowski_diffusion(eta, &params).unwrap();
        let einstein = 1.0 / (eta * params.test_mass * params.inv_temperature);
        assert_relative_eq!(einstein, 0.5677048174545359, max_relative = 1e-12);
        assert_relative_eq!(
            d,
            0.5677048174545359 + 0.11009242493350033,
            max_relative = 1e-12
        );
        let ratio = quantum_correction_ratio(eta, &params).unwrap();
        assert_relative_eq!(ratio, 1.1939254724438144, max_relative = 1e-12);
        assert_relative_eq!(d / einstein, ratio, max_relative = 1e-12);
        // hbar = 0 collapses the ratio to 1 exactly.
        let classical = PhysicalParams::new(1.0, 0.1, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(quantum_correction_ratio(eta, &classical).unwrap(), 1.0);
        assert!(smoluchowski_diffusion(0.0, &params).is_err());
    }
}
