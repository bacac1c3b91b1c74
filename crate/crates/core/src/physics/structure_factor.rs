//! Dynamic structure factor of the background gas in its exact
//! Maxwell-Boltzmann form and in the quadratic (Brownian) approximation,
//! plus the energy-transfer kinematics and detailed-balance diagnostics.

use serde::{Deserialize, Serialize};

use super::{CrossSectionModel, MomentumVector, PhysicalParams, PhysicsError, TransferVector};

/// Which gas autocorrelation enters the collision kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureFactorForm {
    /// Exact form for a free ideal gas.
    MaxwellBoltzmann,
    /// Quadratic-in-transfer approximation; same detailed balance.
    Brownian,
}

/// Kinetic energy gained by the test particle in one collision:
/// E = q²/2M + p·q/M.
pub fn energy_transfer(q: TransferVector, p: MomentumVector, params: &PhysicalParams) -> f64 {
    (q.norm_sq() + 2.0 * p.dot(q)) / (2.0 * params.test_mass)
}

/// log S(q, E) as a function of transfer modulus and energy transfer.
/// Both forms share the prefactor √(βm/2π)/q; they differ in the exponent.
pub fn log_structure_factor_energy(
    form: StructureFactorForm,
    q_mod: f64,
    e: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    if !(q_mod > 0.0) || !q_mod.is_finite() {
        return Err(PhysicsError::Domain(format!(
            "structure factor requires transfer modulus > 0, got {q_mod}"
        )));
    }
    let beta = params.inv_temperature;
    let m = params.gas_mass;
    let prefactor = 0.5 * (beta * m / (2.0 * std::f64::consts::PI)).ln() - q_mod.ln();
    let exponent = match form {
        StructureFactorForm::MaxwellBoltzmann => {
            let u = 2.0 * m * e + q_mod * q_mod;
            -beta / (8.0 * m) * u * u / (q_mod * q_mod)
        }
        StructureFactorForm::Brownian => {
            -beta * q_mod * q_mod / (8.0 * m) - 0.5 * beta * e
        }
    };
    Ok(prefactor + exponent)
}

/// S(q, E); underflows to 0 for extreme exponents, use the log variant there.
pub fn structure_factor_energy(
    form: StructureFactorForm,
    q_mod: f64,
    e: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    Ok(log_structure_factor_energy(form, q_mod, e, params)?.exp())
}

/// One-dimensional reduced form on a signed transfer axis: `q` is the signed
/// transfer, `p_along` the momentum component along that axis. Used by the
/// momentum-lattice solvers; the prefactor carries |q|.
pub fn log_structure_factor_scalar(
    form: StructureFactorForm,
    q: f64,
    p_along: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    let e = (q * q + 2.0 * p_along * q) / (2.0 * params.test_mass);
    log_structure_factor_energy(form, q.abs(), e, params)
}

pub fn structure_factor_scalar(
    form: StructureFactorForm,
    q: f64,
    p_along: f64,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    Ok(log_structure_factor_scalar(form, q, p_along, params)?.exp())
}

/// S(q, E(q, p)) for three-dimensional transfer and momentum vectors.
pub fn structure_factor(
    form: StructureFactorForm,
    q: TransferVector,
    p: MomentumVector,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    let e = energy_transfer(q, p, params);
    structure_factor_energy(form, q.norm(), e, params)
}

pub fn structure_factor_mb(
    q: TransferVector,
    p: MomentumVector,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    structure_factor(StructureFactorForm::MaxwellBoltzmann, q, p, params)
}

pub fn structure_factor_brownian(
    q: TransferVector,
    p: MomentumVector,
    params: &PhysicalParams,
) -> Result<f64, PhysicsError> {
    structure_factor(StructureFactorForm::Brownian, q, p, params)
}

/// Detailed-balance defect [S(q,E) − e^(−βE) S(q,−E)] / S(q,E), evaluated in
/// log space so that extreme exponents (|βE| ≫ 1) stay finite. Identically
/// zero in exact arithmetic for both forms; exactly 0.0 at E = 0.
pub fn detailed_balance_residual(
    q_mod: f64,
    e: f64,
    params: &PhysicalParams,
    form: StructureFactorForm,
) -> Result<f64, PhysicsError> {
    let ls_pos = log_structure_factor_energy(form, q_mod, e, params)?;
    let ls_neg = log_structure_factor_energy(form, q_mod, -e, params)?;
    let delta = ls_neg - params.inv_temperature * e - ls_pos;
    Ok(-delta.exp_m1())
}

/// Gain-rate density per target: (|p+q|/|p|) · Σ(|q|) · S_MB(q, E(q,p)).
pub fn differential_cross_section(
    p: MomentumVector,
    q: TransferVector,
    params: &PhysicalParams,
    xs: &CrossSectionModel,
) -> Result<f64, PhysicsError> {
    let p_norm = p.norm();
    if p_norm == 0.0 {
        return Err(PhysicsError::Domain(
            "flux ratio undefined at |p| = 0".into(),
        ));
    }
    let s = structure_factor_mb(q, p, params)?;
    Ok(((p + q).norm() / p_norm) * xs.evaluate(q.norm()) * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::Vec3;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn defaults() -> PhysicalParams {
        PhysicalParams::default_lab()
    }

    fn equal_mass() -> PhysicalParams {
        PhysicalParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn energy_transfer_matches_kinematics() {
        let params = equal_mass();
        assert_eq!(
            energy_transfer(Vec3::ZERO, Vec3::new(3.0, -1.0, 2.0), &params),
            0.0
        );
        // Elastic symmetry point p·q = −q²/2.
        assert_eq!(
            energy_transfer(
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(-0.5, 0.0, 0.0),
                &params
            ),
            0.0
        );
        assert_eq!(
            energy_transfer(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), &params),
            2.5
        );
    }

    #[test]
    fn forms_coincide_at_zero_energy_transfer() {
        // 0.3520653267642995 = sqrt(1/2pi) exp(-1/8).
        let params = equal_mass();
        let q = Vec3::new(1.0, 0.0, 0.0);
        let p = Vec3::new(-0.5, 0.0, 0.0);
        let mb = structure_factor_mb(q, p, &params).unwrap();
        let br = structure_factor_brownian(q, p, &params).unwrap();
        assert_relative_eq!(mb, 0.3520653267642995, max_relative = 1e-14);
        assert_eq!(mb, br);
    }

    #[test]
    fn maxwell_form_is_brownian_times_gaussian_energy_penalty() {
        // S_MB = S_br · exp(−βmE²/(2q²)) is exact algebra of the exponents.
        let params = defaults();
        let beta = params.inv_temperature;
        let m = params.gas_mass;
        for (q, p) in [
            (Vec3::new(0.7, -0.2, 0.4), Vec3::new(1.5, 0.3, -2.0)),
            (Vec3::new(0.01, 0.0, 0.0), Vec3::new(-4.0, 1.0, 0.5)),
            (Vec3::new(3.0, 2.0, -1.0), Vec3::new(0.2, 0.0, 0.1)),
        ] {
            let e = energy_transfer(q, p, &params);
            let penalty = (-beta * m * e * e / (2.0 * q.norm_sq())).exp();
            let mb = structure_factor_mb(q, p, &params).unwrap();
            let br = structure_factor_brownian(q, p, &params).unwrap();
            assert_relative_eq!(mb, br * penalty, max_relative = 1e-12);
        }
    }

    #[test]
    fn brownian_form_converges_to_maxwell_as_mass_ratio_shrinks() {
        let q = Vec3::new(1.3, 0.0, 0.0);
        let p = Vec3::new(2.0, -1.0, 0.0);
        let mut last = f64::INFINITY;
        for m in [0.1, 0.01, 0.001] {
            let params = PhysicalParams::new(1.0, m, 1.0, 1.0, 1.0).unwrap();
            let mb = structure_factor_mb(q, p, &params).unwrap();
            let br = structure_factor_brownian(q, p, &params).unwrap();
            let gap = ((mb - br) / br).abs();
            assert!(gap < last, "gap must shrink with the mass ratio");
            last = gap;
        }
        // Gap is βmE²/2q² to leading order: ≈ 3.5e-3 at this (q,p) and m = 1e-3.
        assert!(last < 5e-3, "residual gap {last:.3e} too large at α = 0.001");
    }

    #[test]
    fn detailed_balance_holds_in_log_space_at_extreme_exponents() {
        // q below ~0.1 with |betaE| = 50 pushes the MB log-exponent past the
        // f64 rounding floor for a 1e-10 check, so the grid starts at 0.1.
        let params = defaults();
        let beta = params.inv_temperature;
        for form in [
            StructureFactorForm::MaxwellBoltzmann,
            StructureFactorForm::Brownian,
        ] {
            for q in [0.1, 0.5, 1.0, 3.0, 10.0] {
                for beta_e in [-50.0, -3.0, -0.1, 0.0, 0.1, 3.0, 50.0f64] {
                    let r = detailed_balance_residual(q, beta_e / beta, &params, form).unwrap();
                    assert!(
                        r.abs() < 1e-10,
                        "residual {r:.3e} at q={q}, betaE={beta_e}, {form:?}"
                    );
                }
                let r0 = detailed_balance_residual(q, 0.0, &params, form).unwrap();
                assert_eq!(r0, 0.0);
            }
        }
    }

    #[test]
    fn zero_transfer_is_a_domain_error() {
        let params = defaults();
        let p = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            structure_factor_mb(Vec3::ZERO, p, &params),
            Err(PhysicsError::Domain(_))
        ));
        assert!(log_structure_factor_scalar(
            StructureFactorForm::Brownian,
            0.0,
            1.0,
            &params
        )
        .is_err());
    }

    #[test]
    fn scalar_form_matches_vector_form_on_axis() {
        let params = defaults();
        for (q, p) in [(0.8, 1.7), (-0.8, 1.7), (2.5, -0.3), (-0.1, 0.0)] {
            for form in [
                StructureFactorForm::MaxwellBoltzmann,
                StructureFactorForm::Brownian,
            ] {
                let vector = structure_factor(
                    form,
                    Vec3::new(q, 0.0, 0.0),
                    Vec3::new(p, 0.0, 0.0),
                    &params,
                )
                .unwrap();
                let scalar = structure_factor_scalar(form, q, p, &params).unwrap();
                assert_relative_eq!(vector, scalar, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn gain_rate_density_factors_check_out() {
        let params = defaults();
        let xs = CrossSectionModel::constant(2.0).unwrap();
        let p = Vec3::new(-0.5, 0.0, 0.0);
        let q = Vec3::new(1.0, 0.0, 0.0);
        // Elastic point: |p+q| = |p| so the flux ratio is 1.
        let d = differential_cross_section(p, q, &params, &xs).unwrap();
        let s = structure_factor_mb(q, p, &params).unwrap();
        assert_relative_eq!(d, 2.0 * s, max_relative = 1e-14);

        let p2 = Vec3::new(0.3, 1.2, -0.4);
        let q2 = Vec3::new(-0.6, 0.2, 0.9);
        let d2 = differential_cross_section(p2, q2, &params, &xs).unwrap();
        let expect = (p2 + q2).norm() / p2.norm()
            * 2.0
            * structure_factor_mb(q2, p2, &params).unwrap();
        assert_relative_eq!(d2, expect, max_relative = 1e-14);

        let zero_xs = CrossSectionModel::constant(0.0).unwrap();
        assert_eq!(
            differential_cross_section(p2, q2, &params, &zero_xs).unwrap(),
            0.0
        );
        assert!(differential_cross_section(Vec3::ZERO, q2, &params, &xs).is_err());
    }

    fn rotate(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
        // Rodrigues rotation about a unit axis.
        let k = axis.scale(1.0 / axis.norm());
        let cos = angle.cos();
        let sin = angle.sin();
        let cross = Vec3::new(
            k.y * v.z - k.z * v.y,
            k.z * v.x - k.x * v.z,
            k.x * v.y - k.y * v.x,
        );
        v.scale(cos) + cross.scale(sin) + k.scale(k.dot(v) * (1.0 - cos))
    }

    proptest! {
        #[test]
        fn structure_factor_is_rotation_invariant_and_positive(
            qx in -3.0f64..3.0, qy in -3.0f64..3.0, qz in -3.0f64..3.0,
            px in -5.0f64..5.0, py in -5.0f64..5.0, pz in -5.0f64..5.0,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
            angle in 0.0f64..std::f64::consts::TAU,
        ) {
            let q = Vec3::new(qx, qy, qz);
            let p = Vec3::new(px, py, pz);
            let axis = Vec3::new(ax, ay, az);
            prop_assume!(q.norm() > 1e-3);
            prop_assume!(axis.norm() > 1e-3);
            let params = defaults();
            for form in [StructureFactorForm::MaxwellBoltzmann, StructureFactorForm::Brownian] {
                let s = structure_factor(form, q, p, &params).unwrap();
                prop_assert!(s.is_finite() && s > 0.0);
                let sr = structure_factor(
                    form,
                    rotate(q, axis, angle),
                    rotate(p, axis, angle),
                    &params,
                )
                .unwrap();
                prop_assert!((s - sr).abs() <= 1e-11 * s.abs().max(1.0));
            }
        }

        #[test]
        fn detailed_balance_residual_is_tiny_everywhere(
            q in 1e-3f64..20.0,
            beta_e in -50.0f64..50.0,
        ) {
            let params = defaults();
            for form in [StructureFactorForm::MaxwellBoltzmann, StructureFactorForm::Brownian] {
                let r = detailed_balance_residual(q, beta_e, &params, form).unwrap();
                // Tolerance tracks the rounding floor of the log values, which
                // grows like E²/q² for the MB exponent at small q.
                let scale = log_structure_factor_energy(form, q, beta_e, &params)
                    .unwrap()
                    .abs();
                let tol = 1e-10 + 32.0 * f64::EPSILON * scale;
                prop_assert!(r.abs() < tol, "residual {} at q={}, betaE={}", r, q, beta_e);
            }
        }
    }
}
