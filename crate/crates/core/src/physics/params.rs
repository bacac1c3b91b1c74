use serde::{Deserialize, Serialize};

use super::PhysicsError;

/// Physical inputs shared by every model in the crate.
///
/// Units are left to the caller; all formulas are written so that any
/// consistent unit system works. `hbar = 0` is a valid input and selects the
/// classical theory; operations that are intrinsically quantum reject it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Tracer (test particle) mass M.
    pub test_mass: f64,
    /// Gas particle mass m.
    pub gas_mass: f64,
    /// Inverse temperature beta = 1/(k_B T).
    pub inv_temperature: f64,
    /// Gas number density n.
    pub gas_density: f64,
    /// Reduced Planck constant; 0 selects classical formulas.
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(
        test_mass: f64,
        gas_mass: f64,
        inv_temperature: f64,
        gas_density: f64,
        hbar: f64,
    ) -> Result<Self, PhysicsError> {
        let p = Self {
            test_mass,
            gas_mass,
            inv_temperature,
            gas_density,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let positive = [
            (self.test_mass, "test_mass"),
            (self.gas_mass, "gas_mass"),
            (self.inv_temperature, "inv_temperature"),
            (self.gas_density, "gas_density"),
        ];
        for (v, name) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(PhysicsError::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !self.hbar.is_finite() || self.hbar < 0.0 {
            return Err(PhysicsError::InvalidParameter(format!(
                "hbar must be finite and >= 0, got {}",
                self.hbar
            )));
        }
        Ok(())
    }

    /// Mass ratio alpha = m/M, the small parameter of the heavy-tracer limit.
    pub fn mass_ratio(&self) -> f64 {
        self.gas_mass / self.test_mass
    }

    /// Thermal momentum spread squared of the tracer, M/beta (per component).
    pub fn thermal_momentum_sq(&self) -> f64 {
        self.test_mass / self.inv_temperature
    }

    /// Thermal position spread squared, beta hbar^2 / (4 M).
    pub fn thermal_position_sq(&self) -> f64 {
        self.inv_temperature * self.hbar * self.hbar / (4.0 * self.test_mass)
    }

    /// Requires hbar > 0; quantum-only operations call this first.
    pub fn require_quantum(&self) -> Result<(), PhysicsError> {
        if self.hbar > 0.0 {
            Ok(())
        } else {
            Err(PhysicsError::Domain(
                "operation requires hbar > 0".to_string(),
            ))
        }
    }

    /// Reference parameter set used across the test suite and default
    /// configs: M = beta = n = hbar = 1, m = 0.1.
    pub fn default_lab() -> Self {
        Self {
            test_mass: 1.0,
            gas_mass: 0.1,
            inv_temperature: 1.0,
            gas_density: 1.0,
            hbar: 1.0,
        }
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::default_lab()
    }
}
