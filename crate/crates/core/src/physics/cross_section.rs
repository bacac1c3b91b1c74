use serde::{Deserialize, Serialize};

use super::PhysicsError;

/// Scattering weight Sigma(q) as a function of the momentum-transfer
/// magnitude. Its overall normalization is a free parameter of the model;
/// it simply scales all collision rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CrossSectionModel {
    /// Sigma(q) = sigma0.
    Constant { sigma0: f64 },
    /// Sigma(q) = sigma0 * exp(-q^2 / (2 q_width^2)).
    Gaussian { sigma0: f64, q_width: f64 },
    /// Piecewise-linear interpolation of (q, Sigma) samples; constant
    /// extrapolation beyond the first and last abscissa.
    Tabulated { points: Vec<(f64, f64)> },
}

impl CrossSectionModel {
    pub fn constant(sigma0: f64) -> Result<Self, PhysicsError> {
        let m = Self::Constant { sigma0 };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(sigma0: f64, q_width: f64) -> Result<Self, PhysicsError> {
        let m = Self::Gaussian { sigma0, q_width };
        m.validate()?;
        Ok(m)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self, PhysicsError> {
        let m = Self::Tabulated { points };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        match self {
            Self::Constant { sigma0 } => {
                if !sigma0.is_finite() || *sigma0 < 0.0 {
                    return Err(PhysicsError::InvalidParameter(format!(
                        "sigma0 must be finite and >= 0, got {sigma0}"
                    )));
                }
            }
            Self::Gaussian { sigma0, q_width } => {
                if !sigma0.is_finite() || *sigma0 < 0.0 {
                    return Err(PhysicsError::InvalidParameter(format!(
                        "sigma0 must be finite and >= 0, got {sigma0}"
                    )));
                }
                if !q_width.is_finite() || *q_width <= 0.0 {
                    return Err(PhysicsError::InvalidParameter(format!(
                        "q_width must be finite and > 0, got {q_width}"
                    )));
                }
            }
            Self::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(PhysicsError::InvalidParameter(
                        "tabulated cross-section needs at least 2 points".to_string(),
                    ));
                }
                for &(q, s) in points {
                    if !q.is_finite() || q < 0.0 {
                        return Err(PhysicsError::InvalidParameter(format!(
                            "tabulated abscissa must be finite and >= 0, got {q}"
                        )));
                    }
                    if !s.is_finite() || s < 0.0 {
                        return Err(PhysicsError::InvalidParameter(format!(
                            "tabulated value must be finite and >= 0, got {s}"
                        )));
                    }
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(PhysicsError::InvalidParameter(
                        "tabulated abscissae must be strictly increasing".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Evaluates Sigma at q = |q| >= 0. Always finite and nonnegative for a
    /// validated model.
    pub fn evaluate(&self, q: f64) -> f64 {
        match self {
            Self::Constant { sigma0 } => *sigma0,
            Self::Gaussian { sigma0, q_width } => {
                let r = q / q_width;
                sigma0 * (-0.5 * r * r).exp()
            }
            Self::Tabulated { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if q <= first.0 {
                    return first.1;
                }
                if q >= last.0 {
                    return last.1;
                }
                // partition_point returns the first index with abscissa > q.
                let hi = points.partition_point(|&(a, _)| a <= q);
                let (q0, s0) = points[hi - 1];
                let (q1, s1) = points[hi];
                s0 + (s1 - s0) * (q - q0) / (q1 - q0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tabulated_requires_increasing_abscissae() {
        assert!(CrossSectionModel::tabulated(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(CrossSectionModel::tabulated(vec![(1.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(CrossSectionModel::tabulated(vec![(0.0, 1.0)]).is_err());
        assert!(CrossSectionModel::tabulated(vec![(0.0, 1.0), (1.0, -0.5)]).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates_flat() {
        let xs = CrossSectionModel::tabulated(vec![(1.0, 2.0), (3.0, 6.0)]).unwrap();
        assert_relative_eq!(xs.evaluate(2.0), 4.0);
        assert_relative_eq!(xs.evaluate(0.0), 2.0);
        assert_relative_eq!(xs.evaluate(10.0), 6.0);
        assert_relative_eq!(xs.evaluate(1.0), 2.0);
        assert_relative_eq!(xs.evaluate(3.0), 6.0);
    }

    #[test]
    fn gaussian_decays_from_sigma0() {
        let xs = CrossSectionModel::gaussian(2.0, 1.5).unwrap();
        assert_relative_eq!(xs.evaluate(0.0), 2.0);
        assert_relative_eq!(xs.evaluate(1.5), 2.0 * (-0.5f64).exp());
    }

    #[test]
    fn rejects_negative_sigma0() {
        assert!(CrossSectionModel::constant(-1.0).is_err());
        assert!(CrossSectionModel::constant(0.0).is_ok());
    }
}
