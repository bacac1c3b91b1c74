//! Phase-space and position-space grids with their discrete fields.
//!
//! Position is periodic with cell-centred nodes; momentum is node-centred
//! on [-p_max, p_max] and closed with zero-flux boundaries. All integrals
//! are plain Riemann sums with uniform weights dx * dp, which is what makes
//! the finite-volume updates conserve mass to rounding.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::physics::{PhysicalParams, PhysicsError};

/// Uniform tensor grid over one position and one momentum coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub p_max: f64,
    pub n_p: usize,
}

impl PhaseSpaceGrid {
    pub fn new(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        p_max: f64,
        n_p: usize,
    ) -> Result<Self, PhysicsError> {
        if !(x_max.is_finite() && x_min.is_finite()) || x_max <= x_min {
            return Err(PhysicsError::InvalidParameter(format!(
                "position window [{x_min}, {x_max}] is empty"
            )));
        }
        if !p_max.is_finite() || p_max <= 0.0 {
            return Err(PhysicsError::InvalidParameter(format!(
                "momentum cutoff p_max = {p_max} must be positive"
            )));
        }
        if n_x < 8 || n_p < 8 {
            return Err(PhysicsError::InvalidParameter(format!(
                "grid {n_x} x {n_p} too coarse; need at least 8 nodes per axis"
            )));
        }
        Ok(Self { x_min, x_max, n_x, p_max, n_p })
    }

    /// Checks that the momentum window holds a thermal distribution for
    /// these parameters: p_max >= 6 thermal momenta.
    pub fn validate_for(&self, params: &PhysicalParams) -> Result<(), PhysicsError> {
        let p_th = params.thermal_momentum_sq().sqrt();
        if self.p_max < 6.0 * p_th {
            return Err(PhysicsError::InvalidParameter(format!(
                "p_max = {} clips the Maxwell distribution; need at least {}",
                self.p_max,
                6.0 * p_th
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / (self.n_p - 1) as f64
    }

    /// Cell-centred position node (periodic direction).
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// Momentum node; j = 0 and j = n_p - 1 sit on the closed boundary.
    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.dp()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx() * self.dp()
    }
}

/// Distribution sampled on a [`PhaseSpaceGrid`]; data\[\[i, j\]\] is f(x_i, p_j).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    pub grid: PhaseSpaceGrid,
    pub data: Array2<f64>,
    pub time: f64,
}

/// First and second moments of a phase-space field at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMoments {
    pub t: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub cov_xp: f64,
    pub norm: f64,
}

impl PhaseSpaceField {
    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self { grid, data: Array2::zeros((grid.n_x, grid.n_p)), time: 0.0 }
    }

    /// Product of a discrete Gaussian in x and one in p, normalised so the
    /// Riemann-sum norm is exactly 1.
    pub fn separable_gaussian(
        grid: PhaseSpaceGrid,
        x0: f64,
        var_x: f64,
        p0: f64,
        var_p: f64,
    ) -> Result<Self, PhysicsError> {
        if var_x <= 0.0 || var_p <= 0.0 {
            return Err(PhysicsError::InvalidParameter(format!(
                "initial variances must be positive, got var_x = {var_x}, var_p = {var_p}"
            )));
        }
        let mut field = Self::zeros(grid);
        for i in 0..grid.n_x {
            let gx = (-(grid.x(i) - x0).powi(2) / (2.0 * var_x)).exp();
            for j in 0..grid.n_p {
                let gp = (-(grid.p(j) - p0).powi(2) / (2.0 * var_p)).exp();
                field.data[[i, j]] = gx * gp;
            }
        }
        field.normalise();
        Ok(field)
    }

    /// Uniform in x, Maxwell in p at the gas temperature: the discrete
    /// stationary state of the momentum operator.
    pub fn uniform_maxwell(grid: PhaseSpaceGrid, params: &PhysicalParams) -> Self {
        let var_p = params.thermal_momentum_sq();
        let mut field = Self::zeros(grid);
        for j in 0..grid.n_p {
            let gp = (-grid.p(j).powi(2) / (2.0 * var_p)).exp();
            for i in 0..grid.n_x {
                field.data[[i, j]] = gp;
            }
        }
        field.normalise();
        field
    }

    /// Arbitrary x-profile times a Maxwell momentum distribution.
    pub fn from_position_profile(
        profile: &PositionField,
        p_max: f64,
        n_p: usize,
        params: &PhysicalParams,
    ) -> Result<Self, PhysicsError> {
        let grid =
            PhaseSpaceGrid::new(profile.x_min, profile.x_max, profile.data.len(), p_max, n_p)?;
        let var_p = params.thermal_momentum_sq();
        let mut field = Self::zeros(grid);
        for i in 0..grid.n_x {
            for j in 0..grid.n_p {
                field.data[[i, j]] = profile.data[i] * (-grid.p(j).powi(2) / (2.0 * var_p)).exp();
            }
        }
        field.normalise();
        Ok(field)
    }

    pub fn norm(&self) -> f64 {
        self.data.sum() * self.grid.cell_volume()
    }

    pub fn normalise(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.data.mapv_inplace(|v| v / n);
        }
    }

    pub fn moments(&self) -> PhaseMoments {
        let w = self.grid.cell_volume();
        let (mut norm, mut sx, mut sp, mut sxx, mut spp, mut sxp) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.grid.n_x {
            let x = self.grid.x(i);
            for j in 0..self.grid.n_p {
                let p = self.grid.p(j);
                let f = self.data[[i, j]] * w;
                norm += f;
                sx += x * f;
                sp += p * f;
                sxx += x * x * f;
                spp += p * p * f;
                sxp += x * p * f;
            }
        }
        let mean_x = sx / norm;
        let mean_p = sp / norm;
        PhaseMoments {
            t: self.time,
            mean_x,
            mean_p,
            var_x: sxx / norm - mean_x * mean_x,
            var_p: spp / norm - mean_p * mean_p,
            cov_xp: sxp / norm - mean_x * mean_p,
            norm,
        }
    }

    /// Position marginal: integrate over p with uniform weight dp.
    pub fn position_marginal(&self) -> PositionField {
        let dp = self.grid.dp();
        let data = (0..self.grid.n_x)
            .map(|i| (0..self.grid.n_p).map(|j| self.data[[i, j]]).sum::<f64>() * dp)
            .collect();
        PositionField {
            x_min: self.grid.x_min,
            x_max: self.grid.x_max,
            data,
            time: self.time,
        }
    }

    /// Momentum marginal: integrate over x with uniform weight dx.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        (0..self.grid.n_p)
            .map(|j| (0..self.grid.n_x).map(|i| self.data[[i, j]]).sum::<f64>() * dx)
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes the field as `x, p, f` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "p", "f"])?;
        for i in 0..self.grid.n_x {
            for j in 0..self.grid.n_p {
                wtr.write_record([
                    format!("{:.12e}", self.grid.x(i)),
                    format!("{:.12e}", self.grid.p(j)),
                    format!("{:.12e}", self.data[[i, j]]),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Density over the periodic position coordinate alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionField {
    pub x_min: f64,
    pub x_max: f64,
    pub data: Vec<f64>,
    pub time: f64,
}

impl PositionField {
    pub fn gaussian(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        x0: f64,
        var_x: f64,
    ) -> Result<Self, PhysicsError> {
        if x_max <= x_min {
            return Err(PhysicsError::InvalidParameter(format!(
                "position window [{x_min}, {x_max}] is empty"
            )));
        }
        if n_x < 8 {
            return Err(PhysicsError::InvalidParameter(format!(
                "position grid n_x = {n_x} too coarse; need at least 8 nodes"
            )));
        }
        if var_x <= 0.0 {
            return Err(PhysicsError::InvalidParameter(format!(
                "initial variance must be positive, got {var_x}"
            )));
        }
        let dx = (x_max - x_min) / n_x as f64;
        let data: Vec<f64> = (0..n_x)
            .map(|i| {
                let x = x_min + (i as f64 + 0.5) * dx;
                (-(x - x0).powi(2) / (2.0 * var_x)).exp()
            })
            .collect();
        let mut field = Self { x_min, x_max, data, time: 0.0 };
        field.normalise();
        Ok(field)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.data.len() as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.dx()
    }

    pub fn normalise(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.data.iter_mut().for_each(|v| *v /= n);
        }
    }

    pub fn mean(&self) -> f64 {
        let w = self.dx();
        let norm = self.norm();
        (0..self.data.len()).map(|i| self.x(i) * self.data[i] * w).sum::<f64>() / norm
    }

    pub fn variance(&self) -> f64 {
        let w = self.dx();
        let norm = self.norm();
        let mean = self.mean();
        (0..self.data.len())
            .map(|i| (self.x(i) - mean).powi(2) * self.data[i] * w)
            .sum::<f64>()
            / norm
    }

    /// L1 distance between two densities on the same grid.
    pub fn l1_distance(&self, other: &Self) -> Result<f64, PhysicsError> {
        if self.data.len() != other.data.len()
            || self.x_min != other.x_min
            || self.x_max != other.x_max
        {
            return Err(PhysicsError::InvalidParameter(
                "cannot compare position fields on different grids".into(),
            ));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.dx())
    }

    /// Writes the density as `x, sigma` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["x", "sigma"])?;
        for i in 0..self.data.len() {
            wtr.write_record([
                format!("{:.12e}", self.x(i)),
                format!("{:.12e}", self.data[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> PhaseSpaceGrid {
        PhaseSpaceGrid::new(-10.0, 10.0, 64, 6.0, 65).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(PhaseSpaceGrid::new(1.0, -1.0, 64, 6.0, 64).is_err());
        assert!(PhaseSpaceGrid::new(-1.0, 1.0, 4, 6.0, 64).is_err());
        assert!(PhaseSpaceGrid::new(-1.0, 1.0, 64, 6.0, 7).is_err());
        assert!(PhaseSpaceGrid::new(-1.0, 1.0, 64, 0.0, 64).is_err());

        let params = PhysicalParams::default_lab();
        let narrow = PhaseSpaceGrid::new(-1.0, 1.0, 64, 3.0, 64).unwrap();
        assert!(narrow.validate_for(&params).is_err());
        assert!(grid().validate_for(&params).is_ok());
    }

    #[test]
    fn nodes_span_the_window() {
        let g = grid();
        assert_relative_eq!(g.p(0), -6.0);
        assert_relative_eq!(g.p(g.n_p - 1), 6.0);
        // Momentum nodes are symmetric, so an odd count pins p = 0 exactly.
        assert_eq!(g.p(g.n_p / 2), 0.0);
        // Cell-centred x nodes stay strictly inside the periodic window.
        assert!(g.x(0) > g.x_min && g.x(g.n_x - 1) < g.x_max);
        assert_relative_eq!(g.x(g.n_x - 1) + 0.5 * g.dx(), g.x_max);
    }

    #[test]
    fn separable_gaussian_moments_match_inputs() {
        // Wide momentum window: truncating at 5 sigma would already shift
        // the mean by more than the tolerance below.
        let wide = PhaseSpaceGrid::new(-10.0, 10.0, 64, 9.0, 97).unwrap();
        let field = PhaseSpaceField::separable_gaussian(wide, 1.5, 0.8, -0.4, 1.2).unwrap();
        let m = field.moments();
        assert_relative_eq!(m.norm, 1.0, max_relative = 1e-12);
        assert_relative_eq!(m.mean_x, 1.5, max_relative = 1e-8);
        assert_relative_eq!(m.mean_p, -0.4, epsilon = 1e-8);
        assert_relative_eq!(m.var_x, 0.8, max_relative = 1e-6);
        assert_relative_eq!(m.var_p, 1.2, max_relative = 1e-6);
        assert!(m.cov_xp.abs() < 1e-10);
    }

    #[test]
    fn marginals_are_consistent_with_moments() {
        let field = PhaseSpaceField::separable_gaussian(grid(), 0.5, 1.0, 0.0, 1.0).unwrap();
        let pos = field.position_marginal();
        assert_relative_eq!(pos.norm(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(pos.mean(), field.moments().mean_x, max_relative = 1e-10);
        assert_relative_eq!(pos.variance(), field.moments().var_x, max_relative = 1e-10);

        let mom = field.momentum_marginal();
        let dp = field.grid.dp();
        let total: f64 = mom.iter().sum::<f64>() * dp;
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn l1_distance_demands_matching_grids() {
        let a = PositionField::gaussian(-5.0, 5.0, 32, 0.0, 1.0).unwrap();
        let b = PositionField::gaussian(-5.0, 5.0, 64, 0.0, 1.0).unwrap();
        assert!(a.l1_distance(&b).is_err());
        assert_relative_eq!(a.l1_distance(&a).unwrap(), 0.0);
    }
}
